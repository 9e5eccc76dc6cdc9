#include <benchmark/benchmark.h>

#include "factgym/dpo.hpp"
#include "factgym/grpo.hpp"

namespace {

using namespace factgym;

void BM_GroupAdvantages(benchmark::State& state) {
  Rng rng(3);
  std::vector<double> r(static_cast<std::size_t>(state.range(0)));
  for (double& v : r) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(grpo::group_advantages(r, 1e-8));
}
BENCHMARK(BM_GroupAdvantages)->Arg(5)->Arg(16)->Arg(64);

void BM_GrpoStep(benchmark::State& state) {
  grpo::GrpoConfig cfg;
  cfg.threads = static_cast<int>(state.range(0));
  std::vector<policy::SynthItem> batch;
  for (std::uint64_t i = 0; i < 32; ++i) batch.push_back(policy::draw_item(policy::SynthConfig{}, {}, "bench", i));
  const policy::ToyPolicy old, ref;
  const rewards::ScoreDeps deps;
  std::size_t step = 0;
  for (auto _ : state) {
    policy::ToyPolicy cur;
    benchmark::DoNotOptimize(grpo::grpo_step(cur, old, ref, batch, cfg, deps, step++));
  }
}
BENCHMARK(BM_GrpoStep)->Arg(1)->Arg(4)->UseRealTime();

void BM_DpoBatch(benchmark::State& state) {
  const auto pairs = dpo::synth_preference_pairs(policy::SynthConfig{}, 64, 1);
  const policy::ToyPolicy cur, ref;
  std::vector<double> grad(policy::ToyPolicy::kParamCount);
  for (auto _ : state) {
    std::fill(grad.begin(), grad.end(), 0.0);
    benchmark::DoNotOptimize(dpo::batch_terms(cur, ref, pairs, 0.1, grad));
  }
}
BENCHMARK(BM_DpoBatch);

}  // namespace
