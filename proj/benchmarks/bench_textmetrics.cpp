#include <benchmark/benchmark.h>

#include <string>

#include "factgym/rewards.hpp"
#include "factgym/rng.hpp"
#include "factgym/textmetrics.hpp"

namespace {

std::string random_text(factgym::Rng& rng, std::size_t words) {
  static const char* vocab[] = {"boat", "sea", "caption", "the", "rescue", "Red", "Mediterranean", "found", "alive"};
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += vocab[rng.index(9)];
  }
  return s;
}

void BM_EditDistance(benchmark::State& state) {
  factgym::Rng rng(1);
  const auto a = random_text(rng, static_cast<std::size_t>(state.range(0)));
  const auto b = random_text(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(factgym::text::edit_distance(a, b));
  state.SetComplexityN(static_cast<std::int64_t>(a.size()));
}
BENCHMARK(BM_EditDistance)->RangeMultiplier(4)->Range(4, 256)->Complexity(benchmark::oNSquared);

void BM_RougeL(benchmark::State& state) {
  factgym::Rng rng(2);
  const auto a = random_text(rng, static_cast<std::size_t>(state.range(0)));
  const auto b = random_text(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(factgym::text::rouge_l(a, b));
}
BENCHMARK(BM_RougeL)->RangeMultiplier(4)->Range(4, 256);

void BM_ScoreMd(benchmark::State& state) {
  factgym::Sample s;
  s.id = "s";
  s.task = factgym::TaskKind::MD;
  s.label = factgym::Label::Fake;
  s.fake_entity = factgym::make_entity("Mediterranean Sea", factgym::EntityType::Location);
  const std::string response =
      "<think>First, the caption shows a boat. However, the Mediterranean Sea does not match the footage. "
      "In conclusion, the title is manipulated.</think><answer>Fake</answer>";
  const factgym::rewards::ScoreDeps deps;
  for (auto _ : state) benchmark::DoNotOptimize(factgym::rewards::score_text(response, s, deps));
}
BENCHMARK(BM_ScoreMd);

}  // namespace
