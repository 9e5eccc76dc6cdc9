#include <benchmark/benchmark.h>

#include <cmath>

#include "factgym/fabricate.hpp"

namespace {

using namespace factgym;
using namespace factgym::fabricate;

Store make_store(std::size_t n, std::size_t dim) {
  Rng rng(7);
  std::vector<EmbeddingRecord> recs(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = recs[i];
    r.id = "r" + std::to_string(i);
    r.title = "Boat capsizes in Red Sea";
    r.entities = {make_entity("Red Sea", EntityType::Location)};
    r.img_vec.resize(dim);
    r.txt_vec.resize(dim);
    for (double& v : r.img_vec) v = rng.normal();
    for (double& v : r.txt_vec) v = rng.normal();
    normalize(r.img_vec);
    normalize(r.txt_vec);
  }
  return build_store(std::move(recs));
}

void BM_RetrieveTop3(benchmark::State& state) {
  const Store store = make_store(static_cast<std::size_t>(state.range(0)), 64);
  Rng rng(1);
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(retrieve(store, store[q], Strategy::V2T, 3, rng));
    q = (q + 1) % store.size();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RetrieveTop3)->RangeMultiplier(10)->Range(1000, 100000);

void BM_RetrieveRandom(benchmark::State& state) {
  const Store store = make_store(10000, 8);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(retrieve(store, store[0], Strategy::RANDOM, 3, rng));
}
BENCHMARK(BM_RetrieveRandom);

}  // namespace
