#include <random>

#include <benchmark/benchmark.h>

#include "shadowcomp/components.hpp"
#include "shadowcomp/metrics.hpp"

namespace {

using namespace shadowcomp;

Mask noise(int side, double p) {
  std::mt19937 rng(7);
  std::bernoulli_distribution on(p);
  Mask m(side, side);
  for (float& v : m.data) v = on(rng) ? 1.0f : 0.0f;
  return m;
}

void BM_LabelComponents(benchmark::State& state) {
  const Mask m = noise(static_cast<int>(state.range(0)), 0.45);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::label_components(m));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_LabelComponents)->Arg(64)->Arg(256);

void BM_HoleAndFragmentCounts(benchmark::State& state) {
  const Mask m = noise(256, 0.6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::d_hole(m));
    benchmark::DoNotOptimize(metrics::d_frag(m));
  }
}
BENCHMARK(BM_HoleAndFragmentCounts);

}  // namespace
