#include <random>

#include <benchmark/benchmark.h>

#include "shadowcomp/geometry.hpp"

namespace {

using namespace shadowcomp;

void BM_CropResize(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  std::mt19937 rng(1);
  Mask m(256, 256);
  for (float& v : m.data) v = static_cast<float>(rng() % 2);
  const geometry::BBox box{120.3, 97.8, 60.5, 41.2};
  for (auto _ : state) benchmark::DoNotOptimize(geometry::crop_resize(m, box, size));
}
BENCHMARK(BM_CropResize)->Arg(32)->Arg(64);

void BM_PlaceInverse(benchmark::State& state) {
  const Mask patch(32, 32, 0.5f);
  const geometry::BBox box{120.3, 97.8, 60.5, 41.2};
  for (auto _ : state) benchmark::DoNotOptimize(geometry::place_inverse(patch, box, 256, 256));
}
BENCHMARK(BM_PlaceInverse);

void BM_CiouWithGrad(benchmark::State& state) {
  const geometry::BBox p{50, 60, 20, 30}, g{55, 58, 25, 22};
  for (auto _ : state) benchmark::DoNotOptimize(geometry::ciou_loss_with_grad(p, g));
}
BENCHMARK(BM_CiouWithGrad);

}  // namespace
