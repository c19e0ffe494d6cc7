#include <benchmark/benchmark.h>
#include <torch/torch.h>

#include "shadowcomp/network.hpp"

namespace {

using namespace shadowcomp::net;

NetworkInputs inputs(int batch, int res) {
  torch::manual_seed(3);
  NetworkInputs in;
  in.composite = torch::rand({batch, 3, res, res});
  in.fg_object = torch::zeros({batch, 1, res, res});
  in.fg_object.index_put_({torch::indexing::Slice(), 0, torch::indexing::Slice(res / 4, res / 2),
                           torch::indexing::Slice(res / 4, res / 2)},
                          1.0);
  in.bg_object = torch::zeros({batch, 1, res, res});
  in.bg_shadow = torch::zeros({batch, 1, res, res});
  in.bg_shadow.index_put_({torch::indexing::Slice(), 0, torch::indexing::Slice(-res / 8, torch::indexing::None),
                           torch::indexing::Slice(0, res / 4)},
                          1.0);
  const double c = (res / 4 + res / 2 - 1) / 2.0, s = res / 4.0;
  in.object_box = torch::tensor({c, c, s, s}, torch::kFloat32).repeat({batch, 1});
  return in;
}

void BM_Forward(benchmark::State& state) {
  torch::set_num_threads(1);
  NetworkConfig cfg;
  cfg.resolution = static_cast<int>(state.range(0));
  cfg.width_multiplier = state.range(1) / 100.0;
  ShadowNet net(cfg);
  net->eval();
  torch::NoGradGuard g;
  const auto in = inputs(1, cfg.resolution);
  for (auto _ : state) benchmark::DoNotOptimize(net->forward(in).output);
}
BENCHMARK(BM_Forward)->Args({128, 25})->Args({256, 100})->Unit(benchmark::kMillisecond);

}  // namespace
