#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <torch/torch.h>

#include "shadowcomp/errors.hpp"
#include "shadowcomp/geometry.hpp"
#include "shadowcomp/losses.hpp"

namespace {

using namespace shadowcomp;
using namespace shadowcomp::losses;
using geometry::BBox;

torch::Tensor as_tensor(const BBox& b) {
  return torch::tensor({b.x, b.y, b.w, b.h}, torch::kFloat64).unsqueeze(0);
}

BBox random_box(std::mt19937& rng) {
  std::uniform_real_distribution<double> pos(20.0, 60.0), size(5.0, 40.0);
  return BBox{pos(rng), pos(rng), size(rng), size(rng)};
}

TEST(LossReg, DelegatesToGeometry) {
  std::mt19937 rng(1);
  for (int i = 0; i < 30; ++i) {
    const BBox p = random_box(rng), g = random_box(rng);
    EXPECT_EQ(loss_reg(p, g), geometry::ciou_loss(p, g));
    EXPECT_NEAR(loss_reg(as_tensor(p), as_tensor(g)).item<double>(), geometry::ciou_loss(p, g), 1e-9);
  }
  EXPECT_NEAR(loss_reg(as_tensor(BBox{5, 5, 3, 4}), as_tensor(BBox{5, 5, 3, 4})).item<double>(), 0.0, 1e-9);
}

TEST(LossReg, AutogradMatchesAnalyticGradient) {
  std::mt19937 rng(2);
  for (int i = 0; i < 30; ++i) {
    const BBox p = random_box(rng), g = random_box(rng);
    auto pt = as_tensor(p).requires_grad_(true);
    loss_reg(pt, as_tensor(g)).backward();
    const auto analytic = geometry::ciou_loss_with_grad(p, g);
    for (int k = 0; k < 4; ++k)
      EXPECT_NEAR(pt.grad()[0][k].item<double>(), analytic.grad[static_cast<std::size_t>(k)], 1e-7);
  }
}

TEST(LossReg, BatchMean) {
  const BBox a{10, 10, 4, 4}, b{12, 11, 5, 3}, c{30, 30, 6, 6};
  const auto pred = torch::cat({as_tensor(a), as_tensor(c)});
  const auto gt = torch::cat({as_tensor(b), as_tensor(b)});
  EXPECT_NEAR(loss_reg(pred, gt).item<double>(),
              0.5 * (geometry::ciou_loss(a, b) + geometry::ciou_loss(c, b)), 1e-9);
}

TEST(LossShape, Cases) {
  const auto ones = torch::ones({1, 1, 32, 32}), zeros = torch::zeros({1, 1, 32, 32});
  EXPECT_EQ(loss_shape(ones, ones).item<double>(), 0.0);
  EXPECT_EQ(loss_shape(ones, zeros).item<double>(), 1.0);
  EXPECT_THROW(loss_shape(ones, torch::zeros({1, 1, 16, 16})), Error);
  torch::manual_seed(3);
  const auto a = torch::rand({2, 1, 32, 32}, torch::kFloat64), b = torch::rand({2, 1, 32, 32}, torch::kFloat64);
  double sum = 0.0;
  auto pa = a.accessor<double, 4>(), pb = b.accessor<double, 4>();
  for (int n = 0; n < 2; ++n)
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) sum += std::abs(pa[n][0][r][c] - pb[n][0][r][c]);
  EXPECT_NEAR(loss_shape(a, b).item<double>(), sum / 2048.0, 1e-7);
  EXPECT_NEAR(loss_mask(a, b).item<double>(), sum / 2048.0, 1e-7);
}

TEST(LossRec, Cases) {
  torch::manual_seed(4);
  const auto out = torch::rand({2, 3, 8, 8}, torch::kFloat64), tgt = torch::rand({2, 3, 8, 8}, torch::kFloat64);
  const auto mask = (torch::rand({2, 1, 8, 8}) > 0.5).to(torch::kFloat64);
  EXPECT_EQ(loss_rec(out, out, mask).item<double>(), 0.0);
  EXPECT_EQ(loss_rec(out, tgt, torch::zeros_like(mask)).item<double>(), 0.0);
  EXPECT_NEAR(loss_rec(out, tgt, torch::ones_like(mask)).item<double>(),
              (out - tgt).pow(2).mean().item<double>(), 1e-12);

  auto po = out.accessor<double, 4>(), pt = tgt.accessor<double, 4>(), pm = mask.accessor<double, 4>();
  double sum = 0.0, area = 0.0;
  for (int n = 0; n < 2; ++n)
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        area += pm[n][0][r][c];
        for (int ch = 0; ch < 3; ++ch) {
          const double d = po[n][ch][r][c] * pm[n][0][r][c] - pt[n][ch][r][c] * pm[n][0][r][c];
          sum += d * d;
        }
      }
  EXPECT_NEAR(loss_rec(out, tgt, mask).item<double>(), sum / (2 * 3 * 64), 1e-7);
  EXPECT_NEAR(loss_rec(out, tgt, mask, RecNorm::kRegion).item<double>(), sum / (3 * area), 1e-7);
}

TEST(Losses, FiniteDifferenceGradients) {
  torch::manual_seed(5);
  const auto tgt = torch::rand({1, 3, 4, 4}, torch::kFloat64);
  const auto mask = (torch::rand({1, 1, 4, 4}) > 0.4).to(torch::kFloat64);
  auto x = torch::rand({1, 3, 4, 4}, torch::kFloat64).requires_grad_(true);
  auto fn = [&](const torch::Tensor& v) { return loss_rec(v, tgt, mask) + loss_mask(v, tgt); };
  fn(x).backward();
  const double h = 1e-6;
  for (int64_t i = 0; i < x.numel(); ++i) {
    auto plus = x.detach().clone(), minus = x.detach().clone();
    plus.view(-1)[i] += h;
    minus.view(-1)[i] -= h;
    const double fd = (fn(plus).item<double>() - fn(minus).item<double>()) / (2 * h);
    const double g = x.grad().view(-1)[i].item<double>();
    EXPECT_LT(std::abs(g - fd), 1e-3 * std::max(1.0, std::abs(fd)));
  }
}

TEST(LossTotal, Sum) {
  const auto zero = loss_total(0, 0, 0, 0);
  EXPECT_EQ(zero.total, 0.0);
  const auto b = loss_total(1, 2, 3, 4);
  EXPECT_EQ(b.total, 10.0);
  const auto t = loss_total(torch::tensor(0.25), torch::tensor(0.5), torch::tensor(1.0), torch::tensor(2.0));
  const auto bd = t.breakdown();
  EXPECT_NEAR(bd.total, bd.reg + bd.shape + bd.mask + bd.rec, 1e-6);
  EXPECT_NEAR(bd.total, 3.75, 1e-6);
}

TEST(RecNorm, Strings) {
  EXPECT_EQ(rec_norm_from_string(to_string(RecNorm::kRegion)), RecNorm::kRegion);
  EXPECT_EQ(rec_norm_from_string("full"), RecNorm::kFull);
  EXPECT_THROW(rec_norm_from_string("pixels"), Error);
}

}  // namespace
