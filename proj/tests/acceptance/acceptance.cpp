// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "oracles.hpp"
#include "shadowcomp/experiments.hpp"
#include "shadowcomp/geometry.hpp"
#include "shadowcomp/metrics.hpp"
#include "shadowcomp/network.hpp"
#include "shadowcomp/synthdata.hpp"
#include "shadowcomp/trainer.hpp"

namespace {

using namespace shadowcomp;
using geometry::BBox;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

BBox random_box(std::mt19937& rng) {
  std::uniform_real_distribution<double> pos(0.0, 256.0), size(2.0, 120.0);
  return BBox{pos(rng), pos(rng), size(rng), size(rng)};
}

// --- 1 ---------------------------------------------------------------------

double overlap(const BBox& p, const BBox& g) {
  const double iw = std::max(0.0, std::min(p.x + p.w / 2, g.x + g.w / 2) - std::max(p.x - p.w / 2, g.x - g.w / 2));
  const double ih = std::max(0.0, std::min(p.y + p.h / 2, g.y + g.h / 2) - std::max(p.y - p.h / 2, g.y - g.h / 2));
  return iw * ih / (p.w * p.h + g.w * g.h - iw * ih);
}

double aspect_term(const BBox& p, const BBox& g) {
  return 4.0 / (std::numbers::pi * std::numbers::pi) * std::pow(std::atan(g.w / g.h) - std::atan(p.w / p.h), 2);
}

double ciou_with_alpha(const BBox& p, const BBox& g, double alpha) {
  const double cw = std::max(p.x + p.w / 2, g.x + g.w / 2) - std::min(p.x - p.w / 2, g.x - g.w / 2);
  const double ch = std::max(p.y + p.h / 2, g.y + g.h / 2) - std::min(p.y - p.h / 2, g.y - g.h / 2);
  const double rho2 = (p.x - g.x) * (p.x - g.x) + (p.y - g.y) * (p.y - g.y);
  return 1 - overlap(p, g) + rho2 / (cw * cw + ch * ch) + alpha * aspect_term(p, g);
}

Outcome geometry_suite() {
  const auto start = Clock::now();
  std::mt19937 rng(101);
  double round_trip = 0.0, self_ciou = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const BBox o = random_box(rng), s = random_box(rng);
    const BBox d = geometry::decode_regression(o, geometry::encode_regression(o, s));
    round_trip = std::max({round_trip, std::abs(d.x - s.x), std::abs(d.y - s.y), std::abs(d.w - s.w),
                           std::abs(d.h - s.h)});
    self_ciou = std::max(self_ciou, std::abs(geometry::ciou_loss(s, s)));
  }
  double worst_grad = 0.0;
  int checked = 0;
  while (checked < 50) {
    const BBox p = random_box(rng), g = random_box(rng);
    if (overlap(p, g) < 0.05) continue;
    const double iou = overlap(p, g), v = aspect_term(p, g);
    const double alpha = v == 0.0 ? 0.0 : v / ((1 - iou) + v);
    const auto analytic = geometry::ciou_loss_with_grad(p, g);
    const double h = 1e-4;
    double diff2 = 0.0, norm2 = 0.0;
    for (int k = 0; k < 4; ++k) {
      BBox plus = p, minus = p;
      double* fp[] = {&plus.x, &plus.y, &plus.w, &plus.h};
      double* fm[] = {&minus.x, &minus.y, &minus.w, &minus.h};
      *fp[k] += h;
      *fm[k] -= h;
      const double fd = (ciou_with_alpha(plus, g, alpha) - ciou_with_alpha(minus, g, alpha)) / (2 * h);
      const double a = analytic.grad[static_cast<std::size_t>(k)];
      diff2 += (a - fd) * (a - fd);
      norm2 += fd * fd;
    }
    worst_grad = std::max(worst_grad, std::sqrt(diff2 / norm2));
    ++checked;
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {round_trip <= 1e-6 && self_ciou <= 1e-6 && worst_grad < 1e-3 && secs < 10.0,
          fmt("round trip max err %.2e, max |CIoU(B,B)| %.2e, worst grad rel err %.2e, %.2fs", round_trip,
              self_ciou, worst_grad, secs)};
}

// --- 2 ---------------------------------------------------------------------

Outcome morphology_suite() {
  const auto start = Clock::now();
  int mismatches = 0;
  for (int bits = 0; bits < 65536; ++bits) {
    Mask m(4, 4);
    for (int i = 0; i < 16; ++i) m.data[static_cast<std::size_t>(i)] = (bits >> i) & 1 ? 1.0f : 0.0f;
    if (metrics::d_hole(m) != oracle::d_hole(m) || metrics::d_frag(m) != oracle::d_frag(m)) ++mismatches;
  }
  std::mt19937 rng(202);
  std::uniform_real_distribution<double> density(0.2, 0.8);
  for (int i = 0; i < 200; ++i) {
    const Mask m = oracle::random_mask(rng, 32, 32, density(rng));
    if (metrics::d_hole(m) != oracle::d_hole(m) || metrics::d_frag(m) != oracle::d_frag(m)) ++mismatches;
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  return {mismatches == 0 && secs < 60.0, fmt("%d mismatches over 65736 masks, %.2fs", mismatches, secs)};
}

// --- 3 ---------------------------------------------------------------------

Outcome metric_suite() {
  std::mt19937 rng(303);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Image a = oracle::random_image(rng, 16, 16), b = oracle::random_image(rng, 16, 16);
    Mask gt = oracle::random_mask(rng, 16, 16);
    gt.at(0, 0) = 1.0f;
    gt.at(0, 1) = 0.0f;
    const Mask pred = oracle::random_mask(rng, 16, 16);
    worst = std::max({worst, std::abs(metrics::rmse(a, b) - oracle::rmse(a, b, nullptr)),
                      std::abs(metrics::rmse(a, b, &gt) - oracle::rmse(a, b, &gt)),
                      std::abs(metrics::psnr(a, b) - oracle::psnr(a, b, nullptr)),
                      std::abs(metrics::psnr(a, b, &gt) - oracle::psnr(a, b, &gt)),
                      std::abs(metrics::ber(pred, gt).value - oracle::ber(pred, gt))});
  }
  return {worst <= 1e-6, fmt("max abs deviation %.2e over 100 cases", worst)};
}

// --- 4 ---------------------------------------------------------------------

Outcome tuple_suite() {
  synth::GeneratorConfig cfg;
  std::size_t tuples = 0, background = 0, outside = 0;
  // Chunks keep memory flat; seed blocks are far apart so no scene repeats.
  for (std::uint64_t chunk = 0; chunk < 10; ++chunk) {
    for (const auto& t : synth::generate_tuples(cfg, 50, 7'000'000 + chunk * 100'000)) {
      ++tuples;
      const std::size_t plane = t.composite.plane();
      for (std::size_t p = 0; p < plane; ++p) {
        const bool bg = t.bg_object.data[p] > 0.5f || t.bg_shadow.data[p] > 0.5f;
        const bool fs = t.fg_shadow.data[p] > 0.5f;
        bool bg_bad = false, out_bad = false;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          const float c = t.composite.data[ch * plane + p], g = t.target.data[ch * plane + p];
          if (bg && c != g) bg_bad = true;
          if (!fs && std::abs(c - g) > synth::kDelta) out_bad = true;
        }
        background += bg_bad;
        outside += out_bad;
      }
    }
  }
  return {tuples == 500 && background == 0 && outside == 0,
          fmt("%zu tuples, %zu background violations, %zu changed pixels outside M_fs", tuples, background,
              outside)};
}

// --- 5 ---------------------------------------------------------------------

torch::nn::Linear projection(int in, int out, std::uint64_t seed) {
  torch::manual_seed(seed);
  return torch::nn::Linear(torch::nn::LinearOptions(in, out).bias(false));
}

Outcome attention_suite() {
  using torch::indexing::Slice;
  const int c = 6;
  auto features = torch::zeros({c, 8, 8});
  for (int k = 0; k < c; ++k)
    for (int r = 0; r < 8; ++r)
      for (int col = 0; col < 8; ++col) features[k][r][col] = 0.2 * std::cos(0.5 * r - 0.4 * col + k);
  auto refined = torch::zeros({8, 8});
  refined.index_put_({Slice(0, 3), Slice(1, 5)}, 1.0);
  refined[1][2] = 0.5;
  auto bg = torch::zeros({8, 8});
  const int pix[3][2] = {{5, 0}, {6, 3}, {7, 7}};
  for (const auto& p : pix) bg[p[0]][p[1]] = 1.0;
  auto comp = torch::full({3, 8, 8}, 0.75);
  const double colors[3][3] = {{0.2, 0.3, 0.4}, {0.35, 0.1, 0.25}, {0.05, 0.45, 0.3}};
  for (int i = 0; i < 3; ++i)
    for (int ch = 0; ch < 3; ++ch) comp[ch][pix[i][0]][pix[i][1]] = colors[i][ch];
  const auto proj = projection(c, 4, 55);
  const auto r = net::attentive_fill(features, refined, bg, comp, proj, net::FillOptions{});

  std::vector<double> f_fs(c, 0.0);
  double mass = 0.0;
  for (int row = 0; row < 8; ++row)
    for (int col = 0; col < 8; ++col) {
      const double w = refined[row][col].item<double>();
      mass += w;
      for (int k = 0; k < c; ++k) f_fs[static_cast<std::size_t>(k)] += w * features[k][row][col].item<double>();
    }
  for (auto& v : f_fs) v /= mass;
  std::vector<std::vector<double>> weight(4), f_bs, col_list;
  const auto w = proj->weight.detach().to(torch::kFloat64);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < c; ++j) weight[static_cast<std::size_t>(i)].push_back(w[i][j].item<double>());
  for (int i = 0; i < 3; ++i) {
    std::vector<double> f;
    for (int k = 0; k < c; ++k) f.push_back(features[k][pix[i][0]][pix[i][1]].item<double>());
    f_bs.push_back(f);
    col_list.emplace_back(colors[i], colors[i] + 3);
  }
  std::vector<double> attention;
  const auto expected = oracle::attention_mean(weight, f_fs, f_bs, col_list, &attention);
  double hand = 0.0;
  for (int i = 0; i < 3; ++i) {
    hand = std::max(hand, std::abs(r.attention[i].item<double>() - attention[static_cast<std::size_t>(i)]));
    hand = std::max(hand, std::abs(r.target_mean[i].item<double>() - expected[static_cast<std::size_t>(i)]));
  }

  auto row_bg = torch::zeros({8, 8});
  row_bg.index_put_({7, Slice()}, 1.0);
  const auto rand_comp = torch::rand({3, 8, 8});
  const auto u = net::attentive_fill(torch::full({c, 8, 8}, 0.4), refined, row_bg, rand_comp, proj,
                                     net::FillOptions{});
  const double uniform =
      (u.target_mean - rand_comp.index({Slice(), 7, Slice()}).mean(1)).abs().max().item<double>();

  torch::manual_seed(505);
  double sum_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto b = (torch::rand({8, 8}) > 0.5).to(torch::kFloat32);
    b[0][0] = 1.0;
    const auto x = net::attentive_fill(torch::randn({c, 8, 8}) * 2, torch::rand({8, 8}) + 0.01, b,
                                       torch::rand({3, 8, 8}), proj, net::FillOptions{});
    sum_err = std::max(sum_err, std::abs(x.attention.to(torch::kFloat64).sum().item<double>() - 1.0));
  }
  return {hand <= 1e-6 && uniform <= 1e-6 && sum_err <= 1e-5,
          fmt("fixture err %.2e, uniform-mean err %.2e, max |sum a - 1| %.2e", hand, uniform, sum_err)};
}

// --- 6 ---------------------------------------------------------------------

Outcome compositing_suite() {
  const auto tuples = harness::make_tuples(synth::Domain::kA, 20, 8'000'000, 128);
  const harness::TensorDataset data(tuples, 32);
  std::int64_t zero_pixels = 0, violations = 0;
  torch::NoGradGuard no_grad;
  for (int pass = 0; pass < 100; ++pass) {
    net::NetworkConfig cfg;
    cfg.resolution = 128;
    cfg.width_multiplier = 0.25;
    cfg.init_seed = static_cast<std::uint64_t>(pass / 10);
    cfg.refine = pass % 2 == 0;
    net::ShadowNet model(cfg);
    model->eval();
    const auto batch = data.batch({pass % static_cast<int64_t>(data.size())});
    const auto o = model->forward(batch.inputs);
    const auto zero = (o.refined_mask == 0).expand_as(o.output);
    zero_pixels += zero.sum().item<int64_t>() / 3;
    violations += (o.output.masked_select(zero) != batch.inputs.composite.masked_select(zero)).sum().item<int64_t>();
  }
  return {violations == 0 && zero_pixels > 0,
          fmt("%lld zero-mask pixels checked over 100 passes, %lld differ", static_cast<long long>(zero_pixels),
              static_cast<long long>(violations))};
}

// --- 7 ---------------------------------------------------------------------

Outcome overfit_check() {
  const auto config = harness::RunConfig::desk_scale();
  const auto tuples = harness::make_tuples(synth::Domain::kA, 8, config.seed, config.resolution);
  const auto start = Clock::now();
  const auto r = harness::run_overfit(tuples, config);
  const double mins = std::chrono::duration<double>(Clock::now() - start).count() / 60.0;
  return {r.passed(), fmt("loss %.4f -> %.4f (%.1f%%) in %lld steps, training S-BER %.2f, %.1f min",
                          r.initial_loss, r.final_loss, 100.0 * r.final_loss / r.initial_loss,
                          static_cast<long long>(r.steps), r.report.aggregate.s_ber, mins)};
}

// --- 8 ---------------------------------------------------------------------

Outcome cross_domain_check() {
  const auto start = Clock::now();
  const auto r = harness::run_cross_domain(harness::RunConfig::desk_scale(), {});
  const double mins = std::chrono::duration<double>(Clock::now() - start).count() / 60.0;
  std::cout << r.table;
  const double pre = r.pretrain_only.aggregate.s_ber, tuned = r.finetuned.aggregate.s_ber;
  return {tuned <= pre, fmt("domain-B S-BER: A only %.2f, B only %.2f, A -> B %.2f, %.1f min", pre,
                            r.target_only.aggregate.s_ber, tuned, mins)};
}

// --- 9 ---------------------------------------------------------------------

Outcome parameter_check() {
  const auto n = net::count_parameters(*net::ShadowNet(net::NetworkConfig{}));
  const double m = static_cast<double>(n) / 1e6;
  return {m >= 8.8 && m <= 14.3,
          fmt("%lld parameters (%.2fM; reference 10.97M, ratio %.3f)", static_cast<long long>(n), m, m / 10.97)};
}

// --- 10 --------------------------------------------------------------------

Outcome ablation_check() {
  auto config = harness::RunConfig::desk_scale();
  config.steps = 600;
  const auto tuples = harness::make_tuples(synth::Domain::kA, 8, config.seed, config.resolution);
  const auto r = harness::run_ablation(tuples, config);
  std::cout << r.table;
  const bool ran = r.refined.count == tuples.size() && r.no_refine.count == tuples.size();
  return {ran, fmt("d_frag full %.3f vs w/o refinement %.3f; S-BER %.2f vs %.2f", r.refined.aggregate.d_frag,
                   r.no_refine.aggregate.d_frag, r.refined.aggregate.s_ber, r.no_refine.aggregate.s_ber)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"geometry oracle suite", geometry_suite},
      {"morphology oracle equivalence", morphology_suite},
      {"metric oracle equivalence", metric_suite},
      {"tuple consistency", tuple_suite},
      {"attention correctness", attention_suite},
      {"compositing identity", compositing_suite},
      {"overfit check", overfit_check},
      {"cross-domain protocol", cross_domain_check},
      {"parameter accounting", parameter_check},
      {"ablation pathway", ablation_check},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
