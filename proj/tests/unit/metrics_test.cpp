#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shadowcomp/errors.hpp"
#include "shadowcomp/metrics.hpp"

namespace {

using namespace shadowcomp;
using namespace shadowcomp::metrics;

TEST(Rmse, Identical) {
  std::mt19937 rng(1);
  const Image a = oracle::random_image(rng, 8, 8);
  EXPECT_EQ(rmse(a, a), 0.0);
  EXPECT_EQ(psnr(a, a), kInf);
}

TEST(Rmse, ConstantOffset) {
  Image a(6, 6, 0.2f), b(6, 6, 0.2f + 10.0f / 255.0f);
  EXPECT_NEAR(rmse(a, b), 10.0, 1e-4);
}

TEST(Rmse, EmptyRegionThrows) {
  const Image a(4, 4);
  const Mask none(4, 4);
  EXPECT_THROW(rmse(a, a, &none), Error);
}

TEST(Psnr, ClosedForm) {
  EXPECT_DOUBLE_EQ(psnr_from_rmse(255.0), 0.0);
  EXPECT_NEAR(psnr_from_rmse(60.0), 12.56778, 1e-5);
  EXPECT_EQ(psnr_from_rmse(0.0), kInf);
}

TEST(Oracles, RmsePsnrBer) {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const Image a = oracle::random_image(rng, 16, 16), b = oracle::random_image(rng, 16, 16);
    Mask region = oracle::random_mask(rng, 16, 16, 0.3);
    region.at(0, 0) = 1.0f;
    EXPECT_NEAR(rmse(a, b), oracle::rmse(a, b, nullptr), 1e-6);
    EXPECT_NEAR(rmse(a, b, &region), oracle::rmse(a, b, &region), 1e-6);
    EXPECT_NEAR(psnr(a, b), oracle::psnr(a, b, nullptr), 1e-6);
    EXPECT_NEAR(psnr(a, b, &region), oracle::psnr(a, b, &region), 1e-6);
    Mask gt = oracle::random_mask(rng, 16, 16);
    gt.at(0, 0) = 1.0f;
    gt.at(0, 1) = 0.0f;
    const Mask pred = oracle::random_mask(rng, 16, 16);
    EXPECT_NEAR(ber(pred, gt).value, oracle::ber(pred, gt), 1e-9);
  }
}

TEST(Ber, PerfectAndInverted) {
  std::mt19937 rng(5);
  Mask gt = oracle::random_mask(rng, 16, 16);
  gt.at(0, 0) = 1.0f;
  gt.at(0, 1) = 0.0f;
  Mask inv(16, 16);
  for (std::size_t i = 0; i < gt.size(); ++i) inv.data[i] = 1.0f - gt.data[i];
  EXPECT_EQ(ber(gt, gt).value, 0.0);
  EXPECT_DOUBLE_EQ(ber(inv, gt).value, 100.0);
}

TEST(Ber, ShadowRegionUsesMissRate) {
  Mask gt(8, 8), pred(8, 8);
  for (int c = 0; c < 8; ++c) gt.at(2, c) = 1.0f;
  for (int c = 0; c < 6; ++c) pred.at(2, c) = 1.0f;
  const auto r = ber(pred, gt, &gt);
  EXPECT_TRUE(r.single_class);
  EXPECT_DOUBLE_EQ(r.value, 25.0);
}

TEST(Ber, Errors) {
  const Mask zeros(8, 8), ones(8, 8, 1.0f);
  try {
    ber(zeros, zeros);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateMask);
  }
  try {
    ber(zeros, ones, &zeros);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyRegion);
  }
}

TEST(BoxIou, Cases) {
  using geometry::BBox;
  EXPECT_DOUBLE_EQ(metrics::box_iou(BBox{4, 4, 2, 2}, BBox{4, 4, 2, 2}), 1.0);
  EXPECT_DOUBLE_EQ(metrics::box_iou(BBox{0, 0, 1, 1}, BBox{3, 0, 1, 1}), 0.0);
  EXPECT_NEAR(metrics::box_iou(BBox{0, 0, 1, 1}, BBox{0.5, 0, 1, 1}), 1.0 / 3.0, 1e-12);
}

TEST(ShapeL1, IdenticalCropsAreZero) {
  Mask m(32, 32);
  for (int r = 4; r < 12; ++r)
    for (int c = 6; c < 20; ++c) m.at(r, c) = 1.0f;
  const auto b = geometry::bbox_from_mask(m);
  EXPECT_NEAR(shape_l1(m, b, m, b), 0.0, 1e-12);
  // Translated copy with its own box crops to the same shape.
  Mask t(32, 32);
  for (int r = 14; r < 22; ++r)
    for (int c = 10; c < 24; ++c) t.at(r, c) = 1.0f;
  EXPECT_NEAR(shape_l1(t, geometry::bbox_from_mask(t), m, b), 0.0, 1e-12);
}

synth::ShadowTuple tiny_tuple(const std::string& id, std::mt19937& rng) {
  synth::ShadowTuple t;
  t.meta.id = id;
  t.target = oracle::random_image(rng, 16, 16);
  t.composite = t.target;
  t.fg_shadow = Mask(16, 16);
  for (int r = 3; r < 9; ++r)
    for (int c = 2; c < 12; ++c) t.fg_shadow.at(r, c) = 1.0f;
  t.fg_object = Mask(16, 16);
  t.bg_object = Mask(16, 16);
  t.bg_shadow = Mask(16, 16);
  t.meta.shadow_box = geometry::bbox_from_mask(t.fg_shadow);
  return t;
}

TEST(Evaluate, PerfectTuple) {
  std::mt19937 rng(3);
  const auto t = tiny_tuple("a", rng);
  const Prediction p{"a", t.target, t.fg_shadow, t.fg_shadow, t.meta.shadow_box};
  const auto row = evaluate_tuple(p, t);
  EXPECT_EQ(row.rmse, 0.0);
  EXPECT_EQ(row.s_rmse, 0.0);
  EXPECT_EQ(row.ber, 0.0);
  EXPECT_EQ(row.s_ber, 0.0);
  EXPECT_EQ(row.box_iou, 1.0);
  EXPECT_EQ(row.shape_l1, 0.0);
  EXPECT_EQ(row.psnr, kInf);
}

TEST(Evaluate, AggregateIsMeanAndRoundTrips) {
  std::mt19937 rng(4);
  const std::vector<synth::ShadowTuple> tuples{tiny_tuple("a", rng), tiny_tuple("b", rng)};
  std::vector<Prediction> preds;
  for (const auto& t : tuples) {
    Mask refined = t.fg_shadow;
    refined.at(3, 2) = 0.0f;
    preds.push_back({t.meta.id, oracle::random_image(rng, 16, 16), refined, t.fg_shadow,
                     geometry::BBox{7, 6, 9, 6}});
  }
  const auto report = evaluate_dataset(preds, tuples, {{"note", "x"}});
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_NEAR(report.aggregate.rmse, 0.5 * (report.rows[0].rmse + report.rows[1].rmse), 1e-12);
  EXPECT_NEAR(report.aggregate.s_ber, 0.5 * (report.rows[0].s_ber + report.rows[1].s_ber), 1e-12);
  EXPECT_NEAR(report.aggregate.box_iou, 0.5 * (report.rows[0].box_iou + report.rows[1].box_iou), 1e-12);
  const auto back = report_from_json(nlohmann::json::parse(to_json(report).dump()));
  EXPECT_EQ(back, report);
}

TEST(Report, InfinitySurvivesJson) {
  MetricsReport r;
  TupleMetrics row;
  row.id = "x";
  row.psnr = kInf;
  r.rows = {row};
  r.aggregate = aggregate(r.rows);
  r.count = 1;
  const auto back = report_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.rows[0].psnr, kInf);
}

TEST(Report, TableHasOneLinePerModel) {
  MetricsReport r;
  r.rows = {TupleMetrics{}};
  r.aggregate = aggregate(r.rows);
  const auto text = format_table({{"first", r}, {"second", r}});
  EXPECT_NE(text.find("first"), std::string::npos);
  EXPECT_NE(text.find("second"), std::string::npos);
  EXPECT_NE(text.find("S-BER"), std::string::npos);
}

}  // namespace
