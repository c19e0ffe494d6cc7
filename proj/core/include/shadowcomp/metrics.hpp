#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "shadowcomp/geometry.hpp"
#include "shadowcomp/raster.hpp"
#include "shadowcomp/synthdata.hpp"

namespace shadowcomp::metrics {

/// Area threshold and connectivity used by the hole/fragment measures.
inline constexpr std::int64_t kAreaThreshold = 50;

/// Reference values for ground-truth masks of the real benchmark test set.
/// Documentation only; the dataset is not shipped.
inline constexpr double kReferenceGtHole = 1.076;
inline constexpr double kReferenceGtFrag = 15.657;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Root-mean-square error on the 0-255 scale. With `region`, only pixels
/// where region > 0.5 count (all three channels). Throws kEmptyRegion.
double rmse(const Image& pred, const Image& gt, const Mask* region = nullptr);

/// 20 log10(255 / rmse); +inf on an exact match.
double psnr(const Image& pred, const Image& gt, const Mask* region = nullptr);
double psnr_from_rmse(double rmse_value) noexcept;

struct BerResult {
  double value = 0.0;
  // Set when the region holds one class only and the single-class error
  // rate was reported instead of the balanced rate.
  bool single_class = false;
};

/// Balanced error rate in percent on masks binarized at 0.5.
/// Whole image (region == nullptr): throws kDegenerateMask when either class
/// is absent from `gt`. Region mode: throws kEmptyRegion for an empty region.
BerResult ber(const Mask& pred, const Mask& gt, const Mask* region = nullptr);

/// Pixels changed by filling enclosed background components (8-connected,
/// not touching the border) with area < 50.
std::int64_t d_hole(const Mask& m);

/// Pixels changed by removing 8-connected foreground components with area < 50.
std::int64_t d_frag(const Mask& m);

double box_iou(const geometry::BBox& pred, const geometry::BBox& gt);

/// Mean |crop(pred, pred_box) - crop(gt, gt_box)| over 32x32 resized crops.
double shape_l1(const Mask& pred, const geometry::BBox& pred_box, const Mask& gt,
                const geometry::BBox& gt_box, int size = 32);

/// Model outputs needed to score one tuple.
struct Prediction {
  std::string id;
  Image output;             // predicted target image
  Mask refined_mask;        // final shadow mask
  Mask rough_mask;          // box-placed shape prediction
  geometry::BBox shadow_box;  // predicted shadow box
};

struct TupleMetrics {
  std::string id;
  double rmse = 0.0;
  double s_rmse = 0.0;
  double psnr = 0.0;
  double s_psnr = 0.0;
  double ber = 0.0;
  double s_ber = 0.0;
  double d_hole = 0.0;
  double d_frag = 0.0;
  double box_iou = 0.0;
  double shape_l1 = 0.0;
  bool s_ber_single_class = false;

  bool operator==(const TupleMetrics&) const = default;
};

struct MetricsReport {
  std::vector<TupleMetrics> rows;
  TupleMetrics aggregate;  // arithmetic means; id = "mean"
  std::size_t count = 0;
  std::size_t s_ber_single_class_count = 0;
  nlohmann::json config = nlohmann::json::object();

  bool operator==(const MetricsReport&) const = default;
};

TupleMetrics evaluate_tuple(const Prediction& pred, const synth::ShadowTuple& tuple);

/// Scores every tuple (matched by id) and aggregates by arithmetic mean.
MetricsReport evaluate_dataset(const std::vector<Prediction>& predictions,
                               const std::vector<synth::ShadowTuple>& tuples,
                               nlohmann::json config = nlohmann::json::object());

/// Recomputes the aggregate row from `rows`.
TupleMetrics aggregate(const std::vector<TupleMetrics>& rows);

nlohmann::json to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

/// Plain-text table: one row per named report, grouped as
/// RMSE S-RMSE PSNR S-PSNR | BER S-BER | d_hole d_frag | box-IoU shape-L1.
std::string format_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace shadowcomp::metrics
