#include "shadowcomp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "shadowcomp/components.hpp"
#include "shadowcomp/errors.hpp"

namespace shadowcomp::metrics {

using nlohmann::json;

namespace {

void require_same(const Image& a, const Image& b, const Mask* region) {
  if (!a.same_shape(b) || (region != nullptr && !a.same_shape(*region)))
    throw Error(ErrorKind::kShapeMismatch, "metric inputs differ in size");
}

std::vector<std::uint8_t> bits(const Mask& m) {
  std::vector<std::uint8_t> b(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) b[i] = m.data[i] > 0.5f ? 1 : 0;
  return b;
}

json number(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  if (std::isnan(v)) return json("nan");
  return json(v);
}

double number_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

json row_json(const TupleMetrics& m) {
  return json{{"id", m.id},
              {"rmse", number(m.rmse)},
              {"s_rmse", number(m.s_rmse)},
              {"psnr", number(m.psnr)},
              {"s_psnr", number(m.s_psnr)},
              {"ber", number(m.ber)},
              {"s_ber", number(m.s_ber)},
              {"d_hole", number(m.d_hole)},
              {"d_frag", number(m.d_frag)},
              {"box_iou", number(m.box_iou)},
              {"shape_l1", number(m.shape_l1)},
              {"s_ber_single_class", m.s_ber_single_class}};
}

TupleMetrics row_from(const json& j) {
  TupleMetrics m;
  m.id = j.at("id").get<std::string>();
  m.rmse = number_from(j.at("rmse"));
  m.s_rmse = number_from(j.at("s_rmse"));
  m.psnr = number_from(j.at("psnr"));
  m.s_psnr = number_from(j.at("s_psnr"));
  m.ber = number_from(j.at("ber"));
  m.s_ber = number_from(j.at("s_ber"));
  m.d_hole = number_from(j.at("d_hole"));
  m.d_frag = number_from(j.at("d_frag"));
  m.box_iou = number_from(j.at("box_iou"));
  m.shape_l1 = number_from(j.at("shape_l1"));
  m.s_ber_single_class = j.at("s_ber_single_class").get<bool>();
  return m;
}

}  // namespace

double rmse(const Image& pred, const Image& gt, const Mask* region) {
  require_same(pred, gt, region);
  const std::size_t plane = pred.plane();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < plane; ++p) {
    if (region != nullptr && !(region->data[p] > 0.5f)) continue;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = 255.0 * (static_cast<double>(pred.data[c * plane + p]) - gt.data[c * plane + p]);
      sum += d * d;
    }
    n += 3;
  }
  if (n == 0) throw Error(ErrorKind::kEmptyRegion, "rmse region is empty");
  return std::sqrt(sum / static_cast<double>(n));
}

double psnr_from_rmse(double r) noexcept { return r == 0.0 ? kInf : 20.0 * std::log10(255.0 / r); }

double psnr(const Image& pred, const Image& gt, const Mask* region) {
  return psnr_from_rmse(rmse(pred, gt, region));
}

BerResult ber(const Mask& pred, const Mask& gt, const Mask* region) {
  if (!pred.same_shape(gt) || (region != nullptr && !region->same_shape(gt)))
    throw Error(ErrorKind::kShapeMismatch, "ber inputs differ in size");
  std::int64_t tp = 0, tn = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (region != nullptr && !(region->data[i] > 0.5f)) continue;
    const bool p = pred.data[i] > 0.5f;
    if (gt.data[i] > 0.5f) {
      ++pos;
      tp += p ? 1 : 0;
    } else {
      ++neg;
      tn += p ? 0 : 1;
    }
  }
  BerResult out;
  if (region == nullptr) {
    if (pos == 0 || neg == 0)
      throw Error(ErrorKind::kDegenerateMask, "whole-image BER needs both classes");
    out.value = 100.0 * (1.0 - 0.5 * (static_cast<double>(tp) / pos + static_cast<double>(tn) / neg));
    return out;
  }
  if (pos + neg == 0) throw Error(ErrorKind::kEmptyRegion, "BER region is empty");
  if (pos > 0 && neg > 0) {
    out.value = 100.0 * (1.0 - 0.5 * (static_cast<double>(tp) / pos + static_cast<double>(tn) / neg));
  } else if (pos > 0) {
    out.single_class = true;
    out.value = 100.0 * static_cast<double>(pos - tp) / pos;
  } else {
    out.single_class = true;
    out.value = 100.0 * static_cast<double>(neg - tn) / neg;
  }
  return out;
}

std::int64_t d_hole(const Mask& m) {
  std::vector<std::uint8_t> background = bits(m);
  for (auto& b : background) b ^= 1;
  const Labeling lab = label_components(background, m.height, m.width, Connectivity::kEight);
  std::vector<bool> touches(lab.count + 1, false);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      if (r != 0 && c != 0 && r != m.height - 1 && c != m.width - 1) continue;
      touches[lab.labels[static_cast<std::size_t>(r) * m.width + c]] = true;
    }
  std::int64_t changed = 0;
  for (int l = 1; l <= lab.count; ++l)
    if (!touches[l] && lab.areas[l] < kAreaThreshold) changed += lab.areas[l];
  return changed;
}

std::int64_t d_frag(const Mask& m) {
  const Labeling lab = label_components(bits(m), m.height, m.width, Connectivity::kEight);
  std::int64_t changed = 0;
  for (int l = 1; l <= lab.count; ++l)
    if (lab.areas[l] < kAreaThreshold) changed += lab.areas[l];
  return changed;
}

double box_iou(const geometry::BBox& pred, const geometry::BBox& gt) {
  return geometry::box_iou(pred, gt);
}

double shape_l1(const Mask& pred, const geometry::BBox& pred_box, const Mask& gt,
                const geometry::BBox& gt_box, int size) {
  // A predicted box outside the frame has nothing to crop: compare an empty patch.
  Mask a(size, size);
  try {
    a = geometry::crop_resize(pred, pred_box, size);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kOutOfFrame) throw;
  }
  const Mask b = geometry::crop_resize(gt, gt_box, size);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(static_cast<double>(a.data[i]) - b.data[i]);
  return sum / static_cast<double>(a.size());
}

TupleMetrics evaluate_tuple(const Prediction& pred, const synth::ShadowTuple& t) {
  TupleMetrics m;
  m.id = t.meta.id;
  m.rmse = rmse(pred.output, t.target);
  m.s_rmse = rmse(pred.output, t.target, &t.fg_shadow);
  m.psnr = psnr_from_rmse(m.rmse);
  m.s_psnr = psnr_from_rmse(m.s_rmse);
  m.ber = ber(pred.refined_mask, t.fg_shadow).value;
  const BerResult s = ber(pred.refined_mask, t.fg_shadow, &t.fg_shadow);
  m.s_ber = s.value;
  m.s_ber_single_class = s.single_class;
  m.d_hole = static_cast<double>(d_hole(pred.refined_mask));
  m.d_frag = static_cast<double>(d_frag(pred.refined_mask));
  const geometry::BBox gt_box = geometry::bbox_from_mask(t.fg_shadow);
  m.box_iou = metrics::box_iou(pred.shadow_box, gt_box);
  m.shape_l1 = shape_l1(pred.rough_mask, pred.shadow_box, t.fg_shadow, gt_box);
  return m;
}

TupleMetrics aggregate(const std::vector<TupleMetrics>& rows) {
  TupleMetrics a;
  a.id = "mean";
  if (rows.empty()) return a;
  for (const auto& r : rows) {
    a.rmse += r.rmse;
    a.s_rmse += r.s_rmse;
    a.psnr += r.psnr;
    a.s_psnr += r.s_psnr;
    a.ber += r.ber;
    a.s_ber += r.s_ber;
    a.d_hole += r.d_hole;
    a.d_frag += r.d_frag;
    a.box_iou += r.box_iou;
    a.shape_l1 += r.shape_l1;
    a.s_ber_single_class = a.s_ber_single_class || r.s_ber_single_class;
  }
  const double n = static_cast<double>(rows.size());
  for (double* v : {&a.rmse, &a.s_rmse, &a.psnr, &a.s_psnr, &a.ber, &a.s_ber, &a.d_hole, &a.d_frag,
                    &a.box_iou, &a.shape_l1})
    *v /= n;
  return a;
}

MetricsReport evaluate_dataset(const std::vector<Prediction>& predictions,
                               const std::vector<synth::ShadowTuple>& tuples, json config) {
  if (tuples.empty()) throw Error(ErrorKind::kDatasetEmpty, "nothing to evaluate");
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) by_id[p.id] = &p;
  MetricsReport report;
  report.config = std::move(config);
  for (const auto& t : tuples) {
    const auto it = by_id.find(t.meta.id);
    if (it == by_id.end()) throw Error(ErrorKind::kCorruptDataset, "no prediction for " + t.meta.id);
    report.rows.push_back(evaluate_tuple(*it->second, t));
    if (report.rows.back().s_ber_single_class) ++report.s_ber_single_class_count;
  }
  report.count = report.rows.size();
  report.aggregate = aggregate(report.rows);
  return report;
}

json to_json(const MetricsReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) rows.push_back(row_json(row));
  return json{{"schema", "shadowcomp-metrics/1"},
              {"count", r.count},
              {"s_ber_single_class_count", r.s_ber_single_class_count},
              {"aggregate", row_json(r.aggregate)},
              {"rows", rows},
              {"config", r.config}};
}

MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  try {
    if (j.at("schema").get<std::string>() != "shadowcomp-metrics/1")
      throw Error(ErrorKind::kSchemaMismatch, "unknown metrics report schema");
    r.count = j.at("count").get<std::size_t>();
    r.s_ber_single_class_count = j.at("s_ber_single_class_count").get<std::size_t>();
    r.aggregate = row_from(j.at("aggregate"));
    for (const auto& row : j.at("rows")) r.rows.push_back(row_from(row));
    r.config = j.at("config");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCorruptDataset, std::string("metrics report: ") + e.what());
  }
  return r;
}

std::string format_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::string out;
  char line[512];
  std::snprintf(line, sizeof(line), "%-28s | %8s %8s %8s %8s | %8s %8s | %8s %8s | %8s %8s\n",
                "Model", "RMSE", "S-RMSE", "PSNR", "S-PSNR", "BER", "S-BER", "d_hole", "d_frag",
                "box-IoU", "shape-L1");
  out += line;
  out += std::string(std::string(line).size() - 1, '-') + "\n";
  for (const auto& [name, rep] : rows) {
    const auto& a = rep.aggregate;
    std::snprintf(line, sizeof(line),
                  "%-28s | %8.3f %8.3f %8.3f %8.3f | %8.3f %8.3f | %8.3f %8.3f | %8.3f %8.3f\n",
                  name.c_str(), a.rmse, a.s_rmse, a.psnr, a.s_psnr, a.ber, a.s_ber, a.d_hole,
                  a.d_frag, a.box_iou, a.shape_l1);
    out += line;
  }
  return out;
}

}  // namespace shadowcomp::metrics
