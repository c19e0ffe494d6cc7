#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shadowcomp/metrics.hpp"
#include "shadowcomp/network.hpp"
#include "shadowcomp/trainer.hpp"

namespace shadowcomp::harness {

/// Runs the model in inference mode over every tuple of `data`.
std::vector<metrics::Prediction> predict(net::ShadowNet& model, const TensorDataset& data,
                                         int batch_size = 8);

struct Evaluation {
  metrics::MetricsReport report;
  std::vector<metrics::Prediction> predictions;
};

Evaluation evaluate(net::ShadowNet& model, const std::vector<synth::ShadowTuple>& tuples,
                    int batch_size = 8, nlohmann::json config = nlohmann::json::object());

/// Writes metrics.json, metrics.txt and predictions/<id>/{comp,gt,rough,refined,output}.png
/// plus box.json. The tuples supply the inputs and ground truth copies.
void write_evaluation(const std::filesystem::path& out_dir, const Evaluation& eval,
                      const std::vector<synth::ShadowTuple>& tuples);

/// Checkpoint + dataset directory -> evaluation written to `out_dir`.
Evaluation evaluate_checkpoint(const std::filesystem::path& checkpoint,
                               const std::filesystem::path& data_dir,
                               const std::filesystem::path& out_dir);

struct PassDiagnostics {
  geometry::BBox object_box;
  geometry::BBox shadow_box;
  std::array<double, 3> scale{};
  bool fallback_used = false;
  double attention_entropy = 0.0;  // nats; 0 when the fallback is used
  std::size_t attended_pixels = 0;

  nlohmann::json to_json() const;
};

struct InferenceResult {
  Image output;
  Mask shadow_mask;                 // union of the per-object refined masks
  std::vector<Mask> object_shadows;  // one per foreground object
  std::vector<PassDiagnostics> passes;
};

/// One pass per foreground object. Each pass sees the previous output as its
/// composite, the earlier predicted shadows as background shadow, and the
/// other foreground objects as background objects.
InferenceResult infer(net::ShadowNet& model, const Image& composite,
                      const std::vector<Mask>& fg_objects, const Mask& bg_object,
                      const Mask& bg_shadow);

/// output.png, mask.png and diagnostics.json.
void write_inference(const std::filesystem::path& out_dir, const InferenceResult& result);

/// Lays out `rows` of equally sized images into one image.
Image make_grid(const std::vector<std::vector<Image>>& rows);
Image mask_to_image(const Mask& m);

/// Reads an evaluation directory and writes metrics.json, metrics.txt and
/// grid_NNN.png (columns: composite, rough mask, refined mask, output, ground
/// truth; `rows_per_grid` tuples per image). Returns the written paths.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& eval_dir,
                                                const std::filesystem::path& out_dir,
                                                int rows_per_grid = 4);

}  // namespace shadowcomp::harness
