#include "shadowcomp/inference.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "shadowcomp/dataset_io.hpp"
#include "shadowcomp/errors.hpp"

namespace shadowcomp::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class InferenceMode {
 public:
  explicit InferenceMode(net::ShadowNet& model) : model_(model), was_training_(model->is_training()) {
    model_->eval();
  }
  ~InferenceMode() { model_->train(was_training_); }
  InferenceMode(const InferenceMode&) = delete;
  InferenceMode& operator=(const InferenceMode&) = delete;

 private:
  net::ShadowNet& model_;
  bool was_training_;
  torch::NoGradGuard no_grad_;
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kCorruptDataset, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCorruptDataset, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kCorruptDataset, "cannot write " + path.string());
  out << text;
}

void write_metrics(const fs::path& dir, const metrics::MetricsReport& report) {
  write_text(dir / "metrics.json", metrics::to_json(report).dump(2) + "\n");
  write_text(dir / "metrics.txt", metrics::format_table({{"model", report}}));
}

}  // namespace

std::vector<metrics::Prediction> predict(net::ShadowNet& model, const TensorDataset& data,
                                         int batch_size) {
  if (batch_size < 1) throw Error(ErrorKind::kConfig, "batch_size must be positive");
  InferenceMode mode(model);
  std::vector<metrics::Prediction> preds;
  preds.reserve(data.size());
  const auto n = static_cast<std::int64_t>(data.size());
  for (std::int64_t begin = 0; begin < n; begin += batch_size) {
    std::vector<int64_t> idx;
    for (std::int64_t i = begin; i < std::min(n, begin + batch_size); ++i) idx.push_back(i);
    const Batch batch = data.batch(idx);
    const auto out = model->forward(batch.inputs);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto k = static_cast<std::int64_t>(i);
      preds.push_back(metrics::Prediction{batch.ids[i], image_from_tensor(out.output[k]),
                                          mask_from_tensor(out.refined_mask[k]),
                                          mask_from_tensor(out.rough_mask[k]),
                                          box_from_tensor(out.shadow_box[k])});
    }
  }
  return preds;
}

Evaluation evaluate(net::ShadowNet& model, const std::vector<synth::ShadowTuple>& tuples,
                    int batch_size, json config) {
  if (tuples.empty()) throw Error(ErrorKind::kDatasetEmpty, "evaluation set is empty");
  const TensorDataset data(tuples, model->config().shape_size);
  Evaluation ev;
  ev.predictions = predict(model, data, batch_size);
  ev.report = metrics::evaluate_dataset(ev.predictions, tuples, std::move(config));
  return ev;
}

void write_evaluation(const fs::path& out_dir, const Evaluation& eval,
                      const std::vector<synth::ShadowTuple>& tuples) {
  std::map<std::string, const synth::ShadowTuple*> by_id;
  for (const auto& t : tuples) by_id[t.meta.id] = &t;
  fs::create_directories(out_dir / "predictions");
  write_metrics(out_dir, eval.report);
  for (const auto& p : eval.predictions) {
    const auto it = by_id.find(p.id);
    if (it == by_id.end()) throw Error(ErrorKind::kCorruptDataset, "no tuple for prediction " + p.id);
    const fs::path dir = out_dir / "predictions" / p.id;
    fs::create_directories(dir);
    io::save_png(it->second->composite, dir / "comp.png");
    io::save_png(it->second->target, dir / "gt.png");
    io::save_png(p.rough_mask, dir / "rough.png");
    io::save_png(p.refined_mask, dir / "refined.png");
    io::save_png(p.output, dir / "output.png");
    write_text(dir / "box.json", io::to_json(p.shadow_box).dump(2) + "\n");
  }
}

Evaluation evaluate_checkpoint(const fs::path& checkpoint, const fs::path& data_dir,
                               const fs::path& out_dir) {
  Checkpoint header;
  auto model = load_model(checkpoint, &header);
  const auto tuples = io::read_dataset(data_dir);
  if (tuples.empty()) throw Error(ErrorKind::kDatasetEmpty, "evaluation set is empty");
  if (tuples.front().composite.height != header.network.resolution)
    throw Error(ErrorKind::kShapeMismatch, "dataset resolution differs from the checkpoint");
  json cfg{{"checkpoint", checkpoint.string()},
           {"data", data_dir.string()},
           {"network", header.network.to_json()},
           {"step", header.state.step}};
  auto ev = evaluate(model, tuples, 8, cfg);
  write_evaluation(out_dir, ev, tuples);
  return ev;
}

// ---------------------------------------------------------------------------

json PassDiagnostics::to_json() const {
  return json{{"object_box", io::to_json(object_box)},
              {"shadow_box", io::to_json(shadow_box)},
              {"scale", scale},
              {"fallback_used", fallback_used},
              {"attention_entropy", attention_entropy},
              {"attended_pixels", attended_pixels}};
}

InferenceResult infer(net::ShadowNet& model, const Image& composite,
                      const std::vector<Mask>& fg_objects, const Mask& bg_object,
                      const Mask& bg_shadow) {
  const int res = model->config().resolution;
  if (composite.height != res || composite.width != res)
    throw Error(ErrorKind::kShapeMismatch, "composite must be " + std::to_string(res) + "x" +
                                               std::to_string(res));
  if (fg_objects.empty()) throw Error(ErrorKind::kEmptyMask, "no foreground object");
  for (const Mask* m : {&bg_object, &bg_shadow})
    if (!composite.same_shape(*m)) throw Error(ErrorKind::kShapeMismatch, "mask size differs");
  for (const auto& m : fg_objects)
    if (!composite.same_shape(m)) throw Error(ErrorKind::kShapeMismatch, "mask size differs");

  InferenceMode mode(model);
  InferenceResult result;
  result.output = composite;
  result.shadow_mask = Mask(res, res);
  Mask shadows = binarize(bg_shadow);

  for (std::size_t k = 0; k < fg_objects.size(); ++k) {
    const Mask fg = binarize(fg_objects[k]);
    PassDiagnostics diag;
    diag.object_box = geometry::bbox_from_mask(fg);
    Mask others = binarize(bg_object);
    for (std::size_t j = 0; j < fg_objects.size(); ++j)
      if (j != k) others = mask_union(others, binarize(fg_objects[j]));

    net::NetworkInputs in;
    in.composite = to_tensor(result.output).unsqueeze(0);
    in.fg_object = to_tensor(fg).unsqueeze(0);
    in.bg_object = to_tensor(others).unsqueeze(0);
    in.bg_shadow = to_tensor(shadows).unsqueeze(0);
    in.object_box = box_tensor(diag.object_box).unsqueeze(0);
    const auto out = model->forward(in);

    diag.shadow_box = box_from_tensor(out.shadow_box[0]);
    const auto scale = out.scale[0].to(torch::kFloat64).contiguous();
    for (int c = 0; c < 3; ++c) diag.scale[static_cast<std::size_t>(c)] = scale[c].item<double>();
    diag.fallback_used = out.fallback_used.at(0);
    if (!diag.fallback_used && out.attention.at(0).defined()) {
      const auto a = out.attention[0].to(torch::kFloat64);
      diag.attended_pixels = static_cast<std::size_t>(a.numel());
      diag.attention_entropy = -(a * torch::log(a.clamp_min(1e-300))).sum().item<double>();
    }

    const Mask refined = mask_from_tensor(out.refined_mask[0]);
    result.output = image_from_tensor(out.output[0]);
    result.object_shadows.push_back(refined);
    result.shadow_mask = mask_union(result.shadow_mask, refined);
    shadows = mask_union(shadows, binarize(refined));
    result.passes.push_back(diag);
  }
  return result;
}

void write_inference(const fs::path& out_dir, const InferenceResult& result) {
  fs::create_directories(out_dir);
  io::save_png(result.output, out_dir / "output.png");
  io::save_png(result.shadow_mask, out_dir / "mask.png");
  json passes = json::array();
  for (const auto& p : result.passes) passes.push_back(p.to_json());
  write_text(out_dir / "diagnostics.json", json{{"passes", passes}}.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

Image mask_to_image(const Mask& m) {
  Image img(m.height, m.width);
  for (int c = 0; c < Image::kChannels; ++c) {
    std::copy(m.data.begin(), m.data.end(),
              img.data.begin() + static_cast<std::ptrdiff_t>(c * img.plane()));
  }
  return img;
}

Image make_grid(const std::vector<std::vector<Image>>& rows) {
  if (rows.empty() || rows.front().empty()) throw Error(ErrorKind::kShapeMismatch, "empty grid");
  const int h = rows.front().front().height;
  const int w = rows.front().front().width;
  const auto cols = rows.front().size();
  Image grid(h * static_cast<int>(rows.size()), w * static_cast<int>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw Error(ErrorKind::kShapeMismatch, "ragged grid");
    for (std::size_t c = 0; c < cols; ++c) {
      const Image& cell = rows[r][c];
      if (cell.height != h || cell.width != w)
        throw Error(ErrorKind::kShapeMismatch, "grid cells differ in size");
      for (int ch = 0; ch < Image::kChannels; ++ch)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            grid.at(ch, static_cast<int>(r) * h + y, static_cast<int>(c) * w + x) = cell.at(ch, y, x);
    }
  }
  return grid;
}

std::vector<fs::path> write_report(const fs::path& eval_dir, const fs::path& out_dir,
                                   int rows_per_grid) {
  if (rows_per_grid < 1) throw Error(ErrorKind::kConfig, "rows per grid must be positive");
  metrics::MetricsReport report;
  try {
    report = metrics::report_from_json(read_json(eval_dir / "metrics.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kCorruptDataset, std::string("metrics.json: ") + e.what());
  }
  if (report.rows.empty()) throw Error(ErrorKind::kDatasetEmpty, "evaluation has no tuples");

  // Load every cell before writing anything so a broken eval dir leaves no files.
  std::vector<std::vector<Image>> rows;
  for (const auto& row : report.rows) {
    const fs::path dir = eval_dir / "predictions" / row.id;
    rows.push_back({io::load_image_png(dir / "comp.png"),
                    mask_to_image(io::load_mask_png(dir / "rough.png")),
                    mask_to_image(io::load_mask_png(dir / "refined.png")),
                    io::load_image_png(dir / "output.png"), io::load_image_png(dir / "gt.png")});
  }

  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  write_metrics(out_dir, report);
  written.push_back(out_dir / "metrics.json");
  written.push_back(out_dir / "metrics.txt");
  for (std::size_t begin = 0, g = 0; begin < rows.size(); begin += static_cast<std::size_t>(rows_per_grid), ++g) {
    const auto end = std::min(rows.size(), begin + static_cast<std::size_t>(rows_per_grid));
    const std::vector<std::vector<Image>> chunk(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                                rows.begin() + static_cast<std::ptrdiff_t>(end));
    char name[32];
    std::snprintf(name, sizeof(name), "grid_%03zu.png", g);
    io::save_png(make_grid(chunk), out_dir / name);
    written.push_back(out_dir / name);
  }
  return written;
}

// ---------------------------------------------------------------------------

namespace {

std::function<double(net::ShadowNet&)> make_evaluator(const RunConfig& config) {
  if (config.eval_every <= 0 || config.test_data.empty()) return {};
  auto tuples = std::make_shared<std::vector<synth::ShadowTuple>>(io::read_dataset(config.test_data));
  return [tuples](net::ShadowNet& model) { return evaluate(model, *tuples).report.aggregate.s_ber; };
}

fs::path run_trainer(Trainer& trainer, const RunConfig& config) {
  trainer.set_evaluator(make_evaluator(config));
  trainer.run();
  const fs::path final_path = fs::path(config.checkpoint_dir) / "final.pt";
  trainer.save(final_path);
  trainer.save(fs::path(config.checkpoint_dir) / "last.pt");
  return final_path;
}

}  // namespace

fs::path train(const RunConfig& config, std::ostream* log) {
  config.validate();
  if (config.train_data.empty()) throw Error(ErrorKind::kConfig, "train_data is not set");
  const auto net_cfg = config.network();
  auto data = std::make_shared<const TensorDataset>(TensorDataset::load(config.train_data, net_cfg.shape_size));
  Trainer trainer(config, net::ShadowNet(net_cfg), data, log);
  return run_trainer(trainer, config);
}

fs::path finetune(const RunConfig& config, const fs::path& base, std::ostream* log) {
  config.validate();
  if (config.finetune_data.empty()) throw Error(ErrorKind::kConfig, "finetune_data is not set");
  const auto net_cfg = config.network();
  const Checkpoint header = read_checkpoint_header(base);
  if (!header.network.architecture_equal(net_cfg))
    throw Error(ErrorKind::kSchemaMismatch, "base checkpoint architecture differs from the config");
  net::ShadowNet model(net_cfg);
  load_into(base, model, nullptr);
  auto data = std::make_shared<const TensorDataset>(TensorDataset::load(config.finetune_data, net_cfg.shape_size));
  Trainer trainer(config, model, data, log);
  return run_trainer(trainer, config);
}

}  // namespace shadowcomp::harness
