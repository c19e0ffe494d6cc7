#include "shadowcomp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "shadowcomp/dataset_io.hpp"
#include "shadowcomp/errors.hpp"

namespace shadowcomp::harness {

namespace fs = std::filesystem;
using nlohmann::json;

torch::Tensor to_tensor(const Image& img) {
  return torch::from_blob(const_cast<float*>(img.data.data()), {3, img.height, img.width},
                          torch::kFloat32)
      .clone();
}

torch::Tensor to_tensor(const Mask& m) {
  return torch::from_blob(const_cast<float*>(m.data.data()), {1, m.height, m.width}, torch::kFloat32)
      .clone();
}

Image image_from_tensor(const torch::Tensor& t) {
  const auto c = t.detach().to(torch::kFloat32).contiguous().cpu();
  if (c.dim() != 3 || c.size(0) != 3) throw Error(ErrorKind::kShapeMismatch, "expected [3,H,W]");
  Image img(static_cast<int>(c.size(1)), static_cast<int>(c.size(2)));
  std::copy_n(c.data_ptr<float>(), img.data.size(), img.data.begin());
  return img;
}

Mask mask_from_tensor(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat32).contiguous().cpu();
  if (c.dim() == 3 && c.size(0) == 1) c = c[0].contiguous();
  if (c.dim() != 2) throw Error(ErrorKind::kShapeMismatch, "expected [1,H,W] or [H,W]");
  Mask m(static_cast<int>(c.size(0)), static_cast<int>(c.size(1)));
  std::copy_n(c.data_ptr<float>(), m.data.size(), m.data.begin());
  return m;
}

torch::Tensor box_tensor(const geometry::BBox& b) {
  return torch::tensor({static_cast<float>(b.x), static_cast<float>(b.y), static_cast<float>(b.w),
                        static_cast<float>(b.h)});
}

geometry::BBox box_from_tensor(const torch::Tensor& t) {
  const auto c = t.detach().to(torch::kFloat64).contiguous().cpu();
  const double* p = c.data_ptr<double>();
  return geometry::BBox{p[0], p[1], p[2], p[3]};
}

// ---------------------------------------------------------------------------

TensorDataset::TensorDataset(const std::vector<synth::ShadowTuple>& tuples, int shape_size) {
  if (tuples.empty()) throw Error(ErrorKind::kDatasetEmpty, "no tuples");
  resolution_ = tuples.front().composite.height;
  std::vector<torch::Tensor> comp, tgt, fo, fs, bo, bs, ob, sb, sm;
  for (const auto& t : tuples) {
    if (t.composite.height != resolution_ || t.composite.width != resolution_)
      throw Error(ErrorKind::kCorruptDataset, "tuple " + t.meta.id + " has a different resolution");
    ids_.push_back(t.meta.id);
    comp.push_back(to_tensor(t.composite));
    tgt.push_back(to_tensor(t.target));
    fo.push_back(to_tensor(binarize(t.fg_object)));
    fs.push_back(to_tensor(binarize(t.fg_shadow)));
    bo.push_back(to_tensor(binarize(t.bg_object)));
    bs.push_back(to_tensor(binarize(t.bg_shadow)));
    ob.push_back(box_tensor(t.meta.object_box));
    sb.push_back(box_tensor(t.meta.shadow_box));
    sm.push_back(to_tensor(geometry::crop_resize(binarize(t.fg_shadow), t.meta.shadow_box, shape_size)));
  }
  composite_ = torch::stack(comp);
  target_ = torch::stack(tgt);
  fg_object_ = torch::stack(fo);
  fg_shadow_ = torch::stack(fs);
  bg_object_ = torch::stack(bo);
  bg_shadow_ = torch::stack(bs);
  object_box_ = torch::stack(ob);
  shadow_box_ = torch::stack(sb);
  shape_mask_ = torch::stack(sm);
}

TensorDataset TensorDataset::load(const fs::path& dir, int shape_size) {
  return TensorDataset(io::read_dataset(dir), shape_size);
}

Batch TensorDataset::batch(const std::vector<int64_t>& indices) const {
  const auto idx = torch::tensor(indices, torch::kInt64);
  Batch b;
  b.inputs.composite = composite_.index_select(0, idx);
  b.inputs.fg_object = fg_object_.index_select(0, idx);
  b.inputs.bg_object = bg_object_.index_select(0, idx);
  b.inputs.bg_shadow = bg_shadow_.index_select(0, idx);
  b.inputs.object_box = object_box_.index_select(0, idx);
  b.targets.shadow_box = shadow_box_.index_select(0, idx);
  b.targets.shape_mask = shape_mask_.index_select(0, idx);
  b.targets.fg_shadow = fg_shadow_.index_select(0, idx);
  b.targets.target = target_.index_select(0, idx);
  for (auto i : indices) b.ids.push_back(ids_.at(static_cast<std::size_t>(i)));
  return b;
}

// ---------------------------------------------------------------------------

json TrainState::to_json() const {
  json hist = json::array();
  for (const auto& h : history) hist.push_back({h.reg, h.shape, h.mask, h.rec, h.total});
  return json{{"step", step},
              {"epoch", epoch},
              {"history", hist},
              {"best_s_ber", best_s_ber},
              {"best_step", best_step}};
}

TrainState TrainState::from_json(const json& j) {
  TrainState s;
  s.step = j.at("step").get<std::int64_t>();
  s.epoch = j.at("epoch").get<std::int64_t>();
  for (const auto& h : j.at("history"))
    s.history.push_back(losses::LossBreakdown{h[0].get<double>(), h[1].get<double>(),
                                              h[2].get<double>(), h[3].get<double>(),
                                              h[4].get<double>()});
  s.best_s_ber = j.at("best_s_ber").get<double>();
  s.best_step = j.at("best_step").get<std::int64_t>();
  return s;
}

void save_checkpoint(const fs::path& path, net::ShadowNet& model, torch::optim::Optimizer* optimizer,
                     const TrainState& state, const RunConfig& config) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  torch::serialize::OutputArchive archive;
  archive.write("schema_version", c10::IValue(kCheckpointSchemaVersion));
  archive.write("network_config", c10::IValue(model->config().to_json().dump()));
  archive.write("run_config", c10::IValue(config.to_json().dump()));
  archive.write("train_state", c10::IValue(state.to_json().dump()));
  archive.write("global_step", c10::IValue(state.step));
  torch::serialize::OutputArchive params;
  model->save(params);
  archive.write("model", params);
  archive.write("has_optimizer", c10::IValue(optimizer != nullptr));
  if (optimizer != nullptr) {
    torch::serialize::OutputArchive opt;
    optimizer->save(opt);
    archive.write("optimizer", opt);
  }
  archive.save_to(path.string());
}

namespace {

torch::serialize::InputArchive open_archive(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::kCorruptDataset, "missing checkpoint " + path.string());
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path.string());
  } catch (const c10::Error& e) {
    throw Error(ErrorKind::kSchemaMismatch, "unreadable checkpoint " + path.string());
  }
  c10::IValue version;
  if (!archive.try_read("schema_version", version) || !version.isInt() ||
      version.toInt() != kCheckpointSchemaVersion) {
    throw Error(ErrorKind::kSchemaMismatch,
                "checkpoint schema version differs from " + std::to_string(kCheckpointSchemaVersion));
  }
  return archive;
}

std::string read_string(torch::serialize::InputArchive& archive, const char* key) {
  c10::IValue v;
  if (!archive.try_read(key, v) || !v.isString())
    throw Error(ErrorKind::kSchemaMismatch, std::string("checkpoint lacks ") + key);
  return v.toStringRef();
}

Checkpoint header_of(torch::serialize::InputArchive& archive) {
  Checkpoint c;
  try {
    c.network = net::NetworkConfig::from_json(json::parse(read_string(archive, "network_config")));
    c.run_config = json::parse(read_string(archive, "run_config"));
    c.state = TrainState::from_json(json::parse(read_string(archive, "train_state")));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchemaMismatch, std::string("checkpoint header: ") + e.what());
  }
  return c;
}

}  // namespace

Checkpoint read_checkpoint_header(const fs::path& path) {
  auto archive = open_archive(path);
  return header_of(archive);
}

void load_into(const fs::path& path, net::ShadowNet& model, torch::optim::Optimizer* optimizer) {
  auto archive = open_archive(path);
  const Checkpoint header = header_of(archive);
  if (!header.network.architecture_equal(model->config()))
    throw Error(ErrorKind::kSchemaMismatch, "checkpoint architecture differs from the model");
  torch::serialize::InputArchive params;
  archive.read("model", params);
  try {
    model->load(params);
  } catch (const c10::Error& e) {
    throw Error(ErrorKind::kSchemaMismatch, "checkpoint parameters do not match the model");
  }
  if (optimizer != nullptr) {
    c10::IValue has;
    if (archive.try_read("has_optimizer", has) && has.toBool()) {
      torch::serialize::InputArchive opt;
      archive.read("optimizer", opt);
      optimizer->load(opt);
    }
  }
}

net::ShadowNet load_model(const fs::path& path, Checkpoint* header) {
  Checkpoint h = read_checkpoint_header(path);
  net::ShadowNet model(h.network);
  load_into(path, model, nullptr);
  if (header != nullptr) *header = std::move(h);
  return model;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(RunConfig config, net::ShadowNet model, std::shared_ptr<const TensorDataset> data,
                 std::ostream* log)
    : config_(std::move(config)), model_(std::move(model)), data_(std::move(data)), log_(log) {
  config_.validate();
  if (!data_ || data_->size() == 0) throw Error(ErrorKind::kDatasetEmpty, "training set is empty");
  if (data_->resolution() != model_->config().resolution)
    throw Error(ErrorKind::kConfig, "dataset resolution " + std::to_string(data_->resolution()) +
                                        " differs from network resolution " +
                                        std::to_string(model_->config().resolution));
  optimizer_ = std::make_unique<torch::optim::Adam>(
      model_->parameters(), torch::optim::AdamOptions(config_.learning_rate)
                                .betas(std::make_tuple(config_.betas[0], config_.betas[1])));
}

std::int64_t Trainer::steps_per_epoch() const {
  const auto n = static_cast<std::int64_t>(data_->size());
  return (n + config_.batch_size - 1) / config_.batch_size;
}

std::int64_t Trainer::total_steps() const {
  return config_.steps > 0 ? config_.steps : static_cast<std::int64_t>(config_.epochs) * steps_per_epoch();
}

std::vector<int64_t> Trainer::batch_indices(std::int64_t step) const {
  const std::int64_t spe = steps_per_epoch();
  const std::int64_t epoch = step / spe;
  const std::int64_t pos = step % spe;
  std::vector<int64_t> perm(data_->size());
  std::iota(perm.begin(), perm.end(), 0);
  // One permutation per epoch, derived from (seed, epoch) alone so a resumed
  // run sees the same batches.
  std::mt19937_64 rng(config_.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(epoch));
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto begin = static_cast<std::size_t>(pos * config_.batch_size);
  const auto end = std::min(perm.size(), begin + static_cast<std::size_t>(config_.batch_size));
  return {perm.begin() + static_cast<std::ptrdiff_t>(begin), perm.begin() + static_cast<std::ptrdiff_t>(end)};
}

losses::LossBreakdown Trainer::train_step() {
  const Batch batch = data_->batch(batch_indices(state_.step));
  model_->train();
  const auto out = model_->forward(batch.inputs);
  const auto terms = losses::compute_losses(out, batch.targets, config_.rec_norm);
  const auto bd = terms.breakdown();
  if (!std::isfinite(bd.total)) {
    json dump{{"step", state_.step}, {"ids", batch.ids}};
    if (!config_.checkpoint_dir.empty()) {
      fs::create_directories(config_.checkpoint_dir);
      std::ofstream(fs::path(config_.checkpoint_dir) / "nonfinite_batch.json") << dump.dump(2) << '\n';
    }
    throw Error(ErrorKind::kNonFiniteLoss, "step " + std::to_string(state_.step) + " batch " + dump["ids"].dump());
  }
  optimizer_->zero_grad();
  terms.total.backward();
  optimizer_->step();

  ++state_.step;
  state_.epoch = state_.step / steps_per_epoch();
  state_.history.push_back(bd);

  if (log_ != nullptr && config_.log_every > 0 && state_.step % config_.log_every == 0) {
    char line[256];
    std::snprintf(line, sizeof(line),
                  "step %6lld  total %.5f  reg %.5f  shape %.5f  mask %.5f  rec %.6f\n",
                  static_cast<long long>(state_.step), bd.total, bd.reg, bd.shape, bd.mask, bd.rec);
    *log_ << line << std::flush;
  }
  const fs::path dir = config_.checkpoint_dir;
  if (!dir.empty() && config_.checkpoint_every > 0 && state_.step % config_.checkpoint_every == 0) {
    char name[32];
    std::snprintf(name, sizeof(name), "step_%06lld.pt", static_cast<long long>(state_.step));
    save(dir / name);
    save(dir / "last.pt");
  }
  if (evaluator_ && config_.eval_every > 0 && state_.step % config_.eval_every == 0) {
    const double s_ber = evaluator_(model_);
    if (state_.best_s_ber < 0.0 || s_ber < state_.best_s_ber) {
      state_.best_s_ber = s_ber;
      state_.best_step = state_.step;
      if (!dir.empty()) save(dir / "best.pt");
    }
  }
  return bd;
}

void Trainer::run(const std::function<bool(const TrainState&)>& stop) {
  const std::int64_t total = total_steps();
  while (state_.step < total) {
    train_step();
    if (stop && stop(state_)) break;
  }
}

void Trainer::save(const fs::path& path) {
  save_checkpoint(path, model_, optimizer_.get(), state_, config_);
}

void Trainer::resume(const fs::path& path) {
  load_into(path, model_, optimizer_.get());
  state_ = read_checkpoint_header(path).state;
}

}  // namespace shadowcomp::harness
