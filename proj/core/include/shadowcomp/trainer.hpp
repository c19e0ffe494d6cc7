#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "shadowcomp/losses.hpp"
#include "shadowcomp/network.hpp"
#include "shadowcomp/run_config.hpp"
#include "shadowcomp/synthdata.hpp"

namespace shadowcomp::harness {

torch::Tensor to_tensor(const Image& img);  // [3,H,W]
torch::Tensor to_tensor(const Mask& m);     // [1,H,W]
Image image_from_tensor(const torch::Tensor& t);  // [3,H,W]
Mask mask_from_tensor(const torch::Tensor& t);    // [1,H,W] or [H,W]
torch::Tensor box_tensor(const geometry::BBox& b);  // [4]
geometry::BBox box_from_tensor(const torch::Tensor& t);

struct Batch {
  net::NetworkInputs inputs;
  losses::Targets targets;
  std::vector<std::string> ids;
};

/// Tuples converted once to stacked tensors.
class TensorDataset {
 public:
  TensorDataset() = default;
  TensorDataset(const std::vector<synth::ShadowTuple>& tuples, int shape_size);

  static TensorDataset load(const std::filesystem::path& dir, int shape_size);

  std::size_t size() const noexcept { return ids_.size(); }
  int resolution() const noexcept { return resolution_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  Batch batch(const std::vector<int64_t>& indices) const;

 private:
  std::vector<std::string> ids_;
  int resolution_ = 0;
  torch::Tensor composite_, target_, fg_object_, fg_shadow_, bg_object_, bg_shadow_;
  torch::Tensor object_box_, shadow_box_, shape_mask_;
};

struct TrainState {
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  std::vector<losses::LossBreakdown> history;
  double best_s_ber = -1.0;  // < 0 until the first evaluation
  std::int64_t best_step = -1;

  nlohmann::json to_json() const;
  static TrainState from_json(const nlohmann::json& j);
};

inline constexpr std::int64_t kCheckpointSchemaVersion = 1;

struct Checkpoint {
  net::NetworkConfig network;
  TrainState state;
  nlohmann::json run_config;
};

/// Writes parameters (keyed by module path), the network config, the train
/// state, the optimizer state (when given), and the schema version.
void save_checkpoint(const std::filesystem::path& path, net::ShadowNet& model,
                     torch::optim::Optimizer* optimizer, const TrainState& state,
                     const RunConfig& config);

/// Reads the header fields only. Throws kSchemaMismatch on version mismatch.
Checkpoint read_checkpoint_header(const std::filesystem::path& path);

/// Rebuilds the network stored in `path` and loads its parameters. When
/// `optimizer` is non-null, its state is restored as well.
net::ShadowNet load_model(const std::filesystem::path& path, Checkpoint* header = nullptr);
void load_into(const std::filesystem::path& path, net::ShadowNet& model,
               torch::optim::Optimizer* optimizer);

/// Adam training on the unit-weight loss. Owns the model's parameter
/// updates; one trainer per model.
class Trainer {
 public:
  Trainer(RunConfig config, net::ShadowNet model, std::shared_ptr<const TensorDataset> data,
          std::ostream* log = nullptr);

  std::int64_t steps_per_epoch() const;
  std::int64_t total_steps() const;

  /// Batch indices used at global step `step`.
  std::vector<int64_t> batch_indices(std::int64_t step) const;

  losses::LossBreakdown train_step();

  /// Runs until total_steps() or until `stop` returns true after a step.
  void run(const std::function<bool(const TrainState&)>& stop = {});

  void save(const std::filesystem::path& path);
  /// Restores parameters, optimizer state, and train state.
  void resume(const std::filesystem::path& path);

  /// Optional evaluation hook used for best-S-BER snapshots; returns S-BER.
  void set_evaluator(std::function<double(net::ShadowNet&)> eval) { evaluator_ = std::move(eval); }

  const TrainState& state() const noexcept { return state_; }
  net::ShadowNet& model() noexcept { return model_; }
  const RunConfig& config() const noexcept { return config_; }

 private:
  RunConfig config_;
  net::ShadowNet model_;
  std::shared_ptr<const TensorDataset> data_;
  std::unique_ptr<torch::optim::Adam> optimizer_;
  TrainState state_;
  std::ostream* log_;
  std::function<double(net::ShadowNet&)> evaluator_;
};

/// Trains from scratch on config.train_data. Returns the final checkpoint path.
std::filesystem::path train(const RunConfig& config, std::ostream* log = nullptr);

/// Starts from the parameters (not the optimizer state) of `base` and trains
/// on config.finetune_data. Throws kSchemaMismatch for an incompatible base.
std::filesystem::path finetune(const RunConfig& config, const std::filesystem::path& base,
                               std::ostream* log = nullptr);

}  // namespace shadowcomp::harness
