#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "shadowcomp/losses.hpp"
#include "shadowcomp/network.hpp"

namespace shadowcomp::harness {

/// Everything a training, finetuning, or evaluation run needs. Serialized
/// as JSON; unknown keys are rejected.
struct RunConfig {
  std::string train_data;
  std::string finetune_data;
  std::string test_data;

  int resolution = 256;
  double width_multiplier = 1.0;
  std::uint64_t init_seed = 0;

  int batch_size = 16;
  double learning_rate = 1e-4;
  std::array<double, 2> betas{0.5, 0.999};
  // When steps > 0 it wins; otherwise epochs * ceil(N / batch) steps run.
  int epochs = 50;
  int steps = 0;
  std::uint64_t seed = 0;

  std::string checkpoint_dir = "checkpoints";
  int checkpoint_every = 500;
  int eval_every = 0;
  int log_every = 50;

  bool no_refine = false;
  bool literal_mean = false;
  losses::RecNorm rec_norm = losses::RecNorm::kFull;
  double fallback_scale = 0.5;
  bool data_augmentation = false;

  void validate() const;
  net::NetworkConfig network() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Full-size defaults: 256 px, batch 16, 50 epochs.
  static RunConfig full_scale();
  /// 128 px, width multiplier 0.25, step-driven.
  static RunConfig desk_scale();
};

}  // namespace shadowcomp::harness
