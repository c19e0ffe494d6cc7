#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "shadowcomp/geometry.hpp"

namespace shadowcomp::net {

enum class FillingMode { kAttention, kLinearNoBias, kLinearWithBias };

struct NetworkConfig {
  int resolution = 256;
  // Scales every internal width. 1.0 is the full-size network; 0.25 is the
  // desk-scale preset.
  double width_multiplier = 1.0;
  int shape_size = 32;
  int attention_dim = 32;
  int feature_dim = 32;
  std::uint64_t init_seed = 0;
  bool refine = true;
  bool literal_mean = false;
  double fallback_scale = 0.5;
  double scale_min = 0.05;
  double scale_max = 1.0;
  FillingMode filling = FillingMode::kAttention;

  void validate() const;
  /// Channel count after scaling, never below 4.
  int width(int base) const;
  int bottleneck_channels() const { return width(256); }

  nlohmann::json to_json() const;
  static NetworkConfig from_json(const nlohmann::json& j);
  /// True when parameter tensors of the two configs have identical shapes.
  bool architecture_equal(const NetworkConfig& other) const;
};

/// conv3x3 -> InstanceNorm(affine) -> ReLU.
struct ConvNormReluImpl : torch::nn::Module {
  ConvNormReluImpl(int in, int out, int stride = 1);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Conv2d conv{nullptr};
  torch::nn::InstanceNorm2d norm{nullptr};
};
TORCH_MODULE(ConvNormRelu);

/// ResNet basic block with instance normalization.
struct BasicBlockImpl : torch::nn::Module {
  BasicBlockImpl(int in, int out, int stride);
  torch::Tensor forward(const torch::Tensor& x);
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
  torch::nn::InstanceNorm2d norm1{nullptr}, norm2{nullptr};
  torch::nn::Sequential downsample{nullptr};
};
TORCH_MODULE(BasicBlock);

/// ResNet-34 layout ([3, 4, 6, 3] basic blocks) with a two-conv 3x3 stem.
/// Total stride 16; returns the output of each residual stage.
struct ResNetEncoderImpl : torch::nn::Module {
  explicit ResNetEncoderImpl(const NetworkConfig& cfg);
  std::vector<torch::Tensor> forward(const torch::Tensor& x);
  std::vector<int> stage_channels() const { return stage_channels_; }

  ConvNormRelu stem1{nullptr}, stem2{nullptr};
  torch::nn::MaxPool2d pool{nullptr};
  std::vector<torch::nn::Sequential> stages;

 private:
  std::vector<int> stage_channels_;
};
TORCH_MODULE(ResNetEncoder);

/// Three 3x3 convs down to an 8x8 (at 256 px) map with 512 channels, global
/// average pooling, and a linear layer to the 4-vector r.
struct BoxHeadImpl : torch::nn::Module {
  explicit BoxHeadImpl(const NetworkConfig& cfg);
  torch::Tensor forward(const torch::Tensor& features);
  ConvNormRelu conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
  torch::nn::Linear fc{nullptr};
};
TORCH_MODULE(BoxHead);

/// Upsample to shape_size, four conv-IN-ReLU layers, a Tanh conv remapped to [0,1].
struct ShapeHeadImpl : torch::nn::Module {
  explicit ShapeHeadImpl(const NetworkConfig& cfg);
  torch::Tensor forward(const torch::Tensor& features);
  int size;
  torch::nn::Sequential body{nullptr};
  torch::nn::Conv2d out{nullptr};
};
TORCH_MODULE(ShapeHead);

/// Four upsample + double-conv blocks; the mask channels join after the
/// last upsample.
struct RefinerImpl : torch::nn::Module {
  explicit RefinerImpl(const NetworkConfig& cfg);
  torch::Tensor forward(const torch::Tensor& features, const torch::Tensor& rough_mask,
                        const torch::Tensor& fg_object);
  std::vector<torch::nn::Sequential> blocks;
  ConvNormRelu tail{nullptr};
  torch::nn::Conv2d out{nullptr};
};
TORCH_MODULE(Refiner);

/// ResNet encoder whose stage outputs are projected by 1x1 convs, upsampled
/// to input resolution, concatenated, and fused by a 3x3 conv.
struct FillingEncoderImpl : torch::nn::Module {
  explicit FillingEncoderImpl(const NetworkConfig& cfg);
  torch::Tensor forward(const torch::Tensor& x);
  ResNetEncoder backbone{nullptr};
  std::vector<torch::nn::Conv2d> projections;
  torch::nn::Conv2d fuse{nullptr};
};
TORCH_MODULE(FillingEncoder);

/// Per-sample result of attentive filling.
struct FillResult {
  torch::Tensor output;     // [3,H,W]
  torch::Tensor dark;       // [3,H,W]
  torch::Tensor attention;  // [N_bs]; empty when the fallback is used
  torch::Tensor target_mean;  // [3] attention-weighted background shadow color
  torch::Tensor region_mean;  // [3] mask-weighted composite color
  torch::Tensor scale;        // [3]
  bool fallback_used = false;
};

struct FillOptions {
  bool literal_mean = false;
  double fallback_scale = 0.5;
  double scale_min = 0.05;
  double scale_max = 1.0;
  double eps = 1e-4;
};

/// Attentive shadow filling for one sample.
///   features [C,H,W], refined [H,W] soft mask, bg_shadow [H,W], composite [3,H,W].
/// `projection` maps C-dim features to the attention space.
/// Throws kEmptyForeground when the refined mask sums below eps.
FillResult attentive_fill(const torch::Tensor& features, const torch::Tensor& refined,
                          const torch::Tensor& bg_shadow, const torch::Tensor& composite,
                          torch::nn::Linear projection, const FillOptions& opts);

/// Batched network inputs. Images [B,3,H,W] and masks [B,1,H,W] in [0,1];
/// object_box [B,4] as (x, y, w, h).
struct NetworkInputs {
  torch::Tensor composite;
  torch::Tensor fg_object;
  torch::Tensor bg_object;
  torch::Tensor bg_shadow;
  torch::Tensor object_box;
};

struct ForwardOutputs {
  torch::Tensor box_regression;  // [B,4]
  torch::Tensor shadow_box;      // [B,4], differentiable in box_regression
  torch::Tensor shape_mask;      // [B,1,S,S]
  torch::Tensor rough_mask;      // [B,1,H,W]
  torch::Tensor refined_mask;    // [B,1,H,W]
  torch::Tensor dark;            // [B,3,H,W]
  torch::Tensor output;          // [B,3,H,W]
  torch::Tensor target_mean;     // [B,3]
  torch::Tensor region_mean;     // [B,3]
  torch::Tensor scale;           // [B,3]
  std::vector<torch::Tensor> attention;
  std::vector<bool> fallback_used;
};

/// Box decode on tensors: boxes [B,4], r [B,4]; width/height floored at 1 px.
torch::Tensor decode_boxes(const torch::Tensor& object_box, const torch::Tensor& r);

/// Differentiable (in `patch`) placement of [B,1,S,S] patches into boxes on an
/// H x W canvas; zero outside each box. Boxes are treated as constants.
torch::Tensor place_patches(const torch::Tensor& patch, const torch::Tensor& boxes, int height,
                            int width);

/// Two-stage shadow generator.
struct ShadowNetImpl : torch::nn::Module {
  explicit ShadowNetImpl(const NetworkConfig& cfg);

  ForwardOutputs forward(const NetworkInputs& in);

  torch::Tensor encode_context(const NetworkInputs& in);
  torch::Tensor encode_filling(const NetworkInputs& in);

  const NetworkConfig& config() const { return cfg_; }

  ResNetEncoder context_encoder{nullptr};
  BoxHead box_head{nullptr};
  ShapeHead shape_head{nullptr};
  Refiner refiner{nullptr};
  FillingEncoder filling_encoder{nullptr};
  torch::nn::Linear projection{nullptr};

 private:
  NetworkConfig cfg_;
};
TORCH_MODULE(ShadowNet);

/// Learnable scalar count.
std::int64_t count_parameters(const torch::nn::Module& module);

const char* to_string(FillingMode m) noexcept;
FillingMode filling_from_string(const std::string& s);

}  // namespace shadowcomp::net
