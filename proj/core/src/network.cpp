#include "shadowcomp/network.hpp"

#include <cmath>

#include "shadowcomp/errors.hpp"

namespace shadowcomp::net {

namespace F = torch::nn::functional;
using torch::indexing::Slice;

namespace {

torch::nn::Conv2d conv3x3(int in, int out, int stride = 1, bool bias = true) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1).bias(bias));
}

torch::nn::InstanceNorm2d instance_norm(int channels) {
  return torch::nn::InstanceNorm2d(
      torch::nn::InstanceNorm2dOptions(channels).affine(true).track_running_stats(false));
}

torch::Tensor upsample_to(const torch::Tensor& x, int h, int w) {
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{h, w})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

torch::Tensor tanh_to_unit(const torch::Tensor& t) { return (torch::tanh(t) + 1.0) * 0.5; }

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::kShapeMismatch, what);
}

}  // namespace

const char* to_string(FillingMode m) noexcept {
  switch (m) {
    case FillingMode::kAttention: return "attention";
    case FillingMode::kLinearNoBias: return "linear_no_bias";
    case FillingMode::kLinearWithBias: return "linear_with_bias";
  }
  return "attention";
}

FillingMode filling_from_string(const std::string& s) {
  if (s == "attention") return FillingMode::kAttention;
  if (s == "linear_no_bias") return FillingMode::kLinearNoBias;
  if (s == "linear_with_bias") return FillingMode::kLinearWithBias;
  throw Error(ErrorKind::kConfig, "unknown filling mode '" + s + "'");
}

void NetworkConfig::validate() const {
  if (resolution <= 0 || resolution % 16 != 0)
    throw Error(ErrorKind::kConfig, "resolution must be a positive multiple of 16");
  if (!(width_multiplier > 0.0)) throw Error(ErrorKind::kConfig, "width_multiplier must be > 0");
  if (shape_size < 2 || attention_dim < 1 || feature_dim < 1)
    throw Error(ErrorKind::kConfig, "head sizes must be positive");
  if (!(scale_min > 0.0) || scale_min > scale_max)
    throw Error(ErrorKind::kConfig, "invalid scale clamp");
}

int NetworkConfig::width(int base) const {
  return std::max(4, static_cast<int>(std::lround(base * width_multiplier)));
}

nlohmann::json NetworkConfig::to_json() const {
  return {{"resolution", resolution},
          {"width_multiplier", width_multiplier},
          {"shape_size", shape_size},
          {"attention_dim", attention_dim},
          {"feature_dim", feature_dim},
          {"init_seed", init_seed},
          {"refine", refine},
          {"literal_mean", literal_mean},
          {"fallback_scale", fallback_scale},
          {"scale_min", scale_min},
          {"scale_max", scale_max},
          {"filling", to_string(filling)}};
}

NetworkConfig NetworkConfig::from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.resolution = j.value("resolution", c.resolution);
  c.width_multiplier = j.value("width_multiplier", c.width_multiplier);
  c.shape_size = j.value("shape_size", c.shape_size);
  c.attention_dim = j.value("attention_dim", c.attention_dim);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.init_seed = j.value("init_seed", c.init_seed);
  c.refine = j.value("refine", c.refine);
  c.literal_mean = j.value("literal_mean", c.literal_mean);
  c.fallback_scale = j.value("fallback_scale", c.fallback_scale);
  c.scale_min = j.value("scale_min", c.scale_min);
  c.scale_max = j.value("scale_max", c.scale_max);
  c.filling = filling_from_string(j.value("filling", std::string("attention")));
  return c;
}

bool NetworkConfig::architecture_equal(const NetworkConfig& o) const {
  return width_multiplier == o.width_multiplier && shape_size == o.shape_size &&
         attention_dim == o.attention_dim && feature_dim == o.feature_dim;
}

// ---------------------------------------------------------------------------

ConvNormReluImpl::ConvNormReluImpl(int in, int out, int stride)
    : conv(register_module("conv", conv3x3(in, out, stride))),
      norm(register_module("norm", instance_norm(out))) {}

torch::Tensor ConvNormReluImpl::forward(const torch::Tensor& x) {
  return torch::relu(norm(conv(x)));
}

BasicBlockImpl::BasicBlockImpl(int in, int out, int stride)
    : conv1(register_module("conv1", conv3x3(in, out, stride, false))),
      conv2(register_module("conv2", conv3x3(out, out, 1, false))),
      norm1(register_module("norm1", instance_norm(out))),
      norm2(register_module("norm2", instance_norm(out))) {
  if (stride != 1 || in != out) {
    downsample = register_module(
        "downsample",
        torch::nn::Sequential(
            torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1).stride(stride).bias(false)),
            instance_norm(out)));
  }
}

torch::Tensor BasicBlockImpl::forward(const torch::Tensor& x) {
  auto y = torch::relu(norm1(conv1(x)));
  y = norm2(conv2(y));
  const auto skip = downsample ? downsample->forward(x) : x;
  return torch::relu(y + skip);
}

ResNetEncoderImpl::ResNetEncoderImpl(const NetworkConfig& cfg) {
  const int stem = cfg.width(32);
  stem1 = register_module("stem1", ConvNormRelu(6, stem, 2));
  stem2 = register_module("stem2", ConvNormRelu(stem, stem, 1));
  pool = register_module("pool",
                         torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(3).stride(2).padding(1)));

  const int blocks[4] = {3, 4, 6, 3};
  const int widths[4] = {cfg.width(32), cfg.width(64), cfg.width(128), cfg.width(256)};
  // The last stage keeps resolution so the total stride is 16.
  const int strides[4] = {1, 2, 2, 1};
  int in = stem;
  for (int s = 0; s < 4; ++s) {
    torch::nn::Sequential stage;
    for (int b = 0; b < blocks[s]; ++b) {
      stage->push_back(BasicBlock(in, widths[s], b == 0 ? strides[s] : 1));
      in = widths[s];
    }
    stages.push_back(register_module("layer" + std::to_string(s + 1), stage));
    stage_channels_.push_back(widths[s]);
  }
}

std::vector<torch::Tensor> ResNetEncoderImpl::forward(const torch::Tensor& x) {
  auto y = pool(stem2(stem1(x)));
  std::vector<torch::Tensor> out;
  for (auto& stage : stages) {
    y = stage->forward(y);
    out.push_back(y);
  }
  return out;
}

BoxHeadImpl::BoxHeadImpl(const NetworkConfig& cfg) {
  const int in = cfg.bottleneck_channels();
  const int mid = cfg.width(128);
  const int top = cfg.width(512);
  conv1 = register_module("conv1", ConvNormRelu(in, mid, 1));
  conv2 = register_module("conv2", ConvNormRelu(mid, mid, 1));
  conv3 = register_module("conv3", ConvNormRelu(mid, top, 2));
  fc = register_module("fc", torch::nn::Linear(top, 4));
  // r = 0 at initialization, so the first predicted shadow box is the object box.
  torch::NoGradGuard guard;
  fc->weight.zero_();
  fc->bias.zero_();
}

torch::Tensor BoxHeadImpl::forward(const torch::Tensor& features) {
  auto y = conv3(conv2(conv1(features)));
  y = F::adaptive_avg_pool2d(y, F::AdaptiveAvgPool2dFuncOptions(1)).flatten(1);
  return fc(y);
}

ShapeHeadImpl::ShapeHeadImpl(const NetworkConfig& cfg) : size(cfg.shape_size) {
  const int in = cfg.bottleneck_channels();
  const int mid = cfg.width(128);
  body = register_module("body", torch::nn::Sequential(ConvNormRelu(in, mid), ConvNormRelu(mid, mid),
                                                       ConvNormRelu(mid, mid), ConvNormRelu(mid, mid)));
  out = register_module("out", conv3x3(mid, 1));
}

torch::Tensor ShapeHeadImpl::forward(const torch::Tensor& features) {
  return tanh_to_unit(out(body->forward(upsample_to(features, size, size))));
}

RefinerImpl::RefinerImpl(const NetworkConfig& cfg) {
  const int widths[5] = {cfg.bottleneck_channels(), cfg.width(128), cfg.width(64), cfg.width(32),
                         cfg.width(16)};
  for (int b = 0; b < 4; ++b) {
    // The last block also receives the rough mask and the object mask.
    const int in = widths[b] + (b == 3 ? 2 : 0);
    blocks.push_back(register_module(
        "up" + std::to_string(b + 1),
        torch::nn::Sequential(ConvNormRelu(in, widths[b + 1]), ConvNormRelu(widths[b + 1], widths[b + 1]))));
  }
  tail = register_module("tail", ConvNormRelu(widths[4], widths[4]));
  out = register_module("out", conv3x3(widths[4], 1));
}

torch::Tensor RefinerImpl::forward(const torch::Tensor& features, const torch::Tensor& rough_mask,
                                   const torch::Tensor& fg_object) {
  auto y = features;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    y = upsample_to(y, static_cast<int>(y.size(2) * 2), static_cast<int>(y.size(3) * 2));
    if (b + 1 == blocks.size()) {
      require(y.size(2) == rough_mask.size(2) && y.size(3) == rough_mask.size(3),
              "refiner output does not match mask resolution");
      y = torch::cat({y, rough_mask, fg_object}, 1);
    }
    y = blocks[b]->forward(y);
  }
  return tanh_to_unit(out(tail(y)));
}

FillingEncoderImpl::FillingEncoderImpl(const NetworkConfig& cfg) {
  backbone = register_module("backbone", ResNetEncoder(cfg));
  const int proj = cfg.width(32);
  int k = 0;
  for (int c : backbone->stage_channels()) {
    projections.push_back(register_module(
        "proj" + std::to_string(++k), torch::nn::Conv2d(torch::nn::Conv2dOptions(c, proj, 1))));
  }
  fuse = register_module(
      "fuse", conv3x3(proj * static_cast<int>(projections.size()), cfg.feature_dim));
}

torch::Tensor FillingEncoderImpl::forward(const torch::Tensor& x) {
  const int h = static_cast<int>(x.size(2)), w = static_cast<int>(x.size(3));
  const auto stages = backbone->forward(x);
  std::vector<torch::Tensor> parts;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    // A 1x1 conv commutes with bilinear upsampling; projecting first is cheaper.
    parts.push_back(upsample_to(projections[s](stages[s]), h, w));
  }
  return fuse(torch::cat(parts, 1));
}

// ---------------------------------------------------------------------------

FillResult attentive_fill(const torch::Tensor& features, const torch::Tensor& refined,
                          const torch::Tensor& bg_shadow, const torch::Tensor& composite,
                          torch::nn::Linear projection, const FillOptions& opts) {
  require(features.dim() == 3 && refined.dim() == 2 && bg_shadow.dim() == 2 &&
              composite.dim() == 3 && composite.size(0) == 3,
          "attentive_fill expects [C,H,W], [H,W], [H,W], [3,H,W]");
  require(features.size(1) == refined.size(0) && features.size(2) == refined.size(1) &&
              refined.sizes() == bg_shadow.sizes() && composite.size(1) == refined.size(0) &&
              composite.size(2) == refined.size(1),
          "attentive_fill inputs disagree on resolution");

  FillResult r;
  const auto mass = refined.sum();
  if (mass.item<double>() < opts.eps)
    throw Error(ErrorKind::kEmptyForeground, "refined shadow mask is empty");

  const int64_t c = features.size(0);
  const auto flat_features = features.reshape({c, -1});
  const auto flat_colors = composite.reshape({3, -1});
  const auto weights = refined.reshape({-1});

  r.region_mean = (flat_colors * weights).sum(1) / mass;

  const auto index = (bg_shadow.reshape({-1}) > 0.5).nonzero().reshape({-1});
  const int64_t n_bs = index.size(0);
  if (n_bs == 0) {
    r.fallback_used = true;
    r.attention = torch::empty({0}, features.options());
    r.scale = torch::full({3}, opts.fallback_scale, composite.options());
    r.target_mean = r.scale * r.region_mean;
  } else {
    const auto f_fs = (flat_features * weights).sum(1) / mass;           // [C]
    const auto f_bs = flat_features.index_select(1, index).transpose(0, 1);  // [N,C]
    const auto query = projection->forward(f_fs.unsqueeze(0));              // [1,D]
    const auto keys = projection->forward(f_bs);                            // [N,D]
    const auto logits = keys.matmul(query.squeeze(0));                      // [N]
    r.attention = torch::softmax(logits, 0);
    const auto colors = flat_colors.index_select(1, index);                 // [3,N]
    r.target_mean = colors.matmul(r.attention);
    if (opts.literal_mean) r.target_mean = r.target_mean / static_cast<double>(n_bs);
    r.scale = torch::clamp(r.target_mean / torch::clamp_min(r.region_mean, opts.eps), opts.scale_min,
                           opts.scale_max);
  }

  r.dark = torch::clamp(composite * r.scale.view({3, 1, 1}), 0.0, 1.0);
  const auto m = refined.unsqueeze(0);
  r.output = m * r.dark + (1.0 - m) * composite;
  return r;
}

torch::Tensor decode_boxes(const torch::Tensor& object_box, const torch::Tensor& r) {
  const auto xo = object_box.select(1, 0), yo = object_box.select(1, 1);
  const auto wo = object_box.select(1, 2), ho = object_box.select(1, 3);
  const auto x = xo + r.select(1, 0) * wo;
  const auto y = yo + r.select(1, 1) * ho;
  const auto w = torch::clamp_min(wo * torch::exp(r.select(1, 2)), 1.0);
  const auto h = torch::clamp_min(ho * torch::exp(r.select(1, 3)), 1.0);
  return torch::stack({x, y, w, h}, 1);
}

torch::Tensor place_patches(const torch::Tensor& patch, const torch::Tensor& boxes, int height,
                            int width) {
  require(patch.dim() == 4 && patch.size(1) == 1, "place_patches expects [B,1,S,S]");
  const int64_t batch = patch.size(0);
  const int64_t ph = patch.size(2), pw = patch.size(3);
  const auto b = boxes.detach().to(torch::kFloat64).cpu();
  const auto dopt = torch::TensorOptions().dtype(torch::kFloat64);
  const auto cols = torch::arange(width, dopt);
  const auto rows = torch::arange(height, dopt);

  auto axis = [](const torch::Tensor& coord, double center, double size, int64_t n) {
    const double lo = center - 0.5 * size, hi = center + 0.5 * size;
    auto p = torch::clamp((coord - lo) * (static_cast<double>(n) / size) - 0.5, 0.0,
                          static_cast<double>(n - 1));
    auto g = n > 1 ? p / static_cast<double>(n - 1) * 2.0 - 1.0 : torch::zeros_like(p);
    auto inside = (coord >= lo) & (coord < hi);
    return std::make_pair(g, inside);
  };

  std::vector<torch::Tensor> grids, masks;
  auto acc = b.accessor<double, 2>();
  for (int64_t i = 0; i < batch; ++i) {
    auto [gx, in_x] = axis(cols, acc[i][0], acc[i][2], pw);
    auto [gy, in_y] = axis(rows, acc[i][1], acc[i][3], ph);
    auto grid = torch::stack({gx.unsqueeze(0).expand({height, width}),
                              gy.unsqueeze(1).expand({height, width})},
                             2);
    grids.push_back(grid);
    masks.push_back((in_y.unsqueeze(1) & in_x.unsqueeze(0)).unsqueeze(0));
  }
  const auto grid = torch::stack(grids).to(patch.options());
  const auto inside = torch::stack(masks).to(patch.options());
  const auto sampled = F::grid_sample(patch, grid,
                                      F::GridSampleFuncOptions()
                                          .mode(torch::kBilinear)
                                          .padding_mode(torch::kZeros)
                                          .align_corners(true));
  return sampled * inside;
}

// ---------------------------------------------------------------------------

ShadowNetImpl::ShadowNetImpl(const NetworkConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.filling != FillingMode::kAttention)
    throw Error(ErrorKind::kNotImplemented,
                std::string("filling mode '") + to_string(cfg_.filling) + "' is not built");
  torch::manual_seed(cfg_.init_seed);
  context_encoder = register_module("context_encoder", ResNetEncoder(cfg_));
  box_head = register_module("box_head", BoxHead(cfg_));
  shape_head = register_module("shape_head", ShapeHead(cfg_));
  refiner = register_module("refiner", Refiner(cfg_));
  filling_encoder = register_module("filling_encoder", FillingEncoder(cfg_));
  projection = register_module(
      "projection",
      torch::nn::Linear(torch::nn::LinearOptions(cfg_.feature_dim, cfg_.attention_dim).bias(false)));
}

namespace {

torch::Tensor stack_inputs(const NetworkInputs& in, int resolution) {
  require(in.composite.defined() && in.fg_object.defined() && in.bg_object.defined() &&
              in.bg_shadow.defined(),
          "missing network input");
  require(in.composite.dim() == 4 && in.composite.size(1) == 3, "composite must be [B,3,H,W]");
  const auto b = in.composite.size(0);
  for (const auto* m : {&in.fg_object, &in.bg_object, &in.bg_shadow})
    require(m->dim() == 4 && m->size(0) == b && m->size(1) == 1 &&
                m->size(2) == in.composite.size(2) && m->size(3) == in.composite.size(3),
            "masks must be [B,1,H,W] matching the composite");
  require(in.composite.size(2) == resolution && in.composite.size(3) == resolution,
          "input resolution differs from the configured resolution");
  return torch::cat({in.composite, in.bg_shadow, in.bg_object, in.fg_object}, 1);
}

}  // namespace

torch::Tensor ShadowNetImpl::encode_context(const NetworkInputs& in) {
  return context_encoder->forward(stack_inputs(in, cfg_.resolution)).back();
}

torch::Tensor ShadowNetImpl::encode_filling(const NetworkInputs& in) {
  return filling_encoder->forward(stack_inputs(in, cfg_.resolution));
}

ForwardOutputs ShadowNetImpl::forward(const NetworkInputs& in) {
  const auto x = stack_inputs(in, cfg_.resolution);
  require(in.object_box.defined() && in.object_box.dim() == 2 &&
              in.object_box.size(0) == x.size(0) && in.object_box.size(1) == 4,
          "object_box must be [B,4]");
  const int h = static_cast<int>(x.size(2)), w = static_cast<int>(x.size(3));

  ForwardOutputs o;
  const auto bottleneck = context_encoder->forward(x).back();
  o.box_regression = box_head(bottleneck);
  o.shadow_box = decode_boxes(in.object_box.to(o.box_regression.options()), o.box_regression);
  o.shape_mask = shape_head(bottleneck);
  o.rough_mask = place_patches(o.shape_mask, o.shadow_box, h, w);
  o.refined_mask = cfg_.refine ? refiner(bottleneck, o.rough_mask, in.fg_object) : o.rough_mask;

  const auto features = filling_encoder(x);
  const FillOptions opts{cfg_.literal_mean, cfg_.fallback_scale, cfg_.scale_min,
                         cfg_.scale_max};
  std::vector<torch::Tensor> outs, darks, targets, regions, scales;
  for (int64_t b = 0; b < x.size(0); ++b) {
    FillResult r = attentive_fill(features[b], o.refined_mask[b][0], in.bg_shadow[b][0],
                                  in.composite[b], projection, opts);
    outs.push_back(r.output);
    darks.push_back(r.dark);
    targets.push_back(r.target_mean);
    regions.push_back(r.region_mean);
    scales.push_back(r.scale);
    o.attention.push_back(r.attention);
    o.fallback_used.push_back(r.fallback_used);
  }
  o.output = torch::stack(outs);
  o.dark = torch::stack(darks);
  o.target_mean = torch::stack(targets);
  o.region_mean = torch::stack(regions);
  o.scale = torch::stack(scales);
  return o;
}

std::int64_t count_parameters(const torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters(true)) n += p.numel();
  return n;
}

}  // namespace shadowcomp::net
