#pragma once

#include <string>

#include <torch/torch.h>

#include "shadowcomp/geometry.hpp"
#include "shadowcomp/network.hpp"

namespace shadowcomp::losses {

/// How the shadow reconstruction loss is normalized: over every pixel and
/// channel of the masked images (kFull), or over shadow pixels only (kRegion).
enum class RecNorm { kFull, kRegion };

const char* to_string(RecNorm n) noexcept;
RecNorm rec_norm_from_string(const std::string& s);

struct LossBreakdown {
  double reg = 0.0;
  double shape = 0.0;
  double mask = 0.0;
  double rec = 0.0;
  double total = 0.0;
};

/// Box loss for a single pair; identical to geometry::ciou_loss.
double loss_reg(const geometry::BBox& pred, const geometry::BBox& gt);

/// Batched CIoU loss, boxes [B,4] as (x, y, w, h), mean over the batch.
/// alpha is detached, matching geometry::ciou_loss_with_grad.
torch::Tensor loss_reg(const torch::Tensor& pred, const torch::Tensor& gt);

/// Mean absolute error over all elements. Throws kShapeMismatch.
torch::Tensor loss_shape(const torch::Tensor& pred, const torch::Tensor& gt);
torch::Tensor loss_mask(const torch::Tensor& pred, const torch::Tensor& gt);

/// MSE between output * mask and target * mask. Images [B,3,H,W], mask [B,1,H,W].
torch::Tensor loss_rec(const torch::Tensor& output, const torch::Tensor& target,
                       const torch::Tensor& shadow_mask, RecNorm norm = RecNorm::kFull);

/// Per-batch supervision.
struct Targets {
  torch::Tensor shadow_box;   // [B,4]
  torch::Tensor shape_mask;   // [B,1,S,S], crop of the true shadow mask by its own box
  torch::Tensor fg_shadow;    // [B,1,H,W]
  torch::Tensor target;       // [B,3,H,W]
};

struct LossTerms {
  torch::Tensor reg, shape, mask, rec, total;
  LossBreakdown breakdown() const;
};

/// Unit-weight sum of the four terms.
LossTerms loss_total(const torch::Tensor& reg, const torch::Tensor& shape, const torch::Tensor& mask,
                     const torch::Tensor& rec);
LossBreakdown loss_total(double reg, double shape, double mask, double rec);

LossTerms compute_losses(const net::ForwardOutputs& out, const Targets& targets,
                         RecNorm norm = RecNorm::kFull);

}  // namespace shadowcomp::losses
