#include "shadowcomp/losses.hpp"

#include <numbers>

#include "shadowcomp/errors.hpp"

namespace shadowcomp::losses {

namespace {

void require_same(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.defined() || !b.defined() || a.sizes() != b.sizes())
    throw Error(ErrorKind::kShapeMismatch, what);
}

}  // namespace

const char* to_string(RecNorm n) noexcept { return n == RecNorm::kFull ? "full" : "region"; }

RecNorm rec_norm_from_string(const std::string& s) {
  if (s == "full") return RecNorm::kFull;
  if (s == "region") return RecNorm::kRegion;
  throw Error(ErrorKind::kConfig, "rec_norm must be 'full' or 'region'");
}

double loss_reg(const geometry::BBox& pred, const geometry::BBox& gt) {
  return geometry::ciou_loss(pred, gt);
}

torch::Tensor loss_reg(const torch::Tensor& pred, const torch::Tensor& gt) {
  require_same(pred, gt, "loss_reg expects matching [B,4] boxes");
  const auto g = gt.to(pred.options()).detach();
  auto col = [](const torch::Tensor& t, int i) { return t.select(1, i); };
  const auto px = col(pred, 0), py = col(pred, 1), pw = col(pred, 2), ph = col(pred, 3);
  const auto gx = col(g, 0), gy = col(g, 1), gw = col(g, 2), gh = col(g, 3);

  const auto pl = px - 0.5 * pw, pr = px + 0.5 * pw, pt = py - 0.5 * ph, pb = py + 0.5 * ph;
  const auto gl = gx - 0.5 * gw, gr = gx + 0.5 * gw, gt_ = gy - 0.5 * gh, gb = gy + 0.5 * gh;

  const auto iw = torch::clamp_min(torch::minimum(pr, gr) - torch::maximum(pl, gl), 0.0);
  const auto ih = torch::clamp_min(torch::minimum(pb, gb) - torch::maximum(pt, gt_), 0.0);
  const auto inter = iw * ih;
  const auto uni = pw * ph + gw * gh - inter;
  const auto iou = inter / uni;

  const auto rho2 = (px - gx).pow(2) + (py - gy).pow(2);
  const auto cw = torch::maximum(pr, gr) - torch::minimum(pl, gl);
  const auto ch = torch::maximum(pb, gb) - torch::minimum(pt, gt_);
  const auto c2 = cw.pow(2) + ch.pow(2);

  const double k = 4.0 / (std::numbers::pi * std::numbers::pi);
  const auto v = k * (torch::atan(gw / gh) - torch::atan(pw / ph)).pow(2);
  const auto alpha = [&] {
    torch::NoGradGuard guard;
    const auto denom = (1.0 - iou) + v;
    return torch::where(denom > 0, v / denom, torch::zeros_like(v));
  }();
  return (1.0 - iou + rho2 / c2 + alpha * v).mean();
}

torch::Tensor loss_shape(const torch::Tensor& pred, const torch::Tensor& gt) {
  require_same(pred, gt, "loss_shape expects matching masks");
  return (pred - gt).abs().mean();
}

torch::Tensor loss_mask(const torch::Tensor& pred, const torch::Tensor& gt) {
  require_same(pred, gt, "loss_mask expects matching masks");
  return (pred - gt).abs().mean();
}

torch::Tensor loss_rec(const torch::Tensor& output, const torch::Tensor& target,
                       const torch::Tensor& shadow_mask, RecNorm norm) {
  require_same(output, target, "loss_rec expects matching images");
  if (!shadow_mask.defined() || shadow_mask.dim() != output.dim() ||
      shadow_mask.size(0) != output.size(0) || shadow_mask.size(-1) != output.size(-1) ||
      shadow_mask.size(-2) != output.size(-2))
    throw Error(ErrorKind::kShapeMismatch, "loss_rec mask does not match the images");
  const auto diff = (output * shadow_mask - target * shadow_mask).pow(2);
  if (norm == RecNorm::kFull) return diff.mean();
  const auto count = torch::clamp_min(shadow_mask.sum() * output.size(1), 1.0);
  return diff.sum() / count;
}

LossBreakdown LossTerms::breakdown() const {
  return LossBreakdown{reg.item<double>(), shape.item<double>(), mask.item<double>(),
                       rec.item<double>(), total.item<double>()};
}

LossTerms loss_total(const torch::Tensor& reg, const torch::Tensor& shape, const torch::Tensor& mask,
                     const torch::Tensor& rec) {
  return LossTerms{reg, shape, mask, rec, reg + shape + mask + rec};
}

LossBreakdown loss_total(double reg, double shape, double mask, double rec) {
  return LossBreakdown{reg, shape, mask, rec, reg + shape + mask + rec};
}

LossTerms compute_losses(const net::ForwardOutputs& out, const Targets& t, RecNorm norm) {
  return loss_total(loss_reg(out.shadow_box, t.shadow_box), loss_shape(out.shape_mask, t.shape_mask),
                    loss_mask(out.refined_mask, t.fg_shadow),
                    loss_rec(out.output, t.target, t.fg_shadow, norm));
}

}  // namespace shadowcomp::losses
