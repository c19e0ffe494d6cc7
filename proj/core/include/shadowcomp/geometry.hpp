#pragma once

#include <array>

#include "shadowcomp/raster.hpp"

namespace shadowcomp::geometry {

/// Axis-aligned box in center-size form. Coordinates are continuous over
/// pixel centers: pixel (row r, col c) sits at (x=c, y=r) and covers
/// [c-0.5, c+0.5) x [r-0.5, r+0.5).
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double left() const noexcept { return x - 0.5 * w; }
  double right() const noexcept { return x + 0.5 * w; }
  double top() const noexcept { return y - 0.5 * h; }
  double bottom() const noexcept { return y + 0.5 * h; }
  double area() const noexcept { return w * h; }
  bool valid() const noexcept;

  bool operator==(const BBox&) const = default;
};

/// Object-to-shadow box transform: offsets normalized by the object box
/// size, and log-ratios of the sizes.
struct BoxRegression {
  double rx = 0.0;
  double ry = 0.0;
  double rw = 0.0;
  double rh = 0.0;

  bool operator==(const BoxRegression&) const = default;
};

/// Tight box around pixels strictly above `threshold`. Throws kEmptyMask.
BBox bbox_from_mask(const Mask& mask, float threshold = 0.5f);

/// Throws kDegenerateBox when either box has non-positive width or height.
BoxRegression encode_regression(const BBox& object, const BBox& shadow);

/// Inverse of encode_regression. Width and height are clamped to >= 1 px.
BBox decode_regression(const BBox& object, const BoxRegression& r);

/// Complete-IoU loss: 1 - IoU + rho^2 / c^2 + alpha * v.
double ciou_loss(const BBox& pred, const BBox& gt);

/// CIoU loss together with d(loss)/d(pred.x, pred.y, pred.w, pred.h).
/// alpha is held constant while differentiating.
struct CiouWithGrad {
  double loss = 0.0;
  std::array<double, 4> grad{};
};
CiouWithGrad ciou_loss_with_grad(const BBox& pred, const BBox& gt);

/// Plain intersection over union.
double box_iou(const BBox& a, const BBox& b);

/// Bilinear sample at continuous pixel-center coordinates; zero outside.
double sample_bilinear(const Mask& m, double x, double y);

/// Crop `box` out of `src` and resample to out_size x out_size (bilinear,
/// zero outside the raster). Throws kOutOfFrame when the box misses the raster.
Mask crop_resize(const Mask& src, const BBox& box, int out_size = 32);

/// Resize `patch` into `box` on a height x width canvas; zeros elsewhere.
/// Box pixels falling outside the canvas are dropped.
Mask place_inverse(const Mask& patch, const BBox& box, int height, int width);

/// True when the pixel center (row, col) lies in the half-open box extent.
bool pixel_in_box(const BBox& box, int row, int col) noexcept;

}  // namespace shadowcomp::geometry
