#include "shadowcomp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "shadowcomp/errors.hpp"

namespace shadowcomp::geometry {

namespace {

constexpr double kMinSide = 1.0;

void require_valid(const BBox& b, const char* what) {
  if (!b.valid()) throw Error(ErrorKind::kDegenerateBox, what);
}

// Overlap length of [a0,a1) and [b0,b1) and its derivatives with respect to
// the center and size of the first interval.
struct Overlap {
  double len = 0.0;
  double d_center = 0.0;
  double d_size = 0.0;
};

Overlap overlap_1d(double a0, double a1, double b0, double b1) {
  Overlap o;
  const double hi = std::min(a1, b1);
  const double lo = std::max(a0, b0);
  if (hi <= lo) return o;
  o.len = hi - lo;
  const double d_hi_c = a1 < b1 ? 1.0 : 0.0;
  const double d_lo_c = a0 > b0 ? 1.0 : 0.0;
  o.d_center = d_hi_c - d_lo_c;
  o.d_size = 0.5 * d_hi_c + 0.5 * d_lo_c;
  return o;
}

Overlap enclosing_1d(double a0, double a1, double b0, double b1) {
  Overlap o;
  o.len = std::max(a1, b1) - std::min(a0, b0);
  const double d_hi_c = a1 > b1 ? 1.0 : 0.0;
  const double d_lo_c = a0 < b0 ? 1.0 : 0.0;
  o.d_center = d_hi_c - d_lo_c;
  o.d_size = 0.5 * d_hi_c + 0.5 * d_lo_c;
  return o;
}

}  // namespace

bool BBox::valid() const noexcept {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0.0 &&
         h > 0.0;
}

BBox bbox_from_mask(const Mask& mask, float threshold) {
  int rmin = mask.height, rmax = -1, cmin = mask.width, cmax = -1;
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      if (mask.at(r, c) > threshold) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
      }
    }
  }
  if (rmax < 0) throw Error(ErrorKind::kEmptyMask, "no pixel above threshold");
  return BBox{0.5 * (cmin + cmax), 0.5 * (rmin + rmax), static_cast<double>(cmax - cmin + 1),
              static_cast<double>(rmax - rmin + 1)};
}

BoxRegression encode_regression(const BBox& object, const BBox& shadow) {
  require_valid(object, "object box");
  require_valid(shadow, "shadow box");
  return BoxRegression{(shadow.x - object.x) / object.w, (shadow.y - object.y) / object.h,
                       std::log(shadow.w / object.w), std::log(shadow.h / object.h)};
}

BBox decode_regression(const BBox& object, const BoxRegression& r) {
  return BBox{object.x + r.rx * object.w, object.y + r.ry * object.h,
              std::max(kMinSide, object.w * std::exp(r.rw)),
              std::max(kMinSide, object.h * std::exp(r.rh))};
}

CiouWithGrad ciou_loss_with_grad(const BBox& p, const BBox& g) {
  require_valid(p, "predicted box");
  require_valid(g, "target box");

  const Overlap ix = overlap_1d(p.left(), p.right(), g.left(), g.right());
  const Overlap iy = overlap_1d(p.top(), p.bottom(), g.top(), g.bottom());
  const double inter = ix.len * iy.len;
  const double uni = p.area() + g.area() - inter;
  const double iou = inter / uni;

  const double dx = p.x - g.x;
  const double dy = p.y - g.y;
  const double rho2 = dx * dx + dy * dy;
  const Overlap cx = enclosing_1d(p.left(), p.right(), g.left(), g.right());
  const Overlap cy = enclosing_1d(p.top(), p.bottom(), g.top(), g.bottom());
  const double c2 = cx.len * cx.len + cy.len * cy.len;

  constexpr double kV = 4.0 / (std::numbers::pi * std::numbers::pi);
  const double delta = std::atan(g.w / g.h) - std::atan(p.w / p.h);
  const double v = kV * delta * delta;
  const double denom = (1.0 - iou) + v;
  const double alpha = denom > 0.0 ? v / denom : 0.0;

  CiouWithGrad out;
  out.loss = 1.0 - iou + rho2 / c2 + alpha * v;

  // Intersection and union derivatives in (x, y, w, h).
  const std::array<double, 4> d_inter{iy.len * ix.d_center, ix.len * iy.d_center,
                                      iy.len * ix.d_size, ix.len * iy.d_size};
  const std::array<double, 4> d_area{0.0, 0.0, p.h, p.w};
  const std::array<double, 4> d_rho2{2.0 * dx, 2.0 * dy, 0.0, 0.0};
  const std::array<double, 4> d_c2{2.0 * cx.len * cx.d_center, 2.0 * cy.len * cy.d_center,
                                   2.0 * cx.len * cx.d_size, 2.0 * cy.len * cy.d_size};
  const double s = p.w * p.w + p.h * p.h;
  const std::array<double, 4> d_v{0.0, 0.0, -2.0 * kV * delta * p.h / s,
                                  2.0 * kV * delta * p.w / s};

  for (int i = 0; i < 4; ++i) {
    const double d_uni = d_area[i] - d_inter[i];
    const double d_iou = (d_inter[i] * uni - inter * d_uni) / (uni * uni);
    const double d_dist = (d_rho2[i] * c2 - rho2 * d_c2[i]) / (c2 * c2);
    out.grad[i] = -d_iou + d_dist + alpha * d_v[i];
  }
  return out;
}

double ciou_loss(const BBox& pred, const BBox& gt) { return ciou_loss_with_grad(pred, gt).loss; }

double box_iou(const BBox& a, const BBox& b) {
  const double iw = std::max(0.0, std::min(a.right(), b.right()) - std::max(a.left(), b.left()));
  const double ih = std::max(0.0, std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top()));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double sample_bilinear(const Mask& m, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  auto px = [&](int r, int c) -> double {
    if (r < 0 || c < 0 || r >= m.height || c >= m.width) return 0.0;
    return m.at(r, c);
  };
  return (1 - ay) * ((1 - ax) * px(y0, x0) + ax * px(y0, x0 + 1)) +
         ay * ((1 - ax) * px(y0 + 1, x0) + ax * px(y0 + 1, x0 + 1));
}

Mask crop_resize(const Mask& src, const BBox& box, int out_size) {
  require_valid(box, "crop box");
  if (out_size < 1) throw Error(ErrorKind::kShapeMismatch, "out_size must be >= 1");
  if (box.right() <= -0.5 || box.left() >= src.width - 0.5 || box.bottom() <= -0.5 ||
      box.top() >= src.height - 0.5) {
    throw Error(ErrorKind::kOutOfFrame, "crop box does not intersect the raster");
  }
  Mask out(out_size, out_size);
  const double sx = box.w / out_size;
  const double sy = box.h / out_size;
  for (int r = 0; r < out_size; ++r) {
    const double y = box.top() + (r + 0.5) * sy;
    for (int c = 0; c < out_size; ++c) {
      const double x = box.left() + (c + 0.5) * sx;
      out.at(r, c) = static_cast<float>(sample_bilinear(src, x, y));
    }
  }
  return out;
}

bool pixel_in_box(const BBox& box, int row, int col) noexcept {
  return col >= box.left() && col < box.right() && row >= box.top() && row < box.bottom();
}

Mask place_inverse(const Mask& patch, const BBox& box, int height, int width) {
  Mask out(height, width);
  if (patch.empty() || !box.valid()) return out;
  const int c0 = std::max(0, static_cast<int>(std::ceil(box.left())));
  const int c1 = std::min(width - 1, static_cast<int>(std::ceil(box.right())) - 1);
  const int r0 = std::max(0, static_cast<int>(std::ceil(box.top())));
  const int r1 = std::min(height - 1, static_cast<int>(std::ceil(box.bottom())) - 1);
  const double kx = patch.width / box.w;
  const double ky = patch.height / box.h;
  for (int r = r0; r <= r1; ++r) {
    const double py = std::clamp((r - box.top()) * ky - 0.5, 0.0, patch.height - 1.0);
    for (int c = c0; c <= c1; ++c) {
      const double px = std::clamp((c - box.left()) * kx - 0.5, 0.0, patch.width - 1.0);
      out.at(r, c) = static_cast<float>(sample_bilinear(patch, px, py));
    }
  }
  return out;
}

}  // namespace shadowcomp::geometry
