#include "shadowcomp/raster.hpp"

#include <algorithm>

#include "shadowcomp/errors.hpp"

namespace shadowcomp {

Mask binarize(const Mask& m, float threshold) {
  Mask out(m.height, m.width);
  std::transform(m.data.begin(), m.data.end(), out.data.begin(),
                 [threshold](float v) { return v > threshold ? 1.0f : 0.0f; });
  return out;
}

Mask mask_union(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) throw Error(ErrorKind::kShapeMismatch, "mask_union");
  Mask out(a.height, a.width);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = std::max(a.data[i], b.data[i]);
  return out;
}

std::size_t count_above(const Mask& m, float threshold) {
  return static_cast<std::size_t>(
      std::count_if(m.data.begin(), m.data.end(), [threshold](float v) { return v > threshold; }));
}

}  // namespace shadowcomp
