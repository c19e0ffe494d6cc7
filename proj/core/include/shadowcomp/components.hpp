#pragma once

#include <cstdint>
#include <vector>

#include "shadowcomp/raster.hpp"

namespace shadowcomp::metrics {

enum class Connectivity { kFour = 1, kEight = 2 };

/// Label image produced by two-pass union-find labeling. Label 0 is
/// background; foreground components are numbered 1..count in raster order
/// of their first pixel.
struct Labeling {
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> labels;
  std::vector<std::int64_t> areas;  // areas[0] unused
  int count = 0;
};

/// Labels the pixels where `foreground[i]` is true.
Labeling label_components(const std::vector<std::uint8_t>& foreground, int height, int width,
                          Connectivity conn = Connectivity::kEight);

/// Pixels strictly above 0.5.
Labeling label_components(const Mask& m, Connectivity conn = Connectivity::kEight);

}  // namespace shadowcomp::metrics
