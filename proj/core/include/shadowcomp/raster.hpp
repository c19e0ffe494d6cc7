#pragma once

#include <cstddef>
#include <vector>

namespace shadowcomp {

/// Single-channel float raster, row-major. Values are expected in [0,1].
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Mask() = default;
  Mask(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  float& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
  float at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }

  bool empty() const noexcept { return data.empty(); }
  std::size_t size() const noexcept { return data.size(); }
  bool same_shape(const Mask& other) const noexcept {
    return height == other.height && width == other.width;
  }

  bool operator==(const Mask&) const = default;
};

/// Three-channel float raster stored planar (channel, row, col). Values in [0,1].
struct Image {
  static constexpr int kChannels = 3;

  int height = 0;
  int width = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<std::size_t>(kChannels) * h * w, fill) {}

  float& at(int c, int row, int col) {
    return data[(static_cast<std::size_t>(c) * height + row) * width + col];
  }
  float at(int c, int row, int col) const {
    return data[(static_cast<std::size_t>(c) * height + row) * width + col];
  }

  std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }
  bool same_shape(const Image& other) const noexcept {
    return height == other.height && width == other.width;
  }
  bool same_shape(const Mask& m) const noexcept { return height == m.height && width == m.width; }

  bool operator==(const Image&) const = default;
};

/// Binarize at `threshold` (strictly greater is foreground).
Mask binarize(const Mask& m, float threshold = 0.5f);

/// Pixelwise max of two same-shape masks.
Mask mask_union(const Mask& a, const Mask& b);

/// Number of pixels strictly above `threshold`.
std::size_t count_above(const Mask& m, float threshold = 0.5f);

}  // namespace shadowcomp
