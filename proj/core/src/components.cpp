#include "shadowcomp/components.hpp"

#include <numeric>

namespace shadowcomp::metrics {

namespace {

class DisjointSet {
 public:
  int make() {
    parent_.push_back(static_cast<int>(parent_.size()));
    return parent_.back();
  }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Keep the smaller root so labels follow raster order.
    if (a < b) parent_[b] = a;
    else parent_[a] = b;
  }

  int size() const noexcept { return static_cast<int>(parent_.size()); }

 private:
  std::vector<int> parent_;
};

}  // namespace

Labeling label_components(const std::vector<std::uint8_t>& fg, int height, int width,
                          Connectivity conn) {
  Labeling out;
  out.height = height;
  out.width = width;
  out.labels.assign(static_cast<std::size_t>(height) * width, 0);

  DisjointSet sets;
  sets.make();  // provisional label 0 = background
  const bool eight = conn == Connectivity::kEight;
  auto idx = [width](int r, int c) { return static_cast<std::size_t>(r) * width + c; };

  // First pass: provisional labels from the already-visited neighbors
  // (W, NW, N, NE for 8-connectivity; W, N for 4-connectivity).
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (!fg[idx(r, c)]) continue;
      int label = 0;
      auto visit = [&](int rr, int cc) {
        if (rr < 0 || cc < 0 || cc >= width) return;
        const int n = out.labels[idx(rr, cc)];
        if (n == 0) return;
        if (label == 0) label = n;
        else sets.unite(label, n);
      };
      visit(r, c - 1);
      visit(r - 1, c);
      if (eight) {
        visit(r - 1, c - 1);
        visit(r - 1, c + 1);
      }
      out.labels[idx(r, c)] = label == 0 ? sets.make() : label;
    }
  }

  // Second pass: resolve to roots and renumber densely.
  std::vector<int> dense(sets.size(), 0);
  out.areas.assign(1, 0);
  for (auto& l : out.labels) {
    if (l == 0) continue;
    const int root = sets.find(l);
    if (dense[root] == 0) {
      dense[root] = ++out.count;
      out.areas.push_back(0);
    }
    l = dense[root];
    ++out.areas[l];
  }
  return out;
}

Labeling label_components(const Mask& m, Connectivity conn) {
  std::vector<std::uint8_t> fg(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) fg[i] = m.data[i] > 0.5f ? 1 : 0;
  return label_components(fg, m.height, m.width, conn);
}

}  // namespace shadowcomp::metrics
