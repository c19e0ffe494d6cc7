#include "shadowcomp/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>

#include "shadowcomp/errors.hpp"

namespace shadowcomp::synth {

namespace {

using geometry::BBox;

struct ChannelRange {
  float lo = 1.0f;
  float hi = 0.0f;
};

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  bool coin(double p) { return uniform(0.0, 1.0) < p; }

  Color color(const std::array<double, 6>& box) {
    return Color{static_cast<float>(uniform(box[0], box[1])),
                 static_cast<float>(uniform(box[2], box[3])),
                 static_cast<float>(uniform(box[4], box[5]))};
  }

 private:
  std::mt19937_64 gen_;
};

// Per-channel (lo, hi) boxes for ground palettes.
constexpr std::array<double, 6> kWarm{0.66, 0.90, 0.46, 0.68, 0.26, 0.44};
constexpr std::array<double, 6> kCool{0.30, 0.48, 0.50, 0.70, 0.66, 0.90};
constexpr float kObjectContrast = 0.08f;

std::array<ChannelRange, 3> ground_range(const GroundSpec& g) {
  std::array<ChannelRange, 3> r;
  for (int c = 0; c < 3; ++c) {
    const float amp = static_cast<float>(g.texture_amplitude);
    r[c].lo = std::max(0.0f, std::min(g.top[c], g.bottom[c]) - amp);
    r[c].hi = std::min(1.0f, std::max(g.top[c], g.bottom[c]) + amp);
  }
  return r;
}

bool contrasts(const Color& col, const std::array<ChannelRange, 3>& range) {
  for (int c = 0; c < 3; ++c) {
    if (col[c] < range[c].lo - kObjectContrast || col[c] > range[c].hi + kObjectContrast) return true;
  }
  return false;
}

float ground_value(const GroundSpec& g, int c, int row, int col, int res) {
  const double t = res > 1 ? static_cast<double>(row) / (res - 1) : 0.0;
  double v = (1.0 - t) * g.top[c] + t * g.bottom[c];
  if (g.texture_amplitude > 0.0) {
    const double tex = 0.25 * (std::sin(g.texture_freq[0] * col + g.texture_phase[0]) +
                               std::sin(g.texture_freq[1] * row + g.texture_phase[1]) +
                               std::sin(g.texture_freq[2] * (col + row) + g.texture_phase[2]) +
                               std::sin(g.texture_freq[3] * (col - row) + g.texture_phase[3]));
    v += g.texture_amplitude * tex;
  }
  return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

Image render_ground(const SceneSpec& scene) {
  const int res = scene.resolution;
  Image img(res, res);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < res; ++r)
      for (int x = 0; x < res; ++x) img.at(c, r, x) = ground_value(scene.ground, c, r, x, res);
  return img;
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * i * i / (sigma * sigma));
    k[i + radius] = static_cast<float>(w);
    sum += w;
  }
  for (auto& w : k) w = static_cast<float>(w / sum);
  return k;
}

// Separable blur with zero padding outside the frame.
Mask blur(const Mask& m, double sigma) {
  if (sigma <= 0.0) return m;
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  Mask tmp(m.height, m.width), out(m.height, m.width);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        const int cc = c + i;
        if (cc >= 0 && cc < m.width) acc += k[i + radius] * m.at(r, cc);
      }
      tmp.at(r, c) = acc;
    }
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        const int rr = r + i;
        if (rr >= 0 && rr < m.height) acc += k[i + radius] * tmp.at(rr, c);
      }
      out.at(r, c) = std::clamp(acc, 0.0f, 1.0f);
    }
  return out;
}

void paint(Image& img, const Mask& sil, const Color& color) {
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      if (sil.at(r, c) > 0.5f)
        for (int ch = 0; ch < 3; ++ch) img.at(ch, r, c) = color[ch];
}

void darken(Image& img, const Mask& alpha, double attenuation) {
  const float keep = static_cast<float>(1.0 - attenuation);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const float f = 1.0f - alpha.at(r, c) * keep;
      for (int ch = 0; ch < 3; ++ch) img.at(ch, r, c) *= f;
    }
}

std::vector<std::size_t> painter_order(const SceneSpec& scene) {
  std::vector<std::size_t> order(scene.objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scene.objects[a].anchor_y < scene.objects[b].anchor_y;
  });
  return order;
}

}  // namespace

const char* to_string(Domain d) noexcept {
  switch (d) {
    case Domain::kA: return "A";
    case Domain::kB: return "B";
    case Domain::kCustom: return "custom";
  }
  return "custom";
}

Domain domain_from_string(const std::string& s) {
  if (s == "A") return Domain::kA;
  if (s == "B") return Domain::kB;
  if (s == "custom") return Domain::kCustom;
  throw Error(ErrorKind::kConfig, "unknown domain '" + s + "'");
}

const char* to_string(ShapeKind k) noexcept {
  switch (k) {
    case ShapeKind::kRectangle: return "rectangle";
    case ShapeKind::kEllipse: return "ellipse";
    case ShapeKind::kTriangle: return "triangle";
    case ShapeKind::kCapsule: return "capsule";
  }
  return "rectangle";
}

ShapeKind shape_from_string(const std::string& s) {
  if (s == "rectangle") return ShapeKind::kRectangle;
  if (s == "ellipse") return ShapeKind::kEllipse;
  if (s == "triangle") return ShapeKind::kTriangle;
  if (s == "capsule") return ShapeKind::kCapsule;
  throw Error(ErrorKind::kConfig, "unknown shape '" + s + "'");
}

bool ObjectSpec::contains(double x, double y) const noexcept {
  // Local frame: u to the right of the anchor, t upward from the contact row.
  double u = x - anchor_x;
  double t = anchor_y - y;
  if (orientation != 0.0) {
    const double cs = std::cos(orientation), sn = std::sin(orientation);
    const double ru = cs * u - sn * t;
    const double rt = sn * u + cs * t;
    u = ru;
    t = rt;
  }
  const double hw = 0.5 * width;
  switch (kind) {
    case ShapeKind::kRectangle:
      return u >= -hw && u < hw && t >= 0.0 && t < height;
    case ShapeKind::kEllipse: {
      const double hh = 0.5 * height;
      const double a = u / hw, b = (t - hh) / hh;
      return a * a + b * b <= 1.0;
    }
    case ShapeKind::kTriangle:
      return t >= 0.0 && t < height && std::abs(u) <= hw * (1.0 - t / height);
    case ShapeKind::kCapsule: {
      const double rad = std::min(hw, 0.5 * height);
      if (std::abs(u) > hw || t < 0.0 || t > height) return false;
      if (t >= rad && t <= height - rad) return true;
      const double cy = t < rad ? rad : height - rad;
      return u * u + (t - cy) * (t - cy) <= rad * rad;
    }
  }
  return false;
}

void GeneratorConfig::validate() const {
  if (resolution < 16) throw Error(ErrorKind::kConfig, "resolution must be >= 16");
  if (min_objects < 1 || max_objects > 5 || min_objects > max_objects)
    throw Error(ErrorKind::kConfig, "object count bounds must satisfy 1 <= min <= max <= 5");
  if (attenuation_min < 0.3 || attenuation_max > 0.7 || attenuation_min > attenuation_max)
    throw Error(ErrorKind::kConfig, "attenuation range must lie in [0.3, 0.7]");
  if (light_arc_min > light_arc_max || elongation_min < 0.0 || elongation_min > elongation_max)
    throw Error(ErrorKind::kConfig, "invalid light ranges");
  if (blur_max < 0.0) throw Error(ErrorKind::kConfig, "blur_max must be >= 0");
  if (domain == Domain::kCustom) throw Error(ErrorKind::kConfig, "sampling needs domain A or B");
}

SceneSpec sample_scene(std::uint64_t seed, const GeneratorConfig& config) {
  config.validate();
  Sampler rng(seed);
  SceneSpec scene;
  scene.seed = seed;
  scene.domain = config.domain;
  scene.resolution = config.resolution;
  const double res = config.resolution;

  const auto& palette = config.domain == Domain::kA ? kWarm : kCool;
  scene.ground.top = rng.color(palette);
  scene.ground.bottom = rng.color(palette);
  scene.ground.texture_amplitude = rng.uniform(0.0, 0.04);
  for (int i = 0; i < 4; ++i) {
    scene.ground.texture_phase[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    scene.ground.texture_freq[i] = rng.uniform(0.02, 0.12);
  }

  scene.light.angle = rng.uniform(config.light_arc_min, config.light_arc_max);
  scene.light.elongation = rng.uniform(config.elongation_min, config.elongation_max);
  scene.light.attenuation = rng.uniform(config.attenuation_min, config.attenuation_max);
  scene.light.blur = rng.coin(0.5) ? rng.uniform(0.0, config.blur_max) : 0.0;

  const int count = rng.integer(config.min_objects, config.max_objects);
  const auto range = ground_range(scene.ground);
  for (int i = 0; i < count; ++i) {
    ObjectSpec obj;
    if (config.domain == Domain::kA) {
      obj.kind = rng.coin(0.5) ? ShapeKind::kEllipse : ShapeKind::kCapsule;
    } else {
      obj.kind = rng.coin(0.5) ? ShapeKind::kRectangle : ShapeKind::kTriangle;
    }
    obj.width = std::round(rng.uniform(0.07, 0.16) * res);
    obj.height = std::round(rng.uniform(0.10, 0.22) * res);
    obj.anchor_x = std::round(rng.uniform(0.18, 0.82) * res);
    obj.anchor_y = std::round(rng.uniform(0.55, 0.90) * res);
    obj.orientation = rng.uniform(-0.2, 0.2);
    do {
      obj.color = rng.color({0.03, 0.97, 0.03, 0.97, 0.03, 0.97});
    } while (!contrasts(obj.color, range));
    scene.objects.push_back(obj);
  }
  return scene;
}

bool belongs_to(const SceneSpec& scene, Domain d) {
  auto warm = [](const Color& c) { return c[0] > c[2]; };
  const bool warm_ground = warm(scene.ground.top) && warm(scene.ground.bottom);
  const bool cool_ground = !warm(scene.ground.top) && !warm(scene.ground.bottom);
  auto all_kinds = [&](ShapeKind a, ShapeKind b) {
    return std::all_of(scene.objects.begin(), scene.objects.end(),
                       [&](const ObjectSpec& o) { return o.kind == a || o.kind == b; });
  };
  switch (d) {
    case Domain::kA: return warm_ground && all_kinds(ShapeKind::kEllipse, ShapeKind::kCapsule);
    case Domain::kB: return cool_ground && all_kinds(ShapeKind::kRectangle, ShapeKind::kTriangle);
    case Domain::kCustom: return scene.domain == Domain::kCustom;
  }
  return false;
}

Mask silhouette(const SceneSpec& scene, std::size_t k) {
  const auto& obj = scene.objects.at(k);
  Mask m(scene.resolution, scene.resolution);
  for (int r = 0; r < m.height; ++r)
    for (int c = 0; c < m.width; ++c) m.at(r, c) = obj.contains(c, r) ? 1.0f : 0.0f;
  return m;
}

Mask shadow_alpha(const SceneSpec& scene, std::size_t k) {
  const auto& obj = scene.objects.at(k);
  const auto& light = scene.light;
  // Forward map of a point at height t = ay - y: p + e * t * (cos a, sin a).
  // Pixel q is shadowed iff its preimage lies inside the silhouette.
  const double ex = light.elongation * std::cos(light.angle);
  const double ey = light.elongation * std::sin(light.angle);
  const double det = 1.0 - ey;
  Mask hard(scene.resolution, scene.resolution);
  if (std::abs(det) < 1e-9) return hard;
  const double ay = obj.anchor_y;
  for (int r = 0; r < hard.height; ++r) {
    const double y = (r - ey * ay) / det;
    const double t = ay - y;
    for (int c = 0; c < hard.width; ++c) {
      const double x = c - ex * t;
      hard.at(r, c) = obj.contains(x, y) ? 1.0f : 0.0f;
    }
  }
  return blur(hard, light.blur);
}

ImageSet render_image_set(const SceneSpec& scene) {
  const std::size_t n = scene.objects.size();
  ImageSet set;
  set.empty = render_ground(scene);

  std::vector<Mask> sil(n), alpha(n);
  for (std::size_t k = 0; k < n; ++k) {
    sil[k] = silhouette(scene, k);
    alpha[k] = shadow_alpha(scene, k);
  }

  for (std::size_t k = 0; k < n; ++k) {
    Image only = set.empty;
    paint(only, sil[k], scene.objects[k].color);
    set.object_only.push_back(std::move(only));

    Image shadowed = set.empty;
    darken(shadowed, alpha[k], scene.light.attenuation);
    paint(shadowed, sil[k], scene.objects[k].color);
    set.object_shadow.push_back(std::move(shadowed));
  }

  Mask combined(scene.resolution, scene.resolution);
  for (std::size_t k = 0; k < n; ++k) combined = mask_union(combined, alpha[k]);
  set.full = set.empty;
  darken(set.full, combined, scene.light.attenuation);
  for (std::size_t k : painter_order(scene)) paint(set.full, sil[k], scene.objects[k].color);
  return set;
}

Mask difference_mask(const Image& a, const Image& b, float delta) {
  if (!a.same_shape(b)) throw Error(ErrorKind::kShapeMismatch, "difference_mask");
  Mask m(a.height, a.width);
  for (int r = 0; r < a.height; ++r)
    for (int c = 0; c < a.width; ++c) {
      float diff = 0.0f;
      for (int ch = 0; ch < 3; ++ch) diff = std::max(diff, std::abs(a.at(ch, r, c) - b.at(ch, r, c)));
      m.at(r, c) = diff > delta ? 1.0f : 0.0f;
    }
  return m;
}

DerivedMasks derive_masks(const ImageSet& images) {
  DerivedMasks out;
  for (std::size_t k = 0; k < images.object_only.size(); ++k) {
    out.object.push_back(difference_mask(images.object_only[k], images.empty));
    out.shadow.push_back(difference_mask(images.object_shadow[k], images.object_only[k]));
  }
  return out;
}

std::string make_tuple_id(std::uint64_t seed, int k) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%010llu_%d", static_cast<unsigned long long>(seed), k);
  return buf;
}

ShadowTuple compose_tuple(const SceneSpec& scene, const ImageSet& images, const DerivedMasks& masks,
                          int k) {
  const int n = static_cast<int>(images.object_only.size());
  if (k < 1 || k > n) throw Error(ErrorKind::kConfig, "foreground index out of range");
  const std::size_t fk = static_cast<std::size_t>(k - 1);
  const int res = images.full.height;

  ShadowTuple t;
  t.fg_object = masks.object[fk];
  t.fg_shadow = masks.shadow[fk];
  t.bg_object = Mask(res, res);
  t.bg_shadow = Mask(res, res);
  for (int j = 0; j < n; ++j) {
    if (j == static_cast<int>(fk)) continue;
    t.bg_object = mask_union(t.bg_object, masks.object[j]);
    t.bg_shadow = mask_union(t.bg_shadow, masks.shadow[j]);
  }
  if (count_above(t.fg_shadow) == 0) throw Error(ErrorKind::kEmptyShadow, "object casts no shadow");

  const Image& only = images.object_only[fk];
  t.target = images.full;
  t.composite = Image(res, res);
  const std::size_t plane = t.composite.plane();
  for (std::size_t p = 0; p < plane; ++p) {
    const float w = std::clamp(t.bg_shadow.data[p] + t.bg_object.data[p], 0.0f, 1.0f);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const std::size_t i = ch * plane + p;
      t.composite.data[i] = only.data[i] * (1.0f - w) + images.full.data[i] * w;
    }
  }

  t.meta.id = make_tuple_id(scene.seed, k);
  t.meta.seed = scene.seed;
  t.meta.k = k;
  t.meta.domain = scene.domain;
  t.meta.object_box = geometry::bbox_from_mask(t.fg_object);
  t.meta.shadow_box = geometry::bbox_from_mask(t.fg_shadow);
  t.meta.light = scene.light;
  return t;
}

bool quality_filter(const ShadowTuple& tuple, const GeneratorConfig& config) {
  const std::size_t area = count_above(tuple.fg_shadow);
  if (area == 0 || area < config.min_shadow_area) return false;
  if (count_above(tuple.fg_object) == 0) return false;
  const BBox b = geometry::bbox_from_mask(tuple.fg_shadow);
  const double m = config.frame_margin;
  const double w = tuple.fg_shadow.width, h = tuple.fg_shadow.height;
  if (b.left() + 0.5 < m || b.top() + 0.5 < m || b.right() - 0.5 > w - 1 - m ||
      b.bottom() - 0.5 > h - 1 - m) {
    return false;
  }
  std::size_t overlap = 0;
  for (std::size_t i = 0; i < tuple.fg_shadow.size(); ++i)
    if (tuple.fg_shadow.data[i] > 0.5f && tuple.fg_object.data[i] > 0.5f) ++overlap;
  return static_cast<double>(overlap) / static_cast<double>(area) < config.max_shadow_object_overlap;
}

std::vector<ShadowTuple> generate_tuples(const GeneratorConfig& config, std::size_t count,
                                         std::uint64_t first_seed) {
  std::vector<ShadowTuple> out;
  const std::uint64_t max_scenes = 50 * count + 100;
  for (std::uint64_t s = first_seed; out.size() < count; ++s) {
    if (s - first_seed > max_scenes)
      throw Error(ErrorKind::kDatasetEmpty, "quality filter rejected too many scenes");
    const SceneSpec scene = sample_scene(s, config);
    const ImageSet images = render_image_set(scene);
    const DerivedMasks masks = derive_masks(images);
    for (int k = 1; k <= static_cast<int>(scene.objects.size()) && out.size() < count; ++k) {
      if (count_above(masks.shadow[k - 1]) == 0 || count_above(masks.object[k - 1]) == 0) continue;
      ShadowTuple t = compose_tuple(scene, images, masks, k);
      if (quality_filter(t, config)) out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace shadowcomp::synth
