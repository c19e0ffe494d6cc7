#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shadowcomp/geometry.hpp"
#include "shadowcomp/raster.hpp"

namespace shadowcomp::synth {

inline constexpr const char* kGeneratorVersion = "shadowcomp-synth/1";

/// Mask-derivation threshold: one 8-bit quantization step.
inline constexpr float kDelta = 1.0f / 255.0f;

/// Style domains. A: ellipse/capsule objects on warm grounds. B:
/// rectangle/triangle objects on cool grounds. kCustom marks hand-built scenes.
enum class Domain { kA, kB, kCustom };

const char* to_string(Domain d) noexcept;
Domain domain_from_string(const std::string& s);

enum class ShapeKind { kRectangle, kEllipse, kTriangle, kCapsule };

const char* to_string(ShapeKind k) noexcept;
ShapeKind shape_from_string(const std::string& s);

using Color = std::array<float, 3>;

struct ObjectSpec {
  ShapeKind kind = ShapeKind::kRectangle;
  // Ground-contact point: bottom-center of the silhouette, pixel-center coords.
  double anchor_x = 0.0;
  double anchor_y = 0.0;
  double width = 1.0;
  double height = 1.0;
  Color color{};
  // Rotation of the silhouette about the anchor, radians.
  double orientation = 0.0;

  /// Silhouette membership for a pixel center.
  bool contains(double x, double y) const noexcept;
};

struct LightSpec {
  // Direction a point's shadow moves in image space (x right, y down).
  double angle = 0.0;
  // Shadow displacement per pixel of height above the contact line.
  double elongation = 1.0;
  // Multiplicative ground darkening inside the shadow, in [0.3, 0.7].
  double attenuation = 0.5;
  // Gaussian sigma of the shadow boundary, pixels; 0 means hard edges.
  double blur = 0.0;
};

struct GroundSpec {
  Color top{};
  Color bottom{};
  double texture_amplitude = 0.0;
  std::array<double, 4> texture_phase{};
  std::array<double, 4> texture_freq{};
};

struct SceneSpec {
  std::uint64_t seed = 0;
  Domain domain = Domain::kCustom;
  int resolution = 256;
  GroundSpec ground;
  std::vector<ObjectSpec> objects;
  LightSpec light;
};

struct GeneratorConfig {
  int resolution = 256;
  int min_objects = 1;
  int max_objects = 5;
  Domain domain = Domain::kA;
  double light_arc_min = -2.6;
  double light_arc_max = -0.55;
  double elongation_min = 0.4;
  double elongation_max = 1.0;
  double attenuation_min = 0.3;
  double attenuation_max = 0.7;
  double blur_max = 1.5;
  // Quality filter.
  std::size_t min_shadow_area = 30;
  int frame_margin = 2;
  double max_shadow_object_overlap = 0.5;

  void validate() const;
};

/// Deterministic scene sampler; the object count is uniform in
/// [min_objects, max_objects].
SceneSpec sample_scene(std::uint64_t seed, const GeneratorConfig& config);

/// True if the scene's objects and ground palette belong to `d`.
bool belongs_to(const SceneSpec& scene, Domain d);

struct ImageSet {
  Image empty;
  std::vector<Image> object_only;    // ground + object k
  std::vector<Image> object_shadow;  // ground + object k + its shadow
  Image full;                        // everything
};

/// Shadow coverage (alpha in [0,1]) cast by one object on the ground plane,
/// before the object itself is drawn.
Mask shadow_alpha(const SceneSpec& scene, std::size_t k);

/// Binary silhouette of object k.
Mask silhouette(const SceneSpec& scene, std::size_t k);

ImageSet render_image_set(const SceneSpec& scene);

struct DerivedMasks {
  std::vector<Mask> object;
  std::vector<Mask> shadow;
};

/// Threshold max-channel differences at kDelta.
DerivedMasks derive_masks(const ImageSet& images);

/// Max-channel |a - b| > delta.
Mask difference_mask(const Image& a, const Image& b, float delta = kDelta);

struct TupleMeta {
  std::string id;
  std::uint64_t seed = 0;
  int k = 1;  // 1-based foreground index
  Domain domain = Domain::kCustom;
  geometry::BBox object_box;
  geometry::BBox shadow_box;
  LightSpec light;
  std::string generator_version = kGeneratorVersion;
};

/// {I_c, M_fo, M_fs, M_bo, M_bs, I_g} plus metadata.
struct ShadowTuple {
  Image composite;
  Mask fg_object;
  Mask fg_shadow;
  Mask bg_object;
  Mask bg_shadow;
  Image target;
  TupleMeta meta;
};

/// Builds the tuple for 1-based foreground index k. Throws kEmptyShadow
/// when object k casts no visible shadow.
ShadowTuple compose_tuple(const SceneSpec& scene, const ImageSet& images,
                          const DerivedMasks& masks, int k);

bool quality_filter(const ShadowTuple& tuple, const GeneratorConfig& config);

/// Samples scenes from `first_seed` upward until `count` tuples pass the
/// quality filter. Tuple ids are "<seed>_<k>" with zero padding.
std::vector<ShadowTuple> generate_tuples(const GeneratorConfig& config, std::size_t count,
                                         std::uint64_t first_seed);

std::string make_tuple_id(std::uint64_t seed, int k);

}  // namespace shadowcomp::synth
