#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "shadowcomp/errors.hpp"
#include "shadowcomp/synthdata.hpp"

namespace {

using namespace shadowcomp;
using namespace shadowcomp::synth;

SceneSpec rectangle_scene(double elongation, double angle = 0.0) {
  SceneSpec s;
  s.seed = 77;
  s.resolution = 64;
  s.ground.top = {0.6f, 0.6f, 0.6f};
  s.ground.bottom = {0.6f, 0.6f, 0.6f};
  ObjectSpec o;
  o.kind = ShapeKind::kRectangle;
  o.anchor_x = 20;
  o.anchor_y = 40;
  o.width = 8;
  o.height = 10;
  o.color = {0.9f, 0.1f, 0.1f};
  s.objects.push_back(o);
  s.light = LightSpec{angle, elongation, 0.5, 0.0};
  return s;
}

bool same(const Image& a, const Image& b) { return a.data == b.data; }

TEST(SampleScene, Deterministic) {
  GeneratorConfig cfg;
  for (std::uint64_t seed : {0ull, 1ull, 99ull, 123456789ull}) {
    const auto a = sample_scene(seed, cfg), b = sample_scene(seed, cfg);
    ASSERT_EQ(a.objects.size(), b.objects.size());
    EXPECT_TRUE(same(render_image_set(a).full, render_image_set(b).full));
  }
}

TEST(SampleScene, ObjectCountCoversRange) {
  GeneratorConfig cfg;
  std::set<std::size_t> seen;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto n = sample_scene(seed, cfg).objects.size();
    ASSERT_GE(n, 1u);
    ASSERT_LE(n, 5u);
    seen.insert(n);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(SampleScene, MaxObjectsOne) {
  GeneratorConfig cfg;
  cfg.max_objects = 1;
  for (std::uint64_t seed = 0; seed < 200; ++seed) EXPECT_EQ(sample_scene(seed, cfg).objects.size(), 1u);
}

TEST(SampleScene, LightInsideConfiguredRanges) {
  GeneratorConfig cfg;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto l = sample_scene(seed, cfg).light;
    EXPECT_GE(l.angle, cfg.light_arc_min);
    EXPECT_LE(l.angle, cfg.light_arc_max);
    EXPECT_GE(l.attenuation, 0.3);
    EXPECT_LE(l.attenuation, 0.7);
  }
}

TEST(SampleScene, DomainsAreDisjoint) {
  for (Domain d : {Domain::kA, Domain::kB}) {
    GeneratorConfig cfg;
    cfg.domain = d;
    const Domain other = d == Domain::kA ? Domain::kB : Domain::kA;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
      const auto s = sample_scene(seed, cfg);
      EXPECT_TRUE(belongs_to(s, d));
      EXPECT_FALSE(belongs_to(s, other));
      for (const auto& o : s.objects) {
        const bool round = o.kind == ShapeKind::kEllipse || o.kind == ShapeKind::kCapsule;
        EXPECT_EQ(round, d == Domain::kA);
      }
    }
  }
}

TEST(Render, ZeroElongationHasNoShadow) {
  const auto scene = rectangle_scene(0.0);
  const auto images = render_image_set(scene);
  const auto masks = derive_masks(images);
  EXPECT_EQ(count_above(masks.shadow[0]), 0u);
  try {
    compose_tuple(scene, images, masks, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyShadow);
  }
}

TEST(Render, RectangleShadowMatchesAnalyticProjection) {
  // Horizontal light, elongation 1: a point t rows above the contact line
  // moves t pixels to the right.
  const auto scene = rectangle_scene(1.0, 0.0);
  const auto masks = derive_masks(render_image_set(scene));
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) {
      const double t = 40 - r;
      const bool in_object = c - 20 >= -4 && c - 20 < 4 && t >= 0 && t < 10;
      const double u = c - t - 20;
      const bool in_shadow = u >= -4 && u < 4 && t >= 0 && t < 10 && !in_object;
      ASSERT_EQ(masks.shadow[0].at(r, c) > 0.5f, in_shadow) << r << "," << c;
      ASSERT_EQ(masks.object[0].at(r, c) > 0.5f, in_object) << r << "," << c;
    }
}

TEST(Render, ShadowEditIsLocal) {
  GeneratorConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto scene = sample_scene(seed, cfg);
    const auto images = render_image_set(scene);
    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
      const Mask alpha = shadow_alpha(scene, k);
      const Image& a = images.object_only[k];
      const Image& b = images.object_shadow[k];
      for (std::size_t p = 0; p < alpha.size(); ++p) {
        if (alpha.data[p] != 0.0f) continue;
        for (int ch = 0; ch < 3; ++ch) ASSERT_EQ(a.data[ch * a.plane() + p], b.data[ch * b.plane() + p]);
      }
    }
  }
}

TEST(Render, BlurredBoundaryCoveredByMask) {
  auto scene = rectangle_scene(1.0, -1.2);
  scene.light.blur = 1.5;
  const auto images = render_image_set(scene);
  const auto masks = derive_masks(images);
  const Image& a = images.object_only[0];
  const Image& b = images.object_shadow[0];
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) {
      float diff = 0.0f;
      for (int ch = 0; ch < 3; ++ch) diff = std::max(diff, std::abs(a.at(ch, r, c) - b.at(ch, r, c)));
      EXPECT_EQ(masks.shadow[0].at(r, c) > 0.5f, diff > kDelta);
    }
}

TEST(Compose, SingleObjectScene) {
  const auto scene = rectangle_scene(1.0, -1.0);
  const auto images = render_image_set(scene);
  const auto t = compose_tuple(scene, images, derive_masks(images), 1);
  EXPECT_TRUE(same(t.composite, images.object_only[0]));
  EXPECT_EQ(count_above(t.bg_object), 0u);
  EXPECT_EQ(count_above(t.bg_shadow), 0u);
  EXPECT_EQ(t.meta.object_box, geometry::bbox_from_mask(t.fg_object));
  EXPECT_EQ(t.meta.shadow_box, geometry::bbox_from_mask(t.fg_shadow));
}

TEST(Compose, TupleInvariants) {
  GeneratorConfig cfg;
  cfg.resolution = 128;
  const auto tuples = generate_tuples(cfg, 40, 500);
  ASSERT_EQ(tuples.size(), 40u);
  for (const auto& t : tuples) {
    const std::size_t plane = t.composite.plane();
    for (std::size_t p = 0; p < plane; ++p) {
      const bool background = t.bg_object.data[p] > 0.5f || t.bg_shadow.data[p] > 0.5f;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const float c = t.composite.data[ch * plane + p], g = t.target.data[ch * plane + p];
        if (background) ASSERT_EQ(c, g);
        if (t.fg_shadow.data[p] < 0.5f) ASSERT_LE(std::abs(c - g), kDelta);
      }
    }
    for (const Mask* m : {&t.fg_object, &t.fg_shadow, &t.bg_object, &t.bg_shadow})
      for (float v : m->data) ASSERT_TRUE(v == 0.0f || v == 1.0f);
  }
}

TEST(QualityFilter, Cases) {
  GeneratorConfig cfg;
  const auto scene = rectangle_scene(1.0, -1.0);
  const auto images = render_image_set(scene);
  auto t = compose_tuple(scene, images, derive_masks(images), 1);
  EXPECT_TRUE(quality_filter(t, cfg));

  auto empty = t;
  empty.fg_shadow = Mask(64, 64);
  EXPECT_FALSE(quality_filter(empty, cfg));

  auto small = t;
  small.fg_shadow = Mask(64, 64);
  for (int i = 0; i < 29; ++i) small.fg_shadow.at(20 + i / 6, 10 + i % 6) = 1.0f;
  EXPECT_FALSE(quality_filter(small, cfg));
  small.fg_shadow.at(25, 10) = 1.0f;
  EXPECT_TRUE(quality_filter(small, cfg));
}

TEST(Generate, DeterministicAndIdsSorted) {
  GeneratorConfig cfg;
  cfg.resolution = 64;
  const auto a = generate_tuples(cfg, 12, 10), b = generate_tuples(cfg, 12, 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].meta.id, b[i].meta.id);
    EXPECT_TRUE(same(a[i].composite, b[i].composite));
    if (i > 0) EXPECT_LT(a[i - 1].meta.id, a[i].meta.id);
  }
  EXPECT_EQ(make_tuple_id(42, 3), "0000000042_3");
}

}  // namespace
