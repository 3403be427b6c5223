#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "stagehand/demo.hpp"
#include "stagehand/holefill.hpp"
#include "test_support.hpp"

using namespace stagehand;
using stagehand::testing::Gen;

namespace {

ImageBuffer solid(int w, int h, const Eigen::Vector3f& c, float alpha = 1.0f) {
  ImageBuffer img(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      img.set_rgb(u, v, c);
      img.alpha[img.index(u, v)] = alpha;
      img.depth[img.index(u, v)] = 3.0f;
    }
  return img;
}

HoleMask brute_dilate(const HoleMask& m, int r) {
  HoleMask out(m.width, m.height);
  for (int v = 0; v < m.height; ++v)
    for (int u = 0; u < m.width; ++u)
      for (int dy = -r; dy <= r && !out.at(u, v); ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int x = u + dx, y = v + dy;
          if (x < 0 || y < 0 || x >= m.width || y >= m.height) continue;
          if (dx * dx + dy * dy <= r * r && m.at(x, y)) {
            out.set(u, v);
            break;
          }
        }
  return out;
}

HoleMask random_mask(Gen& gen, int w, int h, double p) {
  HoleMask m(w, h);
  for (auto& x : m.mask) x = gen.coin(p) ? 1 : 0;
  return m;
}

// Cube corner whose nearest covered histogram-bin center is farthest; lowest index on ties.
Vec3 brute_contrast(const ImageBuffer& img) {
  double best = -1.0;
  Vec3 arg;
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner((c >> 2) & 1, (c >> 1) & 1, c & 1);
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      if (img.alpha[i] < 0.5f) continue;
      Vec3 center;
      for (int k = 0; k < 3; ++k)
        center[k] = (std::clamp(static_cast<int>(img.color[3 * i + k] * 64), 0, 63) + 0.5) / 64.0;
      nearest = std::min(nearest, (center - corner).squaredNorm());
    }
    if (nearest > best) {
      best = nearest;
      arg = corner;
    }
  }
  return arg;
}

}  // namespace

TEST_CASE("contrast background fixtures") {
  CHECK(pick_contrast_background(solid(8, 8, {0, 0, 0})) == Vec3(1, 1, 1));
  CHECK(pick_contrast_background(solid(8, 8, {1, 1, 1})) == Vec3(0, 0, 0));
  CHECK(pick_contrast_background(solid(8, 8, {0.5f, 0.5f, 0.5f})) == Vec3(0, 0, 0));
  CHECK(pick_contrast_background(solid(8, 8, {0.9f, 0.1f, 0.9f})) == Vec3(0, 1, 0));
}

TEST_CASE("contrast background matches an exhaustive corner search") {
  Gen gen(61);
  for (int trial = 0; trial < 100; ++trial) {
    ImageBuffer img(16, 12);
    const Vec3 base = gen.vec3(0, 1);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      for (int k = 0; k < 3; ++k)
        img.color[3 * i + k] = static_cast<float>(std::clamp(base[k] + gen.uniform(-0.3, 0.3), 0.0, 1.0));
      img.alpha[i] = static_cast<float>(gen.uniform(0, 1));
    }
    CHECK(pick_contrast_background(img) == brute_contrast(img));
  }
}

TEST_CASE("hole detection fixtures") {
  const Vec3 bg(1, 0, 1);
  ImageBuffer img = solid(32, 32, {0.2f, 0.6f, 0.3f});
  CHECK(detect_holes(img, bg, 0.05).count() == 0);

  for (int v = 5; v < 15; ++v)
    for (int u = 7; u < 17; ++u) img.alpha[img.index(u, v)] = 0.0f;
  const HoleMask m = detect_holes(img, bg, 0.05);
  CHECK(m.count() == 100);
  for (int v = 0; v < 32; ++v)
    for (int u = 0; u < 32; ++u) CHECK(m.at(u, v) == (u >= 7 && u < 17 && v >= 5 && v < 15));

  ImageBuffer bgcolored = solid(4, 4, {1.0f, 0.005f, 0.995f});
  CHECK(detect_holes(bgcolored, bg, 0.05).count() == 16);

  PostFillConfig cfg;
  cfg.contrast_background = bg;
  CHECK(detect_holes(img, cfg) == m);
}

TEST_CASE("dilation fixtures and axioms") {
  HoleMask one(9, 9);
  one.set(4, 4);
  CHECK(dilate(one, 0) == one);
  const HoleMask d2 = dilate(one, 2);
  CHECK(d2.count() == 13);
  for (int v = 0; v < 9; ++v)
    for (int u = 0; u < 9; ++u) CHECK(d2.at(u, v) == ((u - 4) * (u - 4) + (v - 4) * (v - 4) <= 4));
  CHECK_THROWS_AS(dilate(one, -1), ValidationError);

  Gen gen(3);
  for (int trial = 0; trial < 40; ++trial) {
    const int w = gen.integer(1, 40), h = gen.integer(1, 40), r = gen.integer(0, 6);
    const HoleMask a = random_mask(gen, w, h, 0.05);
    HoleMask b = a;
    for (auto& x : b.mask)
      if (gen.coin(0.05)) x = 1;
    const HoleMask da = dilate(a, r), db = dilate(b, r);
    for (std::size_t i = 0; i < a.mask.size(); ++i) {
      if (a.mask[i]) CHECK(da.mask[i]);
      if (da.mask[i]) CHECK(db.mask[i]);
    }
  }
}

TEST_CASE("dilation matches the brute-force disk oracle") {
  Gen gen(4);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = gen.integer(1, 64), h = gen.integer(1, 64), r = gen.integer(0, 8);
    const HoleMask m = random_mask(gen, w, h, gen.uniform(0, 0.1));
    CHECK(dilate(m, r) == brute_dilate(m, r));
  }
}

TEST_CASE("harmonic fill of a constant-boundary hole is constant") {
  Gen gen(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Vector3f c = gen.vec3(0, 1).cast<float>();
    const int w = gen.integer(8, 80), h = gen.integer(8, 80);
    ImageBuffer img = solid(w, h, c);
    HoleMask m(w, h);
    const int x0 = gen.integer(1, w / 2), y0 = gen.integer(1, h / 2);
    for (int v = y0; v < std::min(h - 1, y0 + h / 2); ++v)
      for (int u = x0; u < std::min(w - 1, x0 + w / 2); ++u) {
        m.set(u, v);
        img.set_rgb(u, v, Eigen::Vector3f(gen.uniform(0, 1), 0, 1));
        img.alpha[img.index(u, v)] = 0.0f;
      }
    const ImageBuffer out = inpaint(img, m);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        if (!m.at(u, v)) continue;
        CHECK((out.rgb(u, v) - c).cwiseAbs().maxCoeff() <= 1.0f / 255.0f);
        CHECK(out.alpha[out.index(u, v)] == 1.0f);
        CHECK(std::abs(out.depth[out.index(u, v)] - 3.0f) < 1e-3f);
      }
  }
}

TEST_CASE("inpainting never touches unmasked pixels") {
  Gen gen(6);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = gen.integer(2, 60), h = gen.integer(2, 60);
    ImageBuffer img(w, h);
    for (auto& x : img.color) x = static_cast<float>(gen.uniform(0, 1));
    for (auto& x : img.alpha) x = static_cast<float>(gen.uniform(0, 1));
    for (auto& x : img.depth) x = static_cast<float>(gen.uniform(1, 5));
    HoleMask m = random_mask(gen, w, h, 0.3);
    if (m.count() == m.mask.size()) m.mask[0] = 0;
    const ImageBuffer out = inpaint(img, m);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      if (m.mask[i]) continue;
      CHECK(out.alpha[i] == img.alpha[i]);
      CHECK(out.depth[i] == img.depth[i]);
      for (int c = 0; c < 3; ++c) CHECK(out.color[3 * i + c] == img.color[3 * i + c]);
    }
  }
}

TEST_CASE("fill across a black-white edge is monotone left to right") {
  const int w = 40, h = 20;
  ImageBuffer img(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const float c = u < w / 2 ? 0.0f : 1.0f;
      img.set_rgb(u, v, {c, c, c});
      img.alpha[img.index(u, v)] = 1.0f;
    }
  HoleMask m(w, h);
  for (int v = 5; v < 15; ++v)
    for (int u = 10; u < 30; ++u) m.set(u, v);
  const ImageBuffer out = inpaint(img, m);
  for (int v = 5; v < 15; ++v)
    for (int u = 10; u < 30; ++u) CHECK(out.rgb(u, v).x() >= out.rgb(u - 1, v).x());
}

TEST_CASE("inpainting edge cases") {
  const ImageBuffer img = solid(6, 5, {0.3f, 0.2f, 0.1f});
  CHECK(inpaint(img, HoleMask(6, 5)) == img);
  HoleMask full(6, 5);
  for (auto& x : full.mask) x = 1;
  CHECK_THROWS_AS(inpaint(img, full), ValidationError);
  CHECK_THROWS_AS(inpaint(img, HoleMask(5, 5)), ValidationError);
}

TEST_CASE("external inpainter round-trips frame and mask files") {
  const int w = 12, h = 10;
  ImageBuffer img = solid(w, h, {0.2f, 0.4f, 0.6f});
  HoleMask m(w, h);
  m.set(3, 4);
  m.set(4, 4);
  img.set_rgb(3, 4, {1, 0, 1});
  img.set_rgb(4, 4, {1, 0, 1});
  // Copying the frame back reproduces the masked colors quantized to 8 bits.
  const ExternalInpainter copy("cp {frame} {out}");
  const ImageBuffer out = copy.fill(img, m);
  CHECK(out.rgb(3, 4).isApprox(Eigen::Vector3f(1, 0, 1)));
  CHECK(out.rgb(0, 0) == img.rgb(0, 0));
  CHECK(out.alpha[out.index(3, 4)] == 1.0f);

  const ExternalInpainter failing("false");
  CHECK_THROWS_AS(failing.fill(img, m), Error);
  PostFillConfig cfg;
  cfg.inpaint_method = InpaintMethod::external;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("lifting masked pixels") {
  const CameraIntrinsics K{100, 100, 8, 6, 16, 12};
  const CameraPose pose = CameraPose::from_rotation_translation(Mat3::Identity(), Vec3(1, 2, 3));
  ImageBuffer img = solid(16, 12, {0.5f, 0.25f, 0.75f});
  CHECK(lift_inpainted(img, HoleMask(16, 12), K, pose, 1).empty());

  HoleMask one(16, 12);
  one.set(10, 4);
  img.depth[img.index(10, 4)] = 2.5f;
  const GaussianField f = lift_inpainted(img, one, K, pose, 1);
  REQUIRE(f.size() == 1);
  CHECK((f[0].center - pose.to_world(2.5 * Vec3((10 - 8) / 100.0, (4 - 6) / 100.0, 1.0))).norm() < 1e-12);
  CHECK(f[0].scale.x() == doctest::Approx(2.5 / 100.0 * 0.5));
  CHECK(f[0].opacity == doctest::Approx(0.9));
  CHECK((evaluate_color(f[0].appearance, 0, Vec3::UnitZ()) - Vec3(0.5, 0.25, 0.75)).norm() < 1e-6);

  const GaussianField strided = lift_inpainted(img, one, K, pose, 2);
  CHECK(strided.size() == 1);
  HoleMask odd(16, 12);
  odd.set(3, 3);
  CHECK(lift_inpainted(img, odd, K, pose, 2).empty());
}

TEST_CASE("lifted primitives close the holes they were made from") {
  const GaussianField scene = demo::half_plane_scene();
  const CameraIntrinsics K = demo::half_plane_intrinsics();
  const Trajectory traj = generate(demo::half_plane_orbit(6));
  const Camera& cam = traj[3];
  const Vec3 contrast(1, 0, 1);
  RenderConfig rc;
  rc.background_color = contrast;
  const ImageBuffer probe = render(scene, cam, rc);
  const HoleMask mask = dilate(detect_holes(probe, contrast, 0.05), 3);
  REQUIRE(mask.count() > 0);
  const ImageBuffer filled = inpaint(probe, mask);
  const GaussianField lifted = lift_inpainted(filled, mask, K, cam.pose, 2);
  std::vector<GaussianPrimitive> all(scene.begin(), scene.end());
  all.insert(all.end(), lifted.begin(), lifted.end());
  const HoleMask after = detect_holes(render(GaussianField(all, 0), cam, rc), contrast, 0.05);
  std::size_t still = 0;
  for (std::size_t i = 0; i < mask.mask.size(); ++i) still += mask.mask[i] && after.mask[i];
  CHECK(static_cast<double>(still) <= 0.01 * mask.count());
}

TEST_CASE("post-fill on a complete view returns the plain render") {
  const CameraIntrinsics K = stagehand::testing::simple_intrinsics(40, 30, 30);
  std::vector<GaussianPrimitive> wall;
  for (int i = -30; i <= 30; ++i)
    for (int j = -30; j <= 30; ++j)
      wall.push_back(make_primitive(Vec3(0.1 * i, 0.1 * j, 2.0), Vec3(0.08, 0.08, 0.01), Quat::Identity(), 1.0,
                                    Vec3(0.3 + 0.005 * i, 0.5, 0.4)));
  const GaussianField field(wall, 0);
  const std::vector<FusedFrame> frames{{field, 0, std::vector<Provenance>(field.size(), Provenance::scene)}};
  const Trajectory traj({Camera{K, CameraPose()}});
  RenderConfig rc;
  rc.background_color = Vec3(1, 1, 1);
  const PostFillResult res = postfill_sequence(frames, traj, PostFillConfig{}, rc);
  CHECK(res.reports[0].hole_fraction_before == 0.0);
  CHECK(res.frames[0] == render(field, traj[0], rc));
}

TEST_CASE("half-plane post-fill removes the exposed holes") {
  const GaussianField scene = demo::half_plane_scene();
  const Trajectory traj = generate(demo::half_plane_orbit(6));
  std::vector<FusedFrame> frames;
  for (std::size_t t = 0; t < traj.size(); ++t)
    frames.push_back({scene, static_cast<int>(t), std::vector<Provenance>(scene.size(), Provenance::scene)});
  const PostFillResult a = postfill_sequence(frames, traj, PostFillConfig{}, RenderConfig{});
  for (const auto& r : a.reports) {
    CHECK(r.hole_fraction_before > 0.05);
    CHECK(r.hole_fraction_after < 0.005);
    CHECK(r.hole_fraction_after < r.hole_fraction_before);
    CHECK((r.hole_fraction_before >= 0.0 && r.hole_fraction_before <= 1.0));
  }
  const PostFillResult b = postfill_sequence(frames, traj, PostFillConfig{}, RenderConfig{});
  CHECK(a.frames == b.frames);
  CHECK(a.masks == b.masks);

  PostFillConfig lift;
  lift.lift_to_3d = true;
  lift.lift_stride = 3;
  const PostFillResult c = postfill_sequence(frames, traj, lift, RenderConfig{});
  CHECK(c.lifted.size() > 0);
  for (const auto& r : c.reports) CHECK(r.hole_fraction_after < 0.005);
  CHECK_THROWS_AS(postfill_sequence(std::span(frames).first(2), traj, PostFillConfig{}, RenderConfig{}),
                  ValidationError);
}
