#include "stagehand/demo.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "stagehand/io.hpp"
#include "stagehand/json_codec.hpp"

namespace stagehand::demo {

namespace {

constexpr double kPi = std::numbers::pi;

void add_box(std::vector<GaussianPrimitive>& out, const Vec3& lo, const Vec3& hi, double spacing,
             const Vec3& rgb) {
  const Vec3 size = hi - lo;
  const int nx = std::max(1, static_cast<int>(std::round(size.x() / spacing)));
  const int ny = std::max(1, static_cast<int>(std::round(size.y() / spacing)));
  const int nz = std::max(1, static_cast<int>(std::round(size.z() / spacing)));
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j)
      for (int k = 0; k <= nz; ++k) {
        const Vec3 c = lo + Vec3(size.x() * i / nx, size.y() * j / ny, size.z() * k / nz);
        const double shade = 0.85 + 0.15 * ((i + j + k) % 2);
        out.push_back(make_primitive(c, Vec3::Constant(0.7 * spacing), Quat::Identity(), 0.95, shade * rgb));
      }
}

}  // namespace

CameraIntrinsics demo_intrinsics() { return {260.0, 260.0, 160.0, 120.0, 320, 240}; }

GaussianField demo_scene() {
  std::vector<GaussianPrimitive> prims;

  // Floor: a dense top layer and two coarser layers beneath it, so free space is above.
  for (int i = 0; i <= 100; ++i)
    for (int k = 0; k <= 75; ++k) {
      const Vec3 c(-5.0 + 0.1 * i, 1.0, 1.5 + 0.1 * k);
      const bool check = ((i / 5) + (k / 5)) % 2 == 0;
      const Vec3 rgb = check ? Vec3(0.62, 0.5, 0.36) : Vec3(0.5, 0.4, 0.28);
      prims.push_back(make_primitive(c, Vec3(0.07, 0.012, 0.07), Quat::Identity(), 0.95, rgb));
    }
  for (double y : {1.08, 1.16})
    for (int i = 0; i <= 66; ++i)
      for (int k = 0; k <= 50; ++k)
        prims.push_back(make_primitive(Vec3(-5.0 + 0.15 * i, y, 1.5 + 0.15 * k), Vec3(0.1, 0.04, 0.1),
                                       Quat::Identity(), 0.95, Vec3(0.35, 0.28, 0.2)));

  // Back wall.
  for (int i = 0; i <= 120; ++i)
    for (int j = 0; j <= 55; ++j) {
      const double y = 1.0 - 0.1 * j;
      const double t = j / 55.0;
      prims.push_back(make_primitive(Vec3(-6.0 + 0.1 * i, y, 9.0), Vec3(0.07, 0.07, 0.012),
                                     Quat::Identity(), 0.95,
                                     Vec3(0.55 - 0.2 * t, 0.6 - 0.1 * t, 0.7 + 0.1 * t)));
    }

  add_box(prims, Vec3(-1.8, 0.2, 3.6), Vec3(-1.0, 0.95, 4.4), 0.1, Vec3(0.8, 0.2, 0.15));
  add_box(prims, Vec3(1.0, 0.0, 5.0), Vec3(2.0, 0.95, 6.0), 0.1, Vec3(0.2, 0.65, 0.25));
  return GaussianField(std::move(prims), 0);
}

std::vector<GaussianField> demo_human(int frames) {
  if (frames < 1) throw ValidationError("demo: human needs at least one frame");
  constexpr double kHeight = 1.8;
  constexpr double kRadius = 0.22;
  constexpr double kSpacing = 0.03;

  // Surface samples in the human's own frame: feet at y = 0, head at y = -1.8.
  struct Sample {
    Vec3 p;
    double height;
  };
  std::vector<Sample> surface;
  const int rings = static_cast<int>(std::round((kHeight - 2 * kRadius) / kSpacing));
  for (int r = 0; r <= rings; ++r) {
    const double h = kRadius + (kHeight - 2 * kRadius) * r / rings;
    const int around = static_cast<int>(std::round(2 * kPi * kRadius / kSpacing));
    for (int a = 0; a < around; ++a) {
      const double phi = 2 * kPi * (a + 0.5 * (r % 2)) / around;
      surface.push_back({Vec3(kRadius * std::cos(phi), -h, kRadius * std::sin(phi)), h});
    }
  }
  const int cap_rings = static_cast<int>(std::round(0.5 * kPi * kRadius / kSpacing));
  for (int cap = 0; cap < 2; ++cap) {
    for (int r = 1; r <= cap_rings; ++r) {
      const double theta = 0.5 * kPi * r / cap_rings;  // 0 at the equator, pi/2 at the pole
      const double ring_r = kRadius * std::cos(theta);
      const double dh = kRadius * std::sin(theta);
      const double h = cap == 0 ? kRadius - dh : kHeight - kRadius + dh;
      const int around = std::max(1, static_cast<int>(std::round(2 * kPi * ring_r / kSpacing)));
      for (int a = 0; a < around; ++a) {
        const double phi = 2 * kPi * a / around;
        surface.push_back({Vec3(ring_r * std::cos(phi), -h, ring_r * std::sin(phi)), h});
      }
    }
  }

  std::vector<GaussianField> out;
  out.reserve(frames);
  for (int t = 0; t < frames; ++t) {
    const double phase = 2 * kPi * t / frames;
    const Vec3 root(0.15 * std::sin(phase), 0.0, 0.05 * std::sin(2 * phase));
    const double sway = 0.06 * std::sin(phase + 0.5);
    std::vector<GaussianPrimitive> prims;
    prims.reserve(surface.size());
    for (const auto& s : surface) {
      const double f = s.height / kHeight;
      Vec3 rgb = f > 0.82 ? Vec3(0.92, 0.72, 0.58) : f > 0.45 ? Vec3(0.15, 0.3, 0.85) : Vec3(0.18, 0.18, 0.24);
      const Vec3 c = s.p + root + Vec3(sway * f, 0.0, 0.0);
      prims.push_back(make_primitive(c, Vec3::Constant(0.02), Quat::Identity(), 0.95, rgb));
    }
    out.emplace_back(std::move(prims), 0);
  }
  return out;
}

BBox2D demo_bbox() { return {151.6, 82.8, 40.0, 95.0}; }

TrajectorySpec demo_orbit(int frames) {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::pan_orbit;
  spec.frames = frames;
  spec.magnitude = 30.0;
  spec.look_at = Vec3(0.0, 0.0, 4.5);
  spec.intrinsics = demo_intrinsics();
  return spec;
}

GaussianField half_plane_scene() {
  std::vector<GaussianPrimitive> prims;
  for (int i = 0; i <= 68; ++i)
    for (int j = 0; j <= 120; ++j) {
      const double x = -6.0 + 0.1 * i;
      const double y = -6.0 + 0.1 * j;
      const Vec3 rgb(0.45 + 0.3 * std::sin(0.9 * x) * std::cos(0.7 * y), 0.5 + 0.2 * std::cos(1.3 * y),
                     0.35 + 0.15 * ((i / 4 + j / 4) % 2));
      prims.push_back(make_primitive(Vec3(x, y, 4.0), Vec3(0.07, 0.07, 0.01), Quat::Identity(), 0.97, rgb));
    }
  return GaussianField(std::move(prims), 0);
}

CameraIntrinsics half_plane_intrinsics() { return {150.0, 150.0, 80.0, 60.0, 160, 120}; }

TrajectorySpec half_plane_orbit(int frames) {
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::pan_orbit;
  spec.frames = frames;
  spec.magnitude = 20.0;
  spec.look_at = Vec3(0.0, 0.0, 4.0);
  spec.intrinsics = half_plane_intrinsics();
  return spec;
}

void write_demo(const std::filesystem::path& dir, int frames) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "human");
  write_ply(demo_scene(), dir / "scene.ply");
  const auto human = demo_human(frames);
  for (std::size_t t = 0; t < human.size(); ++t) {
    std::ostringstream name;
    name << "frame_" << std::setw(4) << std::setfill('0') << t << ".ply";
    write_ply(human[t], dir / "human" / name.str());
  }
  write_trajectory(generate(demo_orbit(frames)), dir / "trajectory.json");
  fs::create_directories(dir / "half_plane");
  write_ply(half_plane_scene(), dir / "half_plane" / "scene.ply");
  write_trajectory(generate(half_plane_orbit()), dir / "half_plane" / "trajectory.json");

  const BBox2D box = demo_bbox();
  const nlohmann::json config = {
      {"scene", "scene.ply"},
      {"human_frames", "human/frame_*.ply"},
      {"bbox", {{"x", box.x}, {"y", box.y}, {"w", box.w}, {"h", box.h}}},
      {"trajectory", "trajectory.json"},
      {"placement", {{"baseline_samples", 16}, {"smoothing_weight", 0.5}, {"smoothing_iterations", 1}}},
      {"occupancy", {{"cell_size", 0.06}, {"padding", 0.1}, {"threshold", 0.1}}},
      {"render", {{"background", {1.0, 1.0, 1.0}}}},
      {"postfill", {{"contrast_background", "auto"}, {"alpha_hole_threshold", 0.05}, {"dilation_radius", 3},
                    {"inpaint", "harmonic"}, {"lift_to_3d", false}}},
      {"output_dir", "out"},
      {"seed", 0}};
  std::ofstream out(dir / "config.json");
  if (!out) throw Error("demo: cannot write " + (dir / "config.json").string());
  out << config.dump(2) << "\n";
}

}  // namespace stagehand::demo
