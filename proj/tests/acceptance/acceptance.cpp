// Acceptance runner: one PASS/FAIL line per criterion. Usage: acceptance <stagehand-exe> <work-dir>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

#include "fixtures.hpp"
#include "stagehand/holefill.hpp"
#include "stagehand/io.hpp"
#include "stagehand/occupancy.hpp"
#include "stagehand/placement.hpp"
#include "stagehand/render.hpp"
#include "test_support.hpp"

using namespace stagehand;
using namespace stagehand::testing;
namespace fs = std::filesystem;

namespace {

// Collects the first few failure reasons of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (notes_.size() < 5) notes_.push_back(what);
  }
  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    std::string s = std::to_string(failures_) + " failure(s)";
    for (const auto& n : notes_) s += "; " + n;
    return s;
  }

 private:
  int failures_ = 0;
  std::vector<std::string> notes_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

DepthMap filled(int w, int h, const std::function<double(int, int)>& fn) {
  DepthMap d(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) d.set(u, v, fn(u, v));
  return d;
}

GaussianField column(double height, int count, const Vec3& base) {
  std::vector<GaussianPrimitive> prims;
  for (int i = 0; i < count; ++i)
    prims.push_back(make_primitive(base + Vec3(0, -height * i / (count - 1), 0), Vec3::Constant(0.01),
                                   Quat::Identity(), 1.0, Vec3::Ones()));
  return GaussianField(prims, 0);
}

// ---------------------------------------------------------------- placement math

void placement_math(Check& c) {
  const auto t0 = Clock::now();
  const auto s = sample_baseline({10, 0, 20, 30}, 4).samples;
  const double want_u[] = {15, 20, 25, 30};
  c.expect(s.size() == 4, "baseline sample count");
  for (std::size_t i = 0; i < s.size() && i < 4; ++i)
    c.expect(std::abs(s[i].x() - want_u[i]) <= 1e-9 && std::abs(s[i].y() - 30) <= 1e-9,
             "baseline sample " + std::to_string(i));

  const DepthMap ramp = filled(64, 64, [](int u, int) { return u / 100.0; });
  const double z = pool_depth(ramp, sample_baseline({10, 0, 20, 30}, 4));
  c.expect(std::abs(z - 0.225) <= 1e-9, "pooled depth " + fmt(z));

  const CameraIntrinsics K{500, 500, 320, 240, 640, 480};
  const Anchor a = backproject_anchor(K, CameraPose(), {370, 140, 100, 200}, 2.0);
  c.expect((a.camera - Vec3(0.4, 0.4, 2.0)).cwiseAbs().maxCoeff() <= 1e-9, "anchor fixture");
  c.expect((a.world - Vec3(0.4, 0.4, 2.0)).cwiseAbs().maxCoeff() <= 1e-9, "anchor world fixture");

  const double scale = solve_scale(K, {0, 0, 10, 250}, 2.0, 1.8);
  c.expect(std::abs(scale - 250.0 * 2.0 / (500.0 * 1.8)) <= 1e-9, "scale fixture");

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 1.0, "took " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------- collision oracle

Vec3 brute_nearest(const OccupancyGrid& g, const Vec3& p) {
  if (!is_occupied(g, p)) return p;
  double best = std::numeric_limits<double>::infinity();
  Vec3 arg = p;
  const auto& d = g.dims();
  for (int i = 0; i < d[0]; ++i)
    for (int j = 0; j < d[1]; ++j)
      for (int k = 0; k < d[2]; ++k) {
        if (g.occupied({i, j, k})) continue;
        const Vec3 center = g.voxel_center({i, j, k});
        const double dist = (center - p).squaredNorm();
        if (dist < best) {
          best = dist;
          arg = center;
        }
      }
  return arg;
}

void collision_oracle(Check& c) {
  const auto t0 = Clock::now();
  Gen gen(7001);
  int grids = 0;
  while (grids < 200) {
    GridLayout L;
    L.origin = gen.vec3(-5, 5);
    L.cell_size = gen.uniform(0.05, 1.0);
    L.dims = {gen.integer(1, 32), gen.integer(1, 32), gen.integer(1, 32)};
    std::vector<std::uint8_t> flags(L.voxel_count());
    const double fill = gen.uniform(0.2, 0.995);
    for (auto& f : flags) f = gen.coin(fill) ? 1 : 0;
    const OccupancyGrid g(L, std::move(flags), 0.1);
    if (g.free_count() == 0) continue;
    ++grids;
    const Vec3 hi = L.origin + L.cell_size * Vec3(L.dims[0], L.dims[1], L.dims[2]);
    for (int q = 0; q < 10; ++q) {
      Vec3 p;
      if (gen.coin(0.3)) {
        p = g.voxel_center({gen.integer(0, L.dims[0] - 1), gen.integer(0, L.dims[1] - 1), gen.integer(0, L.dims[2] - 1)});
      } else {
        for (int k = 0; k < 3; ++k) p[k] = gen.uniform(L.origin[k] - L.cell_size, hi[k] + L.cell_size);
      }
      const Vec3 got = nearest_free(g, p);
      const Vec3 want = brute_nearest(g, p);
      c.expect(got == want, "grid " + std::to_string(grids) + " query " + std::to_string(q));
    }
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 30.0, "took " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------- smoothing

void smoothing(Check& c) {
  const std::vector<Vec3> bump{Vec3(0, 0, 0), Vec3(0, 3, 0), Vec3(0, 0, 0)};
  const auto s = smooth_anchors(bump, 0.5, 1);
  c.expect(s[0] == bump[0] && s[2] == bump[2] && s[1] == Vec3(0, 1.5, 0), "bump fixture");

  Gen gen(7002);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec3> pts;
    const int n = gen.integer(1, 12);
    for (int i = 0; i < n; ++i) pts.push_back(gen.vec3(-5, 5));
    c.expect(smooth_anchors(pts, 0.0, gen.integer(1, 5)) == pts, "lambda 0 identity");
    const auto sm = smooth_anchors(pts, gen.uniform(0, 1), gen.integer(1, 5));
    c.expect(sm.front() == pts.front() && sm.back() == pts.back(), "endpoints");

    // Exactly representable collinear points: integer start, power-of-two step.
    const Vec3 start(gen.integer(-8, 8), gen.integer(-8, 8), gen.integer(-8, 8));
    const Vec3 step = Vec3(gen.integer(-4, 4), gen.integer(-4, 4), gen.integer(-4, 4)) * 0.25;
    std::vector<Vec3> line;
    for (int i = 0; i < 8; ++i) line.push_back(start + i * step);
    c.expect(smooth_anchors(line, 0.5, 3) == line, "collinear fixed point");
  }

  const CameraIntrinsics K{300, 300, 160, 120, 320, 240};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GaussianPrimitive> scene;
    const int count = gen.integer(5, 60);
    for (int i = 0; i < count; ++i) {
      auto p = gen.primitive(1.0);
      p.center += Vec3(0, 0.5, 4);
      p.scale *= gen.uniform(1.0, 3.0);
      p.opacity = gen.uniform(0.5, 1.0);
      scene.push_back(p);
    }
    const OccupancyGrid grid = build_grid(GaussianField(scene, 0), gen.uniform(0.05, 0.2), 0.2);
    std::vector<GaussianField> frames;
    const int nframes = gen.integer(1, 12);
    const Vec3 drift = gen.vec3(-0.3, 0.3);
    for (int t = 0; t < nframes; ++t)
      frames.push_back(column(1.8, 20, drift * t + 0.1 * gen.vec3(-1, 1)));
    const double depth = gen.uniform(3.0, 5.0);
    const DepthMap d = filled(320, 240, [&](int, int) { return depth; });
    PlacementConfig cfg;
    cfg.smoothing_weight = gen.uniform(0, 1);
    cfg.smoothing_iterations = gen.integer(0, 4);
    const BBox2D box{gen.uniform(60, 200), gen.uniform(20, 80), 40, gen.uniform(60, 120)};
    const auto sol = place_sequence(frames, grid, K, CameraPose(), box, d, cfg);
    for (const auto& p : sol.anchor_points)
      c.expect(!is_occupied(grid, p), "trial " + std::to_string(trial) + " anchor in occupied voxel");
  }
}

// ---------------------------------------------------------------- renderer

void renderer(Check& c) {
  Gen gen(7003);
  const CameraIntrinsics K = simple_intrinsics(96, 72, 80);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<GaussianPrimitive> prims;
    for (int i = 0; i < 150; ++i) {
      auto p = gen.primitive(1.5);
      p.center.z() += 4.0;
      prims.push_back(p);
    }
    // Duplicated depths stress the tie-break.
    prims.push_back(prims[3]);
    prims[10].center.z() = prims[11].center.z();
    const ImageBuffer ref = render(GaussianField(prims, 0), K, CameraPose(), RenderConfig{});
    for (int k = 0; k < 3; ++k) {
      std::shuffle(prims.begin(), prims.end(), gen.engine());
      c.expect(render(GaussianField(prims, 0), K, CameraPose(), RenderConfig{}) == ref, "permutation");
    }
    for (float a : ref.alpha) c.expect(a >= 0.0f && a <= 1.0f, "alpha out of [0, 1]");
  }

  const GaussianField one({make_primitive(Vec3(0, 0, 3), Vec3::Constant(0.1), Quat::Identity(), 1.0, Vec3(1, 0, 0))}, 0);
  // Pixel centers sit at integer coordinates; put the principal point on pixel (32, 32).
  const CameraIntrinsics K1{100, 100, 32, 32, 65, 65};
  const ImageBuffer img = render(one, K1, CameraPose(), RenderConfig{});
  c.expect(img.alpha[img.index(32, 32)] >= 0.99f, "center alpha " + fmt(img.alpha[img.index(32, 32)]));
  const DepthMap dm = render_depth_map(one, K1, CameraPose(), RenderConfig{});
  c.expect(dm.valid(32, 32) && std::abs(dm.at(32, 32) - 3.0) <= 1e-3, "single splat depth");

  // Full HD, 100k primitives spread through the view frustum.
  const CameraIntrinsics hd{1400, 1400, 960, 540, 1920, 1080};
  std::vector<GaussianPrimitive> many;
  many.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    const double z = gen.uniform(2.0, 12.0);
    const Vec3 center(gen.uniform(-0.7, 0.7) * z, gen.uniform(-0.4, 0.4) * z, z);
    const Vec3 scale(gen.uniform(0.005, 0.04), gen.uniform(0.005, 0.04), gen.uniform(0.005, 0.04));
    many.push_back(make_primitive(center, scale, gen.rotation(), gen.uniform(0.1, 1.0), gen.vec3(0, 1)));
  }
  const GaussianField big(std::move(many), 0);
  const auto t0 = Clock::now();
  const ImageBuffer hd_img = render(big, hd, CameraPose(), RenderConfig{});
  const double elapsed = seconds_since(t0);
  c.expect(hd_img.width == 1920 && hd_img.height == 1080, "full HD size");
  c.expect(elapsed < 10.0, "100k full-HD render took " + fmt(elapsed) + " s");
  std::cout << "  full-HD 100k render: " << fmt(elapsed) << " s\n";
}

// ---------------------------------------------------------------- projection

void projection(Check& c) {
  Gen gen(7004);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const CameraIntrinsics K = gen.intrinsics();
    const CameraPose pose = gen.pose(10.0);
    const double u = gen.uniform(0, K.width), v = gen.uniform(0, K.height), d = gen.uniform(0.05, 100.0);
    const auto pr = project_point(K, pose, backproject(K, pose, u, v, d));
    if (!pr) {
      c.expect(false, "point behind camera after round trip");
      continue;
    }
    const double err = std::max({std::abs(pr->u - u) / std::max(1.0, std::abs(u)),
                                 std::abs(pr->v - v) / std::max(1.0, std::abs(v)), std::abs(pr->depth - d) / d});
    worst = std::max(worst, err);
  }
  c.expect(worst <= 1e-9, "worst relative error " + fmt(worst));
}

// ---------------------------------------------------------------- morphology and inpainting

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

ImageBuffer solid(int w, int h, const Eigen::Vector3f& c) {
  ImageBuffer img(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      img.set_rgb(u, v, c);
      img.alpha[img.index(u, v)] = 1.0f;
      img.depth[img.index(u, v)] = 3.0f;
    }
  return img;
}

void morphology(Check& c) {
  Gen gen(7005);
  for (int trial = 0; trial < 60; ++trial) {
    const int w = gen.integer(1, 128), h = gen.integer(1, 128), r = gen.integer(0, 10);
    HoleMask m(w, h);
    const double p = gen.uniform(0.001, 0.1);
    for (auto& x : m.mask) x = gen.coin(p) ? 1 : 0;
    c.expect(dilate(m, r) == brute_dilate(m, r), "dilation trial " + std::to_string(trial));
  }

  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Vector3f col = gen.vec3(0, 1).cast<float>();
    const int w = gen.integer(8, 128), h = gen.integer(8, 128);
    ImageBuffer img = solid(w, h, col);
    HoleMask m(w, h);
    const int x0 = gen.integer(1, w / 2), y0 = gen.integer(1, h / 2);
    for (int v = y0; v < std::min(h - 1, y0 + h / 2); ++v)
      for (int u = x0; u < std::min(w - 1, x0 + w / 2); ++u) {
        m.set(u, v);
        img.set_rgb(u, v, Eigen::Vector3f(1, 0, 1));
        img.alpha[img.index(u, v)] = 0.0f;
      }
    const ImageBuffer out = inpaint(img, m);
    float worst = 0.0f;
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        if (m.at(u, v)) {
          worst = std::max(worst, (out.rgb(u, v) - col).cwiseAbs().maxCoeff());
        } else {
          const std::size_t i = img.index(u, v);
          const bool same = out.color[3 * i] == img.color[3 * i] && out.color[3 * i + 1] == img.color[3 * i + 1] &&
                            out.color[3 * i + 2] == img.color[3 * i + 2] && out.alpha[i] == img.alpha[i] &&
                            out.depth[i] == img.depth[i];
          c.expect(same, "unmasked pixel changed");
        }
      }
    c.expect(worst <= 1.0f / 255.0f, "constant fill error " + fmt(worst));
  }

  // Unmasked pixels of a random image with random holes stay bit-exact.
  for (int trial = 0; trial < 10; ++trial) {
    const int w = gen.integer(4, 100), h = gen.integer(4, 100);
    ImageBuffer img(w, h);
    for (auto& x : img.color) x = static_cast<float>(gen.uniform(0, 1));
    for (auto& x : img.alpha) x = static_cast<float>(gen.uniform(0, 1));
    for (auto& x : img.depth) x = static_cast<float>(gen.uniform(1, 5));
    HoleMask m(w, h);
    for (auto& x : m.mask) x = gen.coin(0.2) ? 1 : 0;
    const ImageBuffer out = inpaint(img, m);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      if (m.mask[i]) continue;
      c.expect(out.color[3 * i] == img.color[3 * i] && out.color[3 * i + 1] == img.color[3 * i + 1] &&
                   out.color[3 * i + 2] == img.color[3 * i + 2] && out.alpha[i] == img.alpha[i] &&
                   out.depth[i] == img.depth[i],
               "random image unmasked pixel changed");
    }
  }
}

// ---------------------------------------------------------------- end to end

int run(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void end_to_end(Check& c, const std::string& exe, const fs::path& work) {
  const auto t0 = Clock::now();
  const fs::path demo = work / "demo";
  fs::remove_all(demo);
  c.expect(run(exe + " demo -o " + demo.string()) == 0, "demo command failed");
  c.expect(run(exe + " pipeline -c " + (demo / "config.json").string() + " -o " + (work / "run_a").string()) == 0,
           "first pipeline run failed");
  c.expect(run(exe + " pipeline -c " + (demo / "config.json").string() + " -o " + (work / "run_b").string()) == 0,
           "second pipeline run failed");
  c.expect(run(exe + " postfill --scene " + (demo / "half_plane" / "scene.ply").string() + " --trajectory " +
               (demo / "half_plane" / "trajectory.json").string() + " -o " + (work / "half_plane").string()) == 0,
           "half-plane postfill failed");
  const double elapsed = seconds_since(t0);

  int compared = 0;
  if (fs::is_directory(work / "run_a" / "frames")) {
    for (const auto& entry : fs::directory_iterator(work / "run_a" / "frames")) {
      const fs::path other = work / "run_b" / "frames" / entry.path().filename();
      c.expect(fs::exists(other) && slurp(entry.path()) == slurp(other),
               "frame " + entry.path().filename().string() + " differs between runs");
      ++compared;
    }
  }
  c.expect(compared > 0, "no frames written");

  try {
    const auto m = nlohmann::json::parse(slurp(work / "run_a" / "metrics.json"));
    for (double f : m.at("hole_fraction_after")) c.expect(f < 0.005, "post-fill hole fraction " + fmt(f));
    const double h = m.at("bbox").at("h").get<double>();
    const int px = m.at("avatar_pixel_height").get<int>();
    c.expect(std::abs(px - h) <= 0.1 * h, "avatar height " + std::to_string(px) + " px vs box " + fmt(h));
    std::cout << "  avatar height " << px << " px for a " << h << " px box\n";

    const auto hp = nlohmann::json::parse(slurp(work / "half_plane" / "metrics.json"));
    double before_min = 1.0;
    for (double f : hp.at("hole_fraction_before")) before_min = std::min(before_min, f);
    c.expect(before_min > 0.05, "half-plane pre-fill hole fraction " + fmt(before_min));
    for (double f : hp.at("hole_fraction_after")) c.expect(f < 0.005, "half-plane post-fill hole fraction " + fmt(f));
    std::cout << "  half-plane minimum pre-fill hole fraction " << fmt(before_min) << "\n";
  } catch (const std::exception& e) {
    c.expect(false, std::string("metrics: ") + e.what());
  }
  c.expect(elapsed < 120.0, "took " + fmt(elapsed) + " s");
  std::cout << "  end-to-end wall time " << fmt(elapsed) << " s\n";
}

// ---------------------------------------------------------------- I/O

void io_round_trips(Check& c, const std::string& exe, const fs::path& work) {
  Gen gen(7008);
  const fs::path dir = work / "io";
  fs::create_directories(dir);

  std::vector<GaussianPrimitive> prims;
  for (int i = 0; i < 50; ++i) {
    auto p = gen.primitive(3.0);
    p.appearance.resize(appearance_size(1));
    for (auto& x : p.appearance) x = gen.uniform(-1, 1);
    prims.push_back(p);
  }
  const GaussianField field(prims, 1);
  write_ply(field, dir / "f.ply");
  const GaussianField back = load_ply(dir / "f.ply");
  bool ply_ok = back.size() == field.size() && back.sh_degree() == 1;
  for (std::size_t i = 0; ply_ok && i < field.size(); ++i) {
    const auto& a = field[i];
    const auto& b = back[i];
    ply_ok = (a.center.cast<float>().cast<double>() - b.center).norm() == 0.0 &&
             std::abs(a.opacity - b.opacity) < 1e-6 && (a.scale - b.scale).cwiseAbs().maxCoeff() <= 1e-6 * a.scale.maxCoeff() &&
             std::abs(std::abs(a.rotation.dot(b.rotation)) - 1) < 1e-6;
    for (std::size_t k = 0; ply_ok && k < a.appearance.size(); ++k)
      ply_ok = static_cast<float>(a.appearance[k]) == b.appearance[k];
  }
  c.expect(ply_ok, "PLY round trip");

  DepthMap depth(17, 9);
  for (int v = 0; v < 9; ++v)
    for (int u = 0; u < 17; ++u) depth.set(u, v, static_cast<float>(gen.uniform(0.1, 50)));
  depth.invalidate(3, 4);
  write_depth(depth, dir / "d.pfm");
  const DepthMap dback = load_depth(dir / "d.pfm");
  bool pfm_ok = dback.width() == 17 && dback.height() == 9;
  for (int v = 0; pfm_ok && v < 9; ++v)
    for (int u = 0; pfm_ok && u < 17; ++u)
      pfm_ok = depth.valid(u, v) ? dback.at(u, v) == depth.at(u, v) : !dback.valid(u, v);
  c.expect(pfm_ok, "PFM round trip");

  std::vector<Camera> cams;
  const CameraIntrinsics K = gen.intrinsics();
  for (int i = 0; i < 8; ++i) cams.push_back({K, gen.pose(5.0)});
  const Trajectory traj(cams);
  write_trajectory(traj, dir / "t.json");
  c.expect(load_trajectory(dir / "t.json") == traj, "trajectory round trip");

  PlacementSolution sol;
  sol.scale = gen.uniform(0.1, 3);
  sol.pooled_depth = gen.uniform(1, 9);
  sol.base_anchor = gen.vec3(-3, 3);
  for (int t = 0; t < 5; ++t) {
    sol.anchor_points.push_back(gen.vec3(-3, 3));
    sol.roots.push_back(gen.vec3(-1, 1));
    sol.collisions_resolved.push_back(gen.coin());
    sol.resolution_counts.push_back(gen.integer(0, 3));
  }
  write_placement(sol, dir / "p.json");
  c.expect(load_placement(dir / "p.json") == sol, "placement round trip");

  // Malformed inputs: each must raise a structured library error.
  const auto& names = standard_ply_properties();
  const auto row = default_vertex();
  auto bytes = [](const std::string& s) { return std::vector<char>(s.begin(), s.end()); };
  auto without = [&](const std::string& name) {
    std::vector<std::string> n;
    std::vector<float> r;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] != name) n.push_back(names[i]), r.push_back(row[i]);
    return make_ply(n, {r});
  };
  auto with_value = [&](int index, float value) {
    auto r = row;
    r[index] = value;
    return make_ply(names, {r});
  };
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const float inf = std::numeric_limits<float>::infinity();
  const std::string intr = R"("intrinsics": {"fx": 100, "fy": 100, "cx": 32, "cy": 24, "width": 64, "height": 48})";

  std::vector<std::pair<std::string, std::function<void()>>> cases = {
      {"ply empty", [&] { parse_ply(bytes("")); }},
      {"ply bad magic", [&] { parse_ply(bytes("plx\nformat binary_little_endian 1.0\nend_header\n")); }},
      {"ply no end_header", [&] { parse_ply(bytes("ply\nformat binary_little_endian 1.0\nelement vertex 1\n")); }},
      {"ply ascii", [&] { parse_ply(make_ply(names, {row}, "ascii 1.0")); }},
      {"ply big endian", [&] { parse_ply(make_ply(names, {row}, "binary_big_endian 1.0")); }},
      {"ply missing rot_3", [&] { parse_ply(without("rot_3")); }},
      {"ply missing x", [&] { parse_ply(without("x")); }},
      {"ply missing opacity", [&] { parse_ply(without("opacity")); }},
      {"ply truncated", [&] {
         auto b = make_ply(names, {row, row});
         b.resize(b.size() - 7);
         parse_ply(b);
       }},
      {"ply NaN position", [&] { parse_ply(with_value(0, nan)); }},
      {"ply infinite scale", [&] { parse_ply(with_value(10, inf)); }},
      {"ply zero quaternion", [&] { parse_ply(with_value(13, 0.0f)); }},
      {"ply bad vertex count", [&] { parse_ply(bytes("ply\nformat binary_little_endian 1.0\nelement vertex -3\nend_header\n")); }},
      {"ply unknown type", [&] {
         parse_ply(bytes("ply\nformat binary_little_endian 1.0\nelement vertex 0\nproperty quad x\nend_header\n"));
       }},
      {"pfm color", [&] { parse_pfm(make_pfm("PF\n1 1\n-1.0\n", {1, 1, 1})); }},
      {"pfm bad magic", [&] { parse_pfm(make_pfm("P6\n1 1\n-1.0\n", {1})); }},
      {"pfm zero width", [&] { parse_pfm(make_pfm("Pf\n0 1\n-1.0\n", {})); }},
      {"pfm zero scale", [&] { parse_pfm(make_pfm("Pf\n1 1\n0\n", {1})); }},
      {"pfm truncated", [&] { parse_pfm(make_pfm("Pf\n3 3\n-1.0\n", {1, 2})); }},
      {"pfm NaN pixel", [&] { parse_pfm(make_pfm("Pf\n2 1\n-1.0\n", {1, nan})); }},
      {"trajectory not json", [&] { parse_trajectory("{\"poses\": ["); }},
      {"trajectory no intrinsics", [&] { parse_trajectory(R"({"poses": []})"); }},
      {"trajectory empty poses", [&] { parse_trajectory("{" + intr + R"(, "poses": []})"); }},
      {"trajectory short pose", [&] { parse_trajectory("{" + intr + R"(, "poses": [[1, 0, 0]]})"); }},
      {"trajectory scaled pose", [&] {
         parse_trajectory("{" + intr + R"(, "poses": [[2,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1]]})");
       }},
      {"trajectory reflection", [&] {
         parse_trajectory("{" + intr + R"(, "poses": [[1,0,0,0, 0,1,0,0, 0,0,-1,0, 0,0,0,1]]})");
       }},
      {"trajectory negative focal", [&] {
         parse_trajectory(R"({"intrinsics": {"fx": -1, "fy": 1, "cx": 0, "cy": 0, "width": 4, "height": 4}, "poses": []})");
       }},
      {"placement zero scale", [&] { parse_placement(R"({"scale": 0, "pooled_depth": 1})"); }},
      {"placement ragged", [&] {
         parse_placement(R"({"scale": 1, "pooled_depth": 1, "base_anchor": [0,0,0], "anchors": [[0,0,0]],
                            "roots": [], "collisions_resolved": [false], "resolution_counts": [0]})");
       }},
      {"missing file", [&] { load_ply(dir / "absent.ply"); }},
  };
  int structured = 0;
  for (const auto& [name, fn] : cases) {
    try {
      fn();
      c.expect(false, name + ": accepted");
    } catch (const ValidationError&) {
      ++structured;
    } catch (const std::exception& e) {
      c.expect(false, name + ": unstructured error " + e.what());
    }
  }
  c.expect(structured >= 20, "only " + std::to_string(structured) + " structured errors");
  std::cout << "  " << structured << " malformed inputs raised structured errors\n";

  std::ofstream(dir / "bad.ply") << "garbage";
  const int code = run(exe + " render --scene " + (dir / "bad.ply").string() + " --trajectory " +
                       (dir / "t.json").string() + " -o " + (dir / "frames").string());
  c.expect(code == 2, "CLI exit code on a malformed scene was " + std::to_string(code));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <stagehand-exe> <work-dir>\n";
    return 2;
  }
  const std::string exe = argv[1];
  const fs::path work = argv[2];
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"placement math fixtures", placement_math},
      {"collision oracle equivalence", collision_oracle},
      {"smoothing contract and collision-free placement", smoothing},
      {"renderer invariants and full-HD throughput", renderer},
      {"projection round trip", projection},
      {"morphology and inpainting", morphology},
      {"end-to-end demo", [&](Check& c) { end_to_end(c, exe, work); }},
      {"I/O round trips and malformed inputs", [&](Check& c) { io_round_trips(c, exe, work); }},
  };

  int failed = 0;
  for (const auto& [name, body] : criteria) {
    Check c;
    const auto t0 = Clock::now();
    try {
      body(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("uncaught: ") + e.what());
    }
    const double secs = seconds_since(t0);
    if (c.ok()) {
      std::cout << "PASS " << name << " (" << fmt(secs) << " s)\n";
    } else {
      ++failed;
      std::cout << "FAIL " << name << " (" << fmt(secs) << " s): " << c.summary() << "\n";
    }
    std::cout.flush();
  }
  return failed == 0 ? 0 : 1;
}
