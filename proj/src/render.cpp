#include "stagehand/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include <omp.h>

namespace stagehand {

void RenderConfig::validate() const {
  if (!background_color.allFinite() || (background_color.array() < 0.0).any() ||
      (background_color.array() > 1.0).any())
    throw ValidationError("render: background color must lie in [0, 1]");
  if (!(alpha_cutoff > 0.0 && alpha_cutoff < 1.0))
    throw ValidationError("render: alpha_cutoff must lie in (0, 1)");
  if (!(gaussian_extent_sigmas > 0.0) || !std::isfinite(gaussian_extent_sigmas))
    throw ValidationError("render: gaussian_extent_sigmas must be positive");
  if (tile_size < 1) throw ValidationError("render: tile_size must be at least 1");
  if (threads < 0) throw ValidationError("render: threads must be non-negative");
}

std::optional<Splat2D> project_gaussian(const GaussianPrimitive& p, const CameraIntrinsics& K,
                                        const CameraPose& pose, double extent_sigmas) {
  const Mat3 W = pose.rotation().transpose();
  const Vec3 t = pose.to_camera(p.center);
  if (!(t.z() > kNearPlane)) return std::nullopt;

  const double inv_z = 1.0 / t.z();
  Eigen::Matrix<double, 2, 3> J;
  J << K.fx * inv_z, 0.0, -K.fx * t.x() * inv_z * inv_z,
       0.0, K.fy * inv_z, -K.fy * t.y() * inv_z * inv_z;

  const Eigen::Matrix<double, 2, 3> T = J * W;
  Mat2 cov = T * covariance_of(p) * T.transpose();
  cov(1, 0) = cov(0, 1);
  cov(0, 0) += kCovarianceFloorPx2;
  cov(1, 1) += kCovarianceFloorPx2;

  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
  if (!(det > 0.0) || !std::isfinite(det)) return std::nullopt;

  Splat2D s;
  s.mean = Vec2(K.fx * t.x() * inv_z + K.cx, K.fy * t.y() * inv_z + K.cy);
  s.cov = cov;
  s.conic << cov(1, 1) / det, -cov(0, 1) / det, -cov(0, 1) / det, cov(0, 0) / det;
  s.depth = t.z();

  const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
  const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
  s.radius = extent_sigmas * std::sqrt(lambda_max);

  // Pixel centers sit at integer coordinates, so the image spans [-0.5, size - 0.5].
  if (s.mean.x() + s.radius < -0.5 || s.mean.x() - s.radius > K.width - 0.5 ||
      s.mean.y() + s.radius < -0.5 || s.mean.y() - s.radius > K.height - 0.5)
    return std::nullopt;
  return s;
}

namespace {

struct PreparedSplat {
  float mean_x, mean_y;
  float conic_a, conic_b, conic_c;
  float depth;
  float opacity;
  float r, g, b;
  int x0, x1, y0, y1;  // inclusive pixel bounds, clipped to the image
  std::uint32_t source;
};

// Total order on primitives used to canonicalize ties in center depth.
bool primitive_less(const GaussianPrimitive& a, const GaussianPrimitive& b) {
  auto lex = [](const auto& x, const auto& y) {
    return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
  };
  if (a.center != b.center) return lex(a.center, b.center);
  if (a.scale != b.scale) return lex(a.scale, b.scale);
  if (a.rotation.coeffs() != b.rotation.coeffs()) return lex(a.rotation.coeffs(), b.rotation.coeffs());
  if (a.opacity != b.opacity) return a.opacity < b.opacity;
  return std::lexicographical_compare(a.appearance.begin(), a.appearance.end(),
                                      b.appearance.begin(), b.appearance.end());
}

std::vector<PreparedSplat> prepare(const GaussianField& field, const CameraIntrinsics& K,
                                   const CameraPose& pose, const RenderConfig& cfg) {
  struct Entry {
    Splat2D splat;
    std::uint32_t source;
  };
  std::vector<Entry> entries;
  entries.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field[i].opacity < cfg.alpha_cutoff) continue;
    if (auto s = project_gaussian(field[i], K, pose, cfg.gaussian_extent_sigmas))
      entries.push_back({*s, static_cast<std::uint32_t>(i)});
  }

  std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    if (a.splat.depth != b.splat.depth) return a.splat.depth < b.splat.depth;
    const auto& pa = field[a.source];
    const auto& pb = field[b.source];
    if (primitive_less(pa, pb)) return true;
    if (primitive_less(pb, pa)) return false;
    return a.source < b.source;
  });

  const Vec3 eye = pose.position();
  std::vector<PreparedSplat> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    const auto& p = field[e.source];
    const auto& s = e.splat;
    const Vec3 rgb = evaluate_color(p.appearance, field.sh_degree(), p.center - eye);
    PreparedSplat ps;
    ps.mean_x = static_cast<float>(s.mean.x());
    ps.mean_y = static_cast<float>(s.mean.y());
    ps.conic_a = static_cast<float>(s.conic(0, 0));
    ps.conic_b = static_cast<float>(s.conic(0, 1));
    ps.conic_c = static_cast<float>(s.conic(1, 1));
    ps.depth = static_cast<float>(s.depth);
    ps.opacity = static_cast<float>(p.opacity);
    ps.r = static_cast<float>(rgb.x());
    ps.g = static_cast<float>(rgb.y());
    ps.b = static_cast<float>(rgb.z());
    ps.x0 = static_cast<int>(std::max(0.0, std::ceil(s.mean.x() - s.radius)));
    ps.x1 = static_cast<int>(std::min<double>(K.width - 1, std::floor(s.mean.x() + s.radius)));
    ps.y0 = static_cast<int>(std::max(0.0, std::ceil(s.mean.y() - s.radius)));
    ps.y1 = static_cast<int>(std::min<double>(K.height - 1, std::floor(s.mean.y() + s.radius)));
    ps.source = e.source;
    if (ps.x0 > ps.x1 || ps.y0 > ps.y1) continue;
    out.push_back(ps);
  }
  return out;
}

}  // namespace

ImageBuffer render(const GaussianField& field, const CameraIntrinsics& K, const CameraPose& pose,
                   const RenderConfig& cfg) {
  K.validate();
  cfg.validate();

  const std::vector<PreparedSplat> splats = prepare(field, K, pose, cfg);

  const int ts = cfg.tile_size;
  const int tiles_x = (K.width + ts - 1) / ts;
  const int tiles_y = (K.height + ts - 1) / ts;
  std::vector<std::vector<std::uint32_t>> bins(static_cast<std::size_t>(tiles_x) * tiles_y);
  // Splats are already in blending order, so appending keeps every bin sorted.
  for (std::uint32_t i = 0; i < splats.size(); ++i) {
    const auto& s = splats[i];
    for (int ty = s.y0 / ts; ty <= s.y1 / ts; ++ty)
      for (int tx = s.x0 / ts; tx <= s.x1 / ts; ++tx)
        bins[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(i);
  }

  ImageBuffer img(K.width, K.height);
  const float max_m = static_cast<float>(cfg.gaussian_extent_sigmas * cfg.gaussian_extent_sigmas);
  const float cutoff = static_cast<float>(cfg.alpha_cutoff);
  const float bg[3] = {static_cast<float>(cfg.background_color.x()),
                       static_cast<float>(cfg.background_color.y()),
                       static_cast<float>(cfg.background_color.z())};
  const int tile_count = tiles_x * tiles_y;
  const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
  for (int tile = 0; tile < tile_count; ++tile) {
    const auto& bin = bins[tile];
    const int tx = tile % tiles_x;
    const int ty = tile / tiles_x;
    const int u_end = std::min(K.width, (tx + 1) * ts);
    const int v_end = std::min(K.height, (ty + 1) * ts);
    for (int v = ty * ts; v < v_end; ++v) {
      for (int u = tx * ts; u < u_end; ++u) {
        float T = 1.0f;
        float weight = 0.0f;
        float cr = 0.0f, cg = 0.0f, cb = 0.0f, depth = 0.0f;
        for (std::uint32_t idx : bin) {
          const PreparedSplat& s = splats[idx];
          // The footprint test must not depend on how the image is tiled.
          if (u < s.x0 || u > s.x1 || v < s.y0 || v > s.y1) continue;
          const float dx = static_cast<float>(u) - s.mean_x;
          const float dy = static_cast<float>(v) - s.mean_y;
          const float m = s.conic_a * dx * dx + 2.0f * s.conic_b * dx * dy + s.conic_c * dy * dy;
          if (!(m <= max_m)) continue;
          float g = s.opacity * std::exp(-0.5f * m);
          if (g < cutoff) continue;
          g = std::min(g, static_cast<float>(kMaxSplatAlpha));
          const float w = g * T;
          cr += s.r * w;
          cg += s.g * w;
          cb += s.b * w;
          depth += s.depth * w;
          weight += w;
          T *= 1.0f - g;
        }
        const std::size_t i = img.index(u, v);
        img.color[3 * i] = std::clamp(cr + T * bg[0], 0.0f, 1.0f);
        img.color[3 * i + 1] = std::clamp(cg + T * bg[1], 0.0f, 1.0f);
        img.color[3 * i + 2] = std::clamp(cb + T * bg[2], 0.0f, 1.0f);
        img.alpha[i] = std::clamp(1.0f - T, 0.0f, 1.0f);
        img.depth[i] = weight > 0.0f ? depth / weight : 0.0f;
      }
    }
  }
  return img;
}

DepthMap render_depth_map(const GaussianField& field, const CameraIntrinsics& K,
                          const CameraPose& pose, const RenderConfig& cfg) {
  const ImageBuffer img = render(field, K, pose, cfg);
  DepthMap out(K.width, K.height);
  for (int v = 0; v < K.height; ++v)
    for (int u = 0; u < K.width; ++u) {
      const std::size_t i = img.index(u, v);
      if (img.alpha[i] >= cfg.alpha_cutoff) out.set(u, v, img.depth[i]);
    }
  return out;
}

}  // namespace stagehand
