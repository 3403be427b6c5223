#pragma once

#include <optional>

#include "stagehand/core.hpp"

namespace stagehand {

struct RenderConfig {
  Vec3 background_color = Vec3::Zero();
  // Per-splat contributions below this are skipped.
  double alpha_cutoff = 1.0 / 255.0;
  // Mahalanobis radius bounding each splat's pixel footprint.
  double gaussian_extent_sigmas = 3.0;
  int tile_size = 16;
  // Worker threads for tile rasterization; 0 uses the OpenMP default. Output does not depend on it.
  int threads = 0;

  void validate() const;
};

// Diagonal floor added to every projected 2D covariance, in pixel².
inline constexpr double kCovarianceFloorPx2 = 0.3;
// Upper clamp on a single splat's contribution so transmittance never hits zero mid-list.
inline constexpr double kMaxSplatAlpha = 0.99;
// Splats whose center is closer than this (camera z) are culled.
inline constexpr double kNearPlane = 0.01;

struct Splat2D {
  Vec2 mean;      // pixel coordinates
  Mat2 cov;       // pixel², floored
  Mat2 conic;     // cov⁻¹
  double depth;   // camera-space z of the center
  double radius;  // footprint half-extent in pixels
};

// EWA projection Σ₂D = J W Σ Wᵀ Jᵀ + floor·I. Empty when behind the near plane or when the
// footprint misses the image.
std::optional<Splat2D> project_gaussian(const GaussianPrimitive& p, const CameraIntrinsics& K,
                                        const CameraPose& pose, double extent_sigmas = 3.0);

// Front-to-back alpha blending over depth-sorted splats. Sorting uses center depth, then the
// primitive's parameters, then its input index, so the result is independent of input order.
ImageBuffer render(const GaussianField& field, const CameraIntrinsics& K, const CameraPose& pose,
                   const RenderConfig& cfg);

inline ImageBuffer render(const GaussianField& field, const Camera& cam, const RenderConfig& cfg) {
  return render(field, cam.intrinsics, cam.pose, cfg);
}

// Expected depth per pixel; pixels whose alpha falls below cfg.alpha_cutoff are invalid.
DepthMap render_depth_map(const GaussianField& field, const CameraIntrinsics& K,
                          const CameraPose& pose, const RenderConfig& cfg);

}  // namespace stagehand
