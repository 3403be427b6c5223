#pragma once

#include <span>
#include <vector>

#include "stagehand/core.hpp"
#include "stagehand/occupancy.hpp"

namespace stagehand {

struct PlacementConfig {
  // Number of depth samples along the box bottom edge.
  int baseline_samples = 16;
  // Neighbor-averaging weight in [0, 1]; 0 disables smoothing.
  double smoothing_weight = 0.5;
  int smoothing_iterations = 1;
  // World-space up direction used to find the human's feet and height. The default matches
  // cameras whose y axis points down.
  Vec3 up = Vec3(0.0, -1.0, 0.0);

  void validate() const;
};

struct PlacementSolution {
  // Per-frame world-space insertion point of the human's foot point.
  std::vector<Vec3> anchor_points;
  // Uniform scale applied to every human frame.
  double scale = 1.0;
  // True for frames whose anchor had to be moved out of occupied space.
  std::vector<bool> collisions_resolved;
  // Number of projections applied per frame (before and after smoothing).
  std::vector<int> resolution_counts;
  // Per-frame foot point in the human's own coordinates.
  std::vector<Vec3> roots;
  // Pooled baseline depth and the un-adjusted world anchor it produced.
  double pooled_depth = 0.0;
  Vec3 base_anchor = Vec3::Zero();

  friend bool operator==(const PlacementSolution&, const PlacementSolution&) = default;
};

// u_n = x + (n/N)·w, v_n = y + h for n = 1..N. The left corner (n = 0) is not sampled.
BaselineSampleSet sample_baseline(const BBox2D& box, int samples);

// Bilinear depth lookup. Taps that are invalid or outside the map are dropped and the remaining
// weights renormalized; empty when no tap with positive weight is valid.
std::optional<double> sample_depth(const DepthMap& depth, double u, double v);

// Mean depth over the samples with valid support. Throws NoDepthSupportError if there are none.
double pool_depth(const DepthMap& depth, const BaselineSampleSet& samples);

struct Anchor {
  Vec3 camera;
  Vec3 world;
};

// Back-projects the bottom-edge center (x + w/2, y + h) at depth z.
Anchor backproject_anchor(const CameraIntrinsics& K, const CameraPose& pose, const BBox2D& box,
                          double depth);

// Uniform scale making a subject of `reference_height` span h pixels at `depth`.
double solve_scale(const CameraIntrinsics& K, const BBox2D& box, double depth,
                   double reference_height);

// Extent of primitive centers along `up` between the 1st and 99th percentiles.
double reference_height(const GaussianField& frame, const Vec3& up);

// Centroid of the primitive centers in the lowest 5% slab along `up`.
Vec3 foot_point(const GaussianField& frame, const Vec3& up);

// Jacobi passes of p_t ← (1−λ) p_t + λ (p_{t−1} + p_{t+1}) / 2 on interior frames.
std::vector<Vec3> smooth_anchors(std::span<const Vec3> anchors, double weight, int iterations);

PlacementSolution place_sequence(std::span<const GaussianField> human_frames,
                                 const OccupancyGrid& scene_grid, const CameraIntrinsics& K,
                                 const CameraPose& pose, const BBox2D& box, const DepthMap& depth,
                                 const PlacementConfig& cfg);

// Fallback when no placement box is supplied: a box whose bottom edge sits on the longest
// depth-consistent horizontal run in the lower half of the image. Height is 40% of the image
// height and width half of that.
BBox2D heuristic_bbox(int image_width, int image_height, const DepthMap& depth);

}  // namespace stagehand
