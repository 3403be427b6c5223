#include "stagehand/placement.hpp"

#include <algorithm>
#include <cmath>

namespace stagehand {

void PlacementConfig::validate() const {
  if (baseline_samples < 1) throw ValidationError("placement: baseline_samples must be >= 1");
  if (!(smoothing_weight >= 0.0 && smoothing_weight <= 1.0))
    throw ValidationError("placement: smoothing_weight must lie in [0, 1]");
  if (smoothing_iterations < 0)
    throw ValidationError("placement: smoothing_iterations must be >= 0");
  if (!up.allFinite() || !(up.norm() > 0.0))
    throw ValidationError("placement: up vector must be finite and non-zero");
}

BaselineSampleSet sample_baseline(const BBox2D& box, int samples) {
  if (samples < 1) throw ValidationError("placement: baseline sample count must be >= 1");
  BaselineSampleSet set;
  set.samples.reserve(samples);
  const double v = box.y + box.h;
  for (int n = 1; n <= samples; ++n)
    set.samples.emplace_back(box.x + (static_cast<double>(n) / samples) * box.w, v);
  return set;
}

std::optional<double> sample_depth(const DepthMap& depth, double u, double v) {
  if (!std::isfinite(u) || !std::isfinite(v)) return std::nullopt;
  const double u0 = std::floor(u), v0 = std::floor(v);
  const double fu = u - u0, fv = v - v0;
  const double weights[4] = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
  const int du[4] = {0, 1, 0, 1};
  const int dv[4] = {0, 0, 1, 1};

  double sum = 0.0, total = 0.0;
  for (int t = 0; t < 4; ++t) {
    if (weights[t] <= 0.0) continue;
    const double tu = u0 + du[t], tv = v0 + dv[t];
    if (tu < 0 || tv < 0 || tu >= depth.width() || tv >= depth.height()) continue;
    const int iu = static_cast<int>(tu), iv = static_cast<int>(tv);
    if (!depth.valid(iu, iv)) continue;
    sum += weights[t] * depth.at(iu, iv);
    total += weights[t];
  }
  if (total <= 0.0) return std::nullopt;
  return total == 1.0 ? sum : sum / total;
}

double pool_depth(const DepthMap& depth, const BaselineSampleSet& samples) {
  double sum = 0.0;
  int count = 0;
  for (const auto& s : samples.samples) {
    if (auto d = sample_depth(depth, s.x(), s.y())) {
      sum += *d;
      ++count;
    }
  }
  if (count == 0)
    throw NoDepthSupportError("placement: no baseline sample hits a valid depth pixel");
  return sum / count;
}

Anchor backproject_anchor(const CameraIntrinsics& K, const CameraPose& pose, const BBox2D& box,
                          double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth))
    throw ValidationError("placement: anchor depth must be positive");
  const double uc = box.x + box.w / 2.0;
  const double vc = box.y + box.h;
  Anchor a;
  a.camera = backproject_to_camera(K, uc, vc, depth);
  a.world = pose.to_world(a.camera);
  return a;
}

double solve_scale(const CameraIntrinsics& K, const BBox2D& box, double depth,
                   double reference_height) {
  if (!(reference_height > 0.0))
    throw ValidationError("placement: human reference height must be positive");
  return (box.h * depth) / (K.fy * reference_height);
}

namespace {

std::vector<double> heights_along(const GaussianField& frame, const Vec3& up) {
  if (frame.empty()) throw ValidationError("placement: human frame has no primitives");
  const Vec3 n = up.normalized();
  std::vector<double> h;
  h.reserve(frame.size());
  for (const auto& p : frame) h.push_back(p.center.dot(n));
  return h;
}

// Linear-interpolation percentile of sorted data, q in [0, 1].
double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double f = pos - static_cast<double>(lo);
  return sorted[lo] + f * (sorted[hi] - sorted[lo]);
}

}  // namespace

double reference_height(const GaussianField& frame, const Vec3& up) {
  std::vector<double> h = heights_along(frame, up);
  std::sort(h.begin(), h.end());
  return percentile(h, 0.99) - percentile(h, 0.01);
}

Vec3 foot_point(const GaussianField& frame, const Vec3& up) {
  const std::vector<double> h = heights_along(frame, up);
  const auto [lo, hi] = std::minmax_element(h.begin(), h.end());
  const double limit = *lo + 0.05 * (*hi - *lo);
  Vec3 sum = Vec3::Zero();
  int count = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] <= limit) {
      sum += frame[i].center;
      ++count;
    }
  }
  return sum / count;
}

std::vector<Vec3> smooth_anchors(std::span<const Vec3> anchors, double weight, int iterations) {
  std::vector<Vec3> current(anchors.begin(), anchors.end());
  if (current.size() < 3) return current;
  std::vector<Vec3> previous;
  for (int it = 0; it < iterations; ++it) {
    previous = current;
    for (std::size_t t = 1; t + 1 < current.size(); ++t)
      current[t] = (1.0 - weight) * previous[t] + weight * ((previous[t - 1] + previous[t + 1]) / 2.0);
  }
  return current;
}

PlacementSolution place_sequence(std::span<const GaussianField> human_frames,
                                 const OccupancyGrid& scene_grid, const CameraIntrinsics& K,
                                 const CameraPose& pose, const BBox2D& box, const DepthMap& depth,
                                 const PlacementConfig& cfg) {
  cfg.validate();
  K.validate();
  if (human_frames.empty()) throw ValidationError("placement: human sequence has no frames");
  box.validate(K.width, K.height);

  PlacementSolution out;
  out.pooled_depth = pool_depth(depth, sample_baseline(box, cfg.baseline_samples));
  out.base_anchor = backproject_anchor(K, pose, box, out.pooled_depth).world;
  out.scale = solve_scale(K, box, out.pooled_depth, reference_height(human_frames[0], cfg.up));

  const std::size_t n = human_frames.size();
  out.roots.reserve(n);
  for (const auto& frame : human_frames) out.roots.push_back(foot_point(frame, cfg.up));

  std::vector<Vec3> anchors(n);
  out.resolution_counts.assign(n, 0);
  for (std::size_t t = 0; t < n; ++t) {
    anchors[t] = out.base_anchor + out.scale * (out.roots[t] - out.roots[0]);
    if (is_occupied(scene_grid, anchors[t])) {
      anchors[t] = nearest_free(scene_grid, anchors[t]);
      ++out.resolution_counts[t];
    }
  }

  anchors = smooth_anchors(anchors, cfg.smoothing_weight, cfg.smoothing_iterations);

  // Smoothing may pull a point back into occupied space; project once more and stop.
  for (std::size_t t = 0; t < n; ++t) {
    if (is_occupied(scene_grid, anchors[t])) {
      anchors[t] = nearest_free(scene_grid, anchors[t]);
      ++out.resolution_counts[t];
    }
  }

  out.anchor_points = std::move(anchors);
  out.collisions_resolved.resize(n);
  for (std::size_t t = 0; t < n; ++t) out.collisions_resolved[t] = out.resolution_counts[t] > 0;
  return out;
}

BBox2D heuristic_bbox(int image_width, int image_height, const DepthMap& depth) {
  if (image_width < 1 || image_height < 1)
    throw ValidationError("placement: image size must be at least 1x1");
  if (depth.width() != image_width || depth.height() != image_height)
    throw ValidationError("placement: depth map size does not match the image");

  constexpr double kRelativeTolerance = 0.02;
  const double target_row = 0.75 * image_height;
  int best_len = 0, best_row = -1, best_start = 0;
  for (int v = image_height / 2; v < image_height; ++v) {
    int run_start = 0, run_len = 0;
    for (int u = 0; u < image_width; ++u) {
      if (!depth.valid(u, v)) {
        run_len = 0;
        continue;
      }
      const bool continues =
          run_len > 0 && std::abs(depth.at(u, v) - depth.at(u - 1, v)) <=
                             kRelativeTolerance * std::max(depth.at(u, v), depth.at(u - 1, v));
      if (!continues) {
        run_start = u;
        run_len = 0;
      }
      ++run_len;
      const bool better =
          run_len > best_len ||
          (run_len == best_len && best_row >= 0 &&
           std::abs(v - target_row) < std::abs(best_row - target_row));
      if (better) {
        best_len = run_len;
        best_row = v;
        best_start = run_start;
      }
    }
  }
  if (best_row < 0) throw NoDepthSupportError("placement: depth map has no valid pixel in its lower half");

  BBox2D box;
  box.h = 0.4 * image_height;
  box.w = box.h / 2.0;
  const double center = best_start + (best_len - 1) / 2.0;
  box.x = std::clamp(center - box.w / 2.0, 0.0, std::max(0.0, image_width - box.w));
  box.y = best_row - box.h;
  return box;
}

}  // namespace stagehand
