#include "stagehand/compositor.hpp"

#include <algorithm>

namespace stagehand {

GaussianField transform_human(const GaussianField& frame, double scale, const Vec3& anchor,
                              const Vec3& root) {
  if (!(scale > 0.0)) throw ValidationError("compositor: scale must be positive");
  std::vector<GaussianPrimitive> out(frame.begin(), frame.end());
  for (auto& p : out) {
    p.center = scale * (p.center - root) + anchor;
    p.scale *= scale;
  }
  return GaussianField(std::move(out), frame.sh_degree());
}

GaussianField inverse_transform_human(const GaussianField& frame, double scale, const Vec3& anchor,
                                      const Vec3& root) {
  if (!(scale > 0.0)) throw ValidationError("compositor: scale must be positive");
  std::vector<GaussianPrimitive> out(frame.begin(), frame.end());
  for (auto& p : out) {
    p.center = (p.center - anchor) / scale + root;
    p.scale /= scale;
  }
  return GaussianField(std::move(out), frame.sh_degree());
}

GaussianField pad_sh(const GaussianField& field, int degree) {
  const int from = field.sh_degree();
  if (degree < from) throw ValidationError("compositor: cannot lower SH degree by padding");
  if (degree == from) return field;
  const int rest_from = sh_coefficients_per_channel(from) - 1;
  const int rest_to = sh_coefficients_per_channel(degree) - 1;
  std::vector<GaussianPrimitive> out(field.begin(), field.end());
  for (auto& p : out) {
    std::vector<double> a(appearance_size(degree), 0.0);
    std::copy_n(p.appearance.begin(), 3, a.begin());
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < rest_from; ++k) a[3 + c * rest_to + k] = p.appearance[3 + c * rest_from + k];
    p.appearance = std::move(a);
  }
  return GaussianField(std::move(out), degree);
}

FusedFrame fuse(const GaussianField& scene, const GaussianField& human, int frame_index) {
  const int degree = std::max(scene.sh_degree(), human.sh_degree());
  const GaussianField s = pad_sh(scene, degree);
  const GaussianField h = pad_sh(human, degree);
  std::vector<GaussianPrimitive> all;
  all.reserve(s.size() + h.size());
  all.insert(all.end(), s.begin(), s.end());
  all.insert(all.end(), h.begin(), h.end());

  FusedFrame out;
  out.frame_index = frame_index;
  out.provenance.assign(s.size(), Provenance::scene);
  out.provenance.insert(out.provenance.end(), h.size(), Provenance::human);
  out.field = GaussianField(std::move(all), degree);
  return out;
}

FusedFrame append(const FusedFrame& frame, const GaussianField& extra, Provenance tag) {
  const int degree = std::max(frame.field.sh_degree(), extra.sh_degree());
  const GaussianField base = pad_sh(frame.field, degree);
  const GaussianField add = pad_sh(extra, degree);
  std::vector<GaussianPrimitive> all(base.begin(), base.end());
  all.insert(all.end(), add.begin(), add.end());

  FusedFrame out;
  out.frame_index = frame.frame_index;
  out.provenance = frame.provenance;
  out.provenance.insert(out.provenance.end(), add.size(), tag);
  out.field = GaussianField(std::move(all), degree);
  return out;
}

GaussianField strip(const FusedFrame& frame, Provenance tag) {
  std::vector<GaussianPrimitive> kept;
  kept.reserve(frame.field.size());
  for (std::size_t i = 0; i < frame.field.size(); ++i)
    if (frame.provenance[i] != tag) kept.push_back(frame.field[i]);
  return GaussianField(std::move(kept), frame.field.sh_degree());
}

FusedFrame compose_frame(const GaussianField& scene, std::span<const GaussianField> human_frames,
                         const PlacementSolution& placement, int output_frame) {
  if (human_frames.empty()) throw ValidationError("compositor: human sequence has no frames");
  if (placement.anchor_points.size() != human_frames.size() ||
      placement.roots.size() != human_frames.size())
    throw ValidationError("compositor: placement does not match the human sequence length");
  const std::size_t t = static_cast<std::size_t>(output_frame) % human_frames.size();
  const GaussianField placed = transform_human(human_frames[t], placement.scale,
                                               placement.anchor_points[t], placement.roots[t]);
  return fuse(scene, placed, output_frame);
}

}  // namespace stagehand
