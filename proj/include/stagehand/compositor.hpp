#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stagehand/core.hpp"
#include "stagehand/placement.hpp"

namespace stagehand {

enum class Provenance : std::uint8_t { scene, human, lifted };

// Scene primitives followed by the placed human's primitives (and, after hole lifting, any
// lifted primitives), with one provenance tag per primitive.
struct FusedFrame {
  GaussianField field;
  int frame_index = 0;
  std::vector<Provenance> provenance;
};

// Similarity transform c ↦ s·(c − root) + anchor; scales multiplied by s.
GaussianField transform_human(const GaussianField& frame, double scale, const Vec3& anchor,
                              const Vec3& root);

// Exact inverse of transform_human with the same arguments.
GaussianField inverse_transform_human(const GaussianField& frame, double scale, const Vec3& anchor,
                                      const Vec3& root);

// Raises the SH degree by zero-filling the missing bands. Degree-0 color is unchanged.
GaussianField pad_sh(const GaussianField& field, int degree);

FusedFrame fuse(const GaussianField& scene, const GaussianField& human, int frame_index);

// Adds `extra` to the end of `frame`, tagging the new primitives with `tag`.
FusedFrame append(const FusedFrame& frame, const GaussianField& extra, Provenance tag);

// Drops every primitive tagged `tag`.
GaussianField strip(const FusedFrame& frame, Provenance tag);

// Fused field for output frame t: the human frame t mod F placed by `placement`.
FusedFrame compose_frame(const GaussianField& scene, std::span<const GaussianField> human_frames,
                         const PlacementSolution& placement, int output_frame);

}  // namespace stagehand
