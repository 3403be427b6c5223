#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "stagehand/core.hpp"

namespace stagehand {

using VoxelIndex = std::array<int, 3>;

// Axis-aligned voxel lattice. Voxel (i, j, k) spans [origin + (i, j, k)·cell, origin + (i+1, j+1, k+1)·cell).
struct GridLayout {
  Vec3 origin = Vec3::Zero();
  double cell_size = 1.0;
  VoxelIndex dims = {1, 1, 1};

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t linear(const VoxelIndex& v) const {
    return (static_cast<std::size_t>(v[0]) * dims[1] + v[1]) * dims[2] + v[2];
  }
  Vec3 voxel_center(const VoxelIndex& v) const {
    return {origin.x() + (v[0] + 0.5) * cell_size, origin.y() + (v[1] + 0.5) * cell_size,
            origin.z() + (v[2] + 0.5) * cell_size};
  }
  // Floor indexing; empty when q lies outside the lattice.
  std::optional<VoxelIndex> voxel_of(const Vec3& q) const;
};

inline constexpr double kDefaultDensityThreshold = 0.1;
inline constexpr std::size_t kDefaultMaxVoxels = std::size_t{1} << 25;
// Gaussian terms smaller than this are dropped when accumulating density.
inline constexpr double kDensityTruncation = 1e-16;

// Binary indicator of high-density space: occupied iff the opacity-weighted Gaussian density at
// the voxel center reaches the threshold. Immutable once built.
class OccupancyGrid {
 public:
  OccupancyGrid(GridLayout layout, std::vector<std::uint8_t> occupied, double threshold);

  const GridLayout& layout() const { return layout_; }
  const Vec3& origin() const { return layout_.origin; }
  double cell_size() const { return layout_.cell_size; }
  const VoxelIndex& dims() const { return layout_.dims; }
  double threshold() const { return threshold_; }

  bool occupied(const VoxelIndex& v) const { return occupied_[layout_.linear(v)] != 0; }
  Vec3 voxel_center(const VoxelIndex& v) const { return layout_.voxel_center(v); }
  std::size_t free_count() const { return free_count_; }
  std::size_t occupied_count() const { return layout_.voxel_count() - free_count_; }

 private:
  GridLayout layout_;
  std::vector<std::uint8_t> occupied_;
  double threshold_;
  std::size_t free_count_ = 0;
};

// Lattice covering every primitive's 3σ axis extent plus `padding` on each side.
GridLayout layout_for(const GaussianField& field, double cell_size, double padding);

// Σᵢ αᵢ exp(−½ (q − xᵢ)ᵀ Σᵢ⁻¹ (q − xᵢ)) at every voxel center of `layout`, indexed by
// GridLayout::linear. Terms below kDensityTruncation are omitted.
std::vector<double> accumulate_density(const GaussianField& field, const GridLayout& layout);

// Throws ResourceError when the lattice would exceed `max_voxels`.
OccupancyGrid build_grid(const GaussianField& field, double cell_size, double padding,
                         double threshold = kDefaultDensityThreshold,
                         std::size_t max_voxels = kDefaultMaxVoxels);

// Points outside the lattice are free.
bool is_occupied(const OccupancyGrid& grid, const Vec3& q);

// Returns p when it is free, otherwise the closest free voxel center (ties go to the
// lexicographically smallest voxel index). Throws NoFreeSpaceError on a fully occupied grid.
Vec3 nearest_free(const OccupancyGrid& grid, const Vec3& p);

// One "x y z" line per occupied voxel center.
void write_occupied_points(const OccupancyGrid& grid, std::ostream& out);

}  // namespace stagehand
