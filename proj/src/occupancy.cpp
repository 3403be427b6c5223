#include "stagehand/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <tuple>

namespace stagehand {

std::optional<VoxelIndex> GridLayout::voxel_of(const Vec3& q) const {
  VoxelIndex v;
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor((q[a] - origin[a]) / cell_size);
    if (!(f >= 0.0) || f >= dims[a]) return std::nullopt;
    v[a] = static_cast<int>(f);
  }
  return v;
}

OccupancyGrid::OccupancyGrid(GridLayout layout, std::vector<std::uint8_t> occupied, double threshold)
    : layout_(std::move(layout)), occupied_(std::move(occupied)), threshold_(threshold) {
  if (!(layout_.cell_size > 0.0)) throw ValidationError("occupancy: cell size must be positive");
  if (layout_.dims[0] < 1 || layout_.dims[1] < 1 || layout_.dims[2] < 1)
    throw ValidationError("occupancy: grid dimensions must be positive");
  if (occupied_.size() != layout_.voxel_count())
    throw ValidationError("occupancy: flag count does not match grid dimensions");
  free_count_ = static_cast<std::size_t>(std::count(occupied_.begin(), occupied_.end(), 0));
}

GridLayout layout_for(const GaussianField& field, double cell_size, double padding) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size))
    throw ValidationError("occupancy: cell size must be positive");
  if (!(padding >= 0.0) || !std::isfinite(padding))
    throw ValidationError("occupancy: padding must be non-negative");

  Vec3 lo = Vec3::Zero(), hi = Vec3::Zero();
  if (!field.empty()) {
    lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    hi = -lo;
    for (const auto& p : field) {
      const Vec3 extent = 3.0 * covariance_of(p).diagonal().cwiseSqrt();
      lo = lo.cwiseMin(p.center - extent);
      hi = hi.cwiseMax(p.center + extent);
    }
  }
  lo.array() -= padding;
  hi.array() += padding;

  GridLayout layout;
  layout.origin = lo;
  layout.cell_size = cell_size;
  for (int a = 0; a < 3; ++a) {
    const double cells = std::max(1.0, std::ceil((hi[a] - lo[a]) / cell_size));
    if (cells > static_cast<double>(std::numeric_limits<int>::max()))
      throw ResourceError("occupancy: grid axis exceeds addressable size");
    layout.dims[a] = static_cast<int>(cells);
  }
  return layout;
}

std::vector<double> accumulate_density(const GaussianField& field, const GridLayout& layout) {
  std::vector<double> density(layout.voxel_count(), 0.0);
  const double h = layout.cell_size;
  for (const auto& p : field) {
    if (!(p.opacity > kDensityTruncation)) continue;
    const double max_m = 2.0 * std::log(p.opacity / kDensityTruncation);
    const Mat3 sigma = covariance_of(p);
    const Mat3 inv = inverse_covariance_of(p);

    VoxelIndex lo, hi;
    bool empty = false;
    for (int a = 0; a < 3; ++a) {
      const double half = std::sqrt(max_m * sigma(a, a));
      const double first = std::ceil((p.center[a] - half - layout.origin[a]) / h - 0.5);
      const double last = std::floor((p.center[a] + half - layout.origin[a]) / h - 0.5);
      lo[a] = static_cast<int>(std::max(0.0, first));
      hi[a] = static_cast<int>(std::min<double>(layout.dims[a] - 1, last));
      if (lo[a] > hi[a]) empty = true;
    }
    if (empty) continue;

    for (int i = lo[0]; i <= hi[0]; ++i)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int k = lo[2]; k <= hi[2]; ++k) {
          const VoxelIndex v{i, j, k};
          const Vec3 d = layout.voxel_center(v) - p.center;
          const double m = d.dot(inv * d);
          if (m > max_m) continue;
          density[layout.linear(v)] += p.opacity * std::exp(-0.5 * m);
        }
  }
  return density;
}

OccupancyGrid build_grid(const GaussianField& field, double cell_size, double padding,
                         double threshold, std::size_t max_voxels) {
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    throw ValidationError("occupancy: density threshold must be positive");
  const GridLayout layout = layout_for(field, cell_size, padding);
  const double requested =
      static_cast<double>(layout.dims[0]) * layout.dims[1] * static_cast<double>(layout.dims[2]);
  if (requested > static_cast<double>(max_voxels))
    throw ResourceError("occupancy: grid of " + std::to_string(layout.dims[0]) + "x" +
                        std::to_string(layout.dims[1]) + "x" + std::to_string(layout.dims[2]) +
                        " voxels exceeds the cap of " + std::to_string(max_voxels));

  const std::vector<double> density = accumulate_density(field, layout);
  std::vector<std::uint8_t> occupied(density.size());
  std::transform(density.begin(), density.end(), occupied.begin(),
                 [threshold](double d) { return d >= threshold ? 1 : 0; });
  return OccupancyGrid(layout, std::move(occupied), threshold);
}

bool is_occupied(const OccupancyGrid& grid, const Vec3& q) {
  const auto v = grid.layout().voxel_of(q);
  return v && grid.occupied(*v);
}

Vec3 nearest_free(const OccupancyGrid& grid, const Vec3& p) {
  const auto start = grid.layout().voxel_of(p);
  if (!start || !grid.occupied(*start)) return p;
  if (grid.free_count() == 0) throw NoFreeSpaceError("occupancy: grid has no free voxel");

  const VoxelIndex& dims = grid.dims();
  const VoxelIndex& c = *start;
  int max_shell = 0;
  for (int a = 0; a < 3; ++a) max_shell = std::max({max_shell, c[a], dims[a] - 1 - c[a]});

  double best_d2 = std::numeric_limits<double>::infinity();
  VoxelIndex best{};
  auto consider = [&](const VoxelIndex& v) {
    if (grid.occupied(v)) return;
    const double d2 = (grid.voxel_center(v) - p).squaredNorm();
    if (std::tie(d2, v[0], v[1], v[2]) < std::tie(best_d2, best[0], best[1], best[2])) {
      best_d2 = d2;
      best = v;
    }
  };

  for (int k = 1; k <= max_shell; ++k) {
    // Every voxel in shell k is at least (k - 1/2) cells away from p along some axis.
    const double bound = (k - 0.5) * grid.cell_size() * (1.0 - 1e-9);
    if (bound * bound > best_d2) break;
    const int i0 = std::max(0, c[0] - k), i1 = std::min(dims[0] - 1, c[0] + k);
    const int j0 = std::max(0, c[1] - k), j1 = std::min(dims[1] - 1, c[1] + k);
    for (int i = i0; i <= i1; ++i) {
      for (int j = j0; j <= j1; ++j) {
        if (std::abs(i - c[0]) == k || std::abs(j - c[1]) == k) {
          const int k0 = std::max(0, c[2] - k), k1 = std::min(dims[2] - 1, c[2] + k);
          for (int z = k0; z <= k1; ++z) consider({i, j, z});
        } else {
          if (c[2] - k >= 0) consider({i, j, c[2] - k});
          if (c[2] + k < dims[2]) consider({i, j, c[2] + k});
        }
      }
    }
  }
  if (!std::isfinite(best_d2)) throw NoFreeSpaceError("occupancy: grid has no free voxel");
  return grid.voxel_center(best);
}

void write_occupied_points(const OccupancyGrid& grid, std::ostream& out) {
  const auto& d = grid.dims();
  for (int i = 0; i < d[0]; ++i)
    for (int j = 0; j < d[1]; ++j)
      for (int k = 0; k < d[2]; ++k)
        if (grid.occupied({i, j, k})) {
          const Vec3 c = grid.voxel_center({i, j, k});
          out << c.x() << ' ' << c.y() << ' ' << c.z() << '\n';
        }
}

}  // namespace stagehand
