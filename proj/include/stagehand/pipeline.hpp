#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stagehand/holefill.hpp"
#include "stagehand/placement.hpp"
#include "stagehand/render.hpp"
#include "stagehand/trajectory_gen.hpp"

namespace stagehand {

struct OccupancySettings {
  double cell_size = 0.05;
  double padding = 0.1;
  double threshold = kDefaultDensityThreshold;
  std::size_t max_voxels = kDefaultMaxVoxels;
};

struct PipelineConfig {
  std::filesystem::path scene_path;
  std::vector<std::filesystem::path> human_frames;
  // Empty selects heuristic_bbox.
  std::optional<BBox2D> bbox;
  // Empty synthesizes the depth map from the scene at the first trajectory camera.
  std::optional<std::filesystem::path> depth_path;
  std::variant<std::filesystem::path, TrajectorySpec> trajectory;
  PlacementConfig placement;
  OccupancySettings occupancy;
  RenderConfig render;
  PostFillConfig postfill;
  std::filesystem::path output_dir = "out";
  // Reserved; the pipeline is deterministic.
  int seed = 0;
  bool write_masks = true;
};

// Parses a JSON config. Relative paths resolve against `base_dir`; a "*" in the file name of
// "human_frames" expands to the sorted list of matches. Every referenced input must exist.
PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct MetricsReport {
  std::vector<double> hole_fraction_before;
  std::vector<double> hole_fraction_after;
  std::vector<int> collision_resolutions;
  double scale = 0.0;
  BBox2D bbox;
  // Rows with alpha > 0.5 when the placed first human frame is rendered alone from the
  // reference camera.
  int avatar_pixel_height = 0;
  // Stages in execution order.
  std::vector<StageTiming> stages;
};

std::string format_metrics(const MetricsReport& report);

struct PipelineResult {
  MetricsReport metrics;
  PlacementSolution placement;
  std::vector<ImageBuffer> frames;
};

// load → bbox → occupancy → placement → fuse → postfill → write. Errors are rethrown as
// StageError carrying the stage name and frame index.
PipelineResult run_pipeline(const PipelineConfig& cfg);

// Vertical extent, in rows, of pixels whose alpha exceeds 0.5 (0 when none do).
int alpha_row_extent(const ImageBuffer& frame, float threshold = 0.5f);

}  // namespace stagehand
