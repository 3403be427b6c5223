#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stagehand/core.hpp"
#include "stagehand/holefill.hpp"
#include "stagehand/placement.hpp"

namespace stagehand {

// Binary little-endian PLY with the usual splatting vertex layout: x, y, z, f_dc_0..2,
// optional f_rest_*, opacity (logit), scale_0..2 (log), rot_0..3 (w, x, y, z, unnormalized).
// Normals and unknown properties are ignored.
GaussianField load_ply(const std::filesystem::path& path);
GaussianField parse_ply(std::span<const char> bytes);
void write_ply(const GaussianField& field, const std::filesystem::path& path);

// Single-channel PFM ("Pf"), rows stored bottom to top. Non-positive depths load as invalid;
// invalid depths are written as 0.
DepthMap load_depth(const std::filesystem::path& path);
DepthMap parse_pfm(std::span<const char> bytes);
void write_depth(const DepthMap& depth, const std::filesystem::path& path);

// JSON: {"intrinsics": {fx, fy, cx, cy, width, height}, "poses": [[16 row-major numbers], ...]}.
Trajectory load_trajectory(const std::filesystem::path& path);
Trajectory parse_trajectory(const std::string& text);
std::string format_trajectory(const Trajectory& trajectory);
void write_trajectory(const Trajectory& trajectory, const std::filesystem::path& path);

PlacementSolution load_placement(const std::filesystem::path& path);
PlacementSolution parse_placement(const std::string& text);
std::string format_placement(const PlacementSolution& placement);
void write_placement(const PlacementSolution& placement, const std::filesystem::path& path);

// 8-bit PNG per frame as <prefix>_0000.png, ...; colors clamped to [0, 1] and rounded.
std::vector<std::filesystem::path> write_frames(std::span<const ImageBuffer> frames,
                                                const std::filesystem::path& dir,
                                                const std::string& prefix = "frame");
void write_mask(const HoleMask& mask, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
std::vector<char> read_binary_file(const std::filesystem::path& path);

}  // namespace stagehand
