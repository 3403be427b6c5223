#pragma once

#include <filesystem>
#include <vector>

#include "stagehand/core.hpp"
#include "stagehand/trajectory_gen.hpp"

namespace stagehand::demo {

// Synthetic fixtures. World axes follow the camera convention: x right, y down, z forward.

// 320x240 pinhole camera shared by the demo fixtures.
CameraIntrinsics demo_intrinsics();

// Floor slab at y = 1 (x in [-5, 5], z in [1.5, 9]), a back wall at z = 9 and two box-shaped
// clusters standing on the floor.
GaussianField demo_scene();

// A 1.8-unit capsule with feet at y = 0 and a sinusoidal sway of its root, one field per frame.
std::vector<GaussianField> demo_human(int frames = 10);

// Placement box for the demo human: bottom edge on the floor around z = 4.5, 95 px tall.
BBox2D demo_bbox();

// 30° orbit about the floor point under the image center.
TrajectorySpec demo_orbit(int frames = 10);

// A textured wall at z = 4 that only covers x <= 0.8; every view of it shows empty space.
GaussianField half_plane_scene();
CameraIntrinsics half_plane_intrinsics();
TrajectorySpec half_plane_orbit(int frames = 6);

// Writes scene.ply, human/frame_XXXX.ply, trajectory.json and config.json into `dir`, plus
// half_plane/scene.ply and half_plane/trajectory.json.
void write_demo(const std::filesystem::path& dir, int frames = 10);

}  // namespace stagehand::demo
