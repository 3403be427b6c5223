#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "stagehand/core.hpp"

namespace stagehand {

enum class TrajectoryKind { static_view, dolly_in, dolly_out, pan_orbit, truck, spiral };

std::string_view to_string(TrajectoryKind kind);
std::optional<TrajectoryKind> parse_trajectory_kind(std::string_view name);

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::static_view;
  int frames = 1;
  // World units for dolly and truck, total degrees for pan_orbit and spiral.
  double magnitude = 0.0;
  Vec3 look_at = Vec3(0.0, 0.0, 1.0);
  CameraPose base;
  CameraIntrinsics intrinsics;
  // Spiral only: total displacement along `up`, world units.
  double rise = 0.5;
  Vec3 up = Vec3(0.0, -1.0, 0.0);

  void validate() const;
};

// Camera-to-world rotation whose +z axis points along `forward` with y as close to −up as possible.
Mat3 look_rotation(const Vec3& forward, const Vec3& up);

// Frame 0 is the base pose; motion parameters grow linearly to `magnitude` at the last frame.
// Orbiting kinds rotate about the `up` axis through look_at and re-aim every later pose at it.
Trajectory generate(const TrajectorySpec& spec);

}  // namespace stagehand
