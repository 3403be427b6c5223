#include "stagehand/trajectory_gen.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace stagehand {

namespace {

constexpr std::array<std::pair<TrajectoryKind, std::string_view>, 6> kNames = {{
    {TrajectoryKind::static_view, "static"},
    {TrajectoryKind::dolly_in, "dolly_in"},
    {TrajectoryKind::dolly_out, "dolly_out"},
    {TrajectoryKind::pan_orbit, "pan_orbit"},
    {TrajectoryKind::truck, "truck"},
    {TrajectoryKind::spiral, "spiral"},
}};

}  // namespace

std::string_view to_string(TrajectoryKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<TrajectoryKind> parse_trajectory_kind(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  return std::nullopt;
}

void TrajectorySpec::validate() const {
  if (frames < 1) throw ValidationError("trajectory spec: frames must be >= 1");
  if (!std::isfinite(magnitude)) throw ValidationError("trajectory spec: magnitude must be finite");
  if (!std::isfinite(rise)) throw ValidationError("trajectory spec: rise must be finite");
  if (!look_at.allFinite()) throw ValidationError("trajectory spec: look_at must be finite");
  if (!up.allFinite() || !(up.norm() > 0.0))
    throw ValidationError("trajectory spec: up must be finite and non-zero");
  intrinsics.validate();
}

Mat3 look_rotation(const Vec3& forward, const Vec3& up) {
  const Vec3 z = forward.normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-12) {
    // Looking straight along the up axis; any perpendicular right vector will do.
    x = z.cross(std::abs(z.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
  }
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.col(0) = x;
  R.col(1) = y;
  R.col(2) = z;
  return R;
}

Trajectory generate(const TrajectorySpec& spec) {
  spec.validate();
  std::vector<Camera> cams;
  cams.reserve(spec.frames);
  cams.push_back({spec.intrinsics, spec.base});

  const Vec3 up = spec.up.normalized();
  const Mat3 R0 = spec.base.rotation();
  const Vec3 p0 = spec.base.position();
  const double to_rad = std::numbers::pi / 180.0;

  for (int k = 1; k < spec.frames; ++k) {
    const double t = static_cast<double>(k) / (spec.frames - 1);
    Mat3 R = R0;
    Vec3 p = p0;
    switch (spec.kind) {
      case TrajectoryKind::static_view:
        break;
      case TrajectoryKind::dolly_in:
        p = p0 + (spec.magnitude * t) * R0.col(2);
        break;
      case TrajectoryKind::dolly_out:
        p = p0 - (spec.magnitude * t) * R0.col(2);
        break;
      case TrajectoryKind::truck:
        p = p0 + (spec.magnitude * t) * R0.col(0);
        break;
      case TrajectoryKind::pan_orbit:
      case TrajectoryKind::spiral: {
        const Eigen::AngleAxisd turn(spec.magnitude * t * to_rad, up);
        p = spec.look_at + turn * (p0 - spec.look_at);
        if (spec.kind == TrajectoryKind::spiral) p += (spec.rise * t) * up;
        R = look_rotation(spec.look_at - p, up);
        break;
      }
    }
    cams.push_back({spec.intrinsics, CameraPose::from_rotation_translation(R, p)});
  }
  return Trajectory(std::move(cams));
}

}  // namespace stagehand
