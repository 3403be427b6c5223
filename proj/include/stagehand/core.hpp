#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "stagehand/errors.hpp"

namespace stagehand {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;

// Zeroth-order real spherical harmonic, Y_0^0.
inline constexpr double kSHC0 = 0.28209479177387814;

// Number of SH coefficients per color channel for a given degree.
constexpr int sh_coefficients_per_channel(int degree) { return (degree + 1) * (degree + 1); }

// Appearance layout follows the splatting PLY convention: the three DC terms (r, g, b) first,
// then the higher-order terms channel-major (all red, all green, all blue).
constexpr int appearance_size(int degree) { return 3 * sh_coefficients_per_channel(degree); }

// One anisotropic Gaussian splat. Rotation is a unit quaternion; Eigen's constructor takes w, x, y, z.
struct GaussianPrimitive {
  Vec3 center = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
  Quat rotation = Quat::Identity();
  double opacity = 1.0;
  std::vector<double> appearance = std::vector<double>(3, 0.0);
};

// DC coefficient that decodes to `rgb` under the 0.5-offset convention.
Vec3 rgb_to_sh_dc(const Vec3& rgb);

// Convenience constructor for a degree-0 primitive with a linear color.
GaussianPrimitive make_primitive(const Vec3& center, const Vec3& scale, const Quat& rotation,
                                 double opacity, const Vec3& rgb);

// Throws ValidationError when scale, opacity, rotation or appearance length are out of contract.
void validate_primitive(const GaussianPrimitive& p, int sh_degree);

// Σ = R diag(s²) Rᵀ.
Mat3 covariance_of(const GaussianPrimitive& p);

// Σ⁻¹ = R diag(1/s²) Rᵀ, evaluated without a general inverse.
Mat3 inverse_covariance_of(const GaussianPrimitive& p);

// View-dependent color of a primitive. `view_dir` points from the camera to the splat and
// need not be normalized. Evaluates all bands present, result clamped to [0, 1].
Vec3 evaluate_color(std::span<const double> appearance, int sh_degree, const Vec3& view_dir);

bool operator==(const GaussianPrimitive& a, const GaussianPrimitive& b);

// Immutable ordered collection of primitives sharing one SH degree. Construction normalizes
// every rotation and validates every primitive.
class GaussianField {
 public:
  GaussianField() = default;
  explicit GaussianField(std::vector<GaussianPrimitive> primitives, int sh_degree = 0);

  int sh_degree() const { return sh_degree_; }
  std::size_t size() const { return primitives_.size(); }
  bool empty() const { return primitives_.empty(); }
  const GaussianPrimitive& operator[](std::size_t i) const { return primitives_[i]; }
  std::span<const GaussianPrimitive> primitives() const { return primitives_; }
  auto begin() const { return primitives_.begin(); }
  auto end() const { return primitives_.end(); }

  friend bool operator==(const GaussianField& a, const GaussianField& b) {
    return a.sh_degree_ == b.sh_degree_ && a.primitives_ == b.primitives_;
  }

 private:
  std::vector<GaussianPrimitive> primitives_;
  int sh_degree_ = 0;
};

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  Mat3 matrix() const;
  void validate() const;
  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

// Rigid camera-to-world transform. The camera looks down +z, x right, y down.
class CameraPose {
 public:
  CameraPose() : camera_to_world_(Mat4::Identity()) {}
  explicit CameraPose(const Mat4& camera_to_world);
  static CameraPose from_rotation_translation(const Mat3& rotation, const Vec3& translation);

  const Mat4& camera_to_world() const { return camera_to_world_; }
  Mat3 rotation() const { return camera_to_world_.topLeftCorner<3, 3>(); }
  Vec3 position() const { return camera_to_world_.topRightCorner<3, 1>(); }
  // Camera +z axis in world coordinates.
  Vec3 forward() const { return camera_to_world_.block<3, 1>(0, 2); }

  Vec3 to_world(const Vec3& camera_point) const;
  Vec3 to_camera(const Vec3& world_point) const;

  friend bool operator==(const CameraPose& a, const CameraPose& b) {
    return a.camera_to_world_ == b.camera_to_world_;
  }

 private:
  Mat4 camera_to_world_;
};

// Validation used by CameraPose; returns an empty string if `m` is a proper rigid transform.
std::string rigid_transform_problem(const Mat4& m, double tolerance = 1e-6);

struct Camera {
  CameraIntrinsics intrinsics;
  CameraPose pose;
  friend bool operator==(const Camera&, const Camera&) = default;
};

class Trajectory {
 public:
  explicit Trajectory(std::vector<Camera> cameras);
  std::size_t size() const { return cameras_.size(); }
  const Camera& operator[](std::size_t i) const { return cameras_[i]; }
  std::span<const Camera> cameras() const { return cameras_; }
  auto begin() const { return cameras_.begin(); }
  auto end() const { return cameras_.end(); }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::vector<Camera> cameras_;
};

// Per-pixel depth, row-major. Invalid pixels hold NaN, which no valid depth can equal.
class DepthMap {
 public:
  static constexpr double kInvalid = std::numeric_limits<double>::quiet_NaN();

  DepthMap() = default;
  DepthMap(int width, int height);
  DepthMap(int width, int height, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int u, int v) const { return values_[index(u, v)]; }
  bool valid(int u, int v) const;
  void set(int u, int v, double depth);
  void invalidate(int u, int v) { values_[index(u, v)] = kInvalid; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(u);
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

// Axis-aligned box in pixels; (x, y) is the top-left corner.
struct BBox2D {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  void validate(int image_width, int image_height) const;
  friend bool operator==(const BBox2D&, const BBox2D&) = default;
};

// Pixel coordinates along the bottom edge of a placement box.
struct BaselineSampleSet {
  std::vector<Vec2> samples;
};

// Rendered frame: interleaved RGB, alpha and composited expected depth, row-major.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<float> color;
  std::vector<float> alpha;
  std::vector<float> depth;

  ImageBuffer() = default;
  ImageBuffer(int w, int h);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
  Eigen::Vector3f rgb(int u, int v) const {
    const std::size_t i = 3 * index(u, v);
    return {color[i], color[i + 1], color[i + 2]};
  }
  void set_rgb(int u, int v, const Eigen::Vector3f& c) {
    const std::size_t i = 3 * index(u, v);
    color[i] = c.x();
    color[i + 1] = c.y();
    color[i + 2] = c.z();
  }
  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // camera-space z
};

// Forward pinhole projection. Empty when the point is not strictly in front of the camera.
std::optional<PixelProjection> project_point(const CameraIntrinsics& K, const CameraPose& pose,
                                             const Vec3& world_point);

// depth · K⁻¹ · (u, v, 1) in camera space.
Vec3 backproject_to_camera(const CameraIntrinsics& K, double u, double v, double depth);

// Camera-space back-projection followed by the camera-to-world transform.
Vec3 backproject(const CameraIntrinsics& K, const CameraPose& pose, double u, double v,
                 double depth);

}  // namespace stagehand
