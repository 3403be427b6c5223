#include "stagehand/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stagehand {

namespace {

constexpr double kSHC1 = 0.4886025119029199;
constexpr double kSHC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                            -1.0925484305920792, 0.5462742152960396};
constexpr double kSHC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                            0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                            -0.5900435899266435};

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

Vec3 rgb_to_sh_dc(const Vec3& rgb) { return (rgb.array() - 0.5) / kSHC0; }

GaussianPrimitive make_primitive(const Vec3& center, const Vec3& scale, const Quat& rotation,
                                 double opacity, const Vec3& rgb) {
  GaussianPrimitive p;
  p.center = center;
  p.scale = scale;
  p.rotation = rotation.normalized();
  p.opacity = opacity;
  const Vec3 dc = rgb_to_sh_dc(rgb);
  p.appearance = {dc.x(), dc.y(), dc.z()};
  return p;
}

void validate_primitive(const GaussianPrimitive& p, int sh_degree) {
  if (!finite(p.center)) throw ValidationError("primitive center is not finite");
  if (!finite(p.scale) || !(p.scale.array() > 0.0).all())
    throw ValidationError("primitive scale must be finite and strictly positive");
  if (!std::isfinite(p.opacity) || p.opacity < 0.0 || p.opacity > 1.0)
    throw ValidationError("primitive opacity must lie in [0, 1]");
  if (!p.rotation.coeffs().allFinite() || std::abs(p.rotation.norm() - 1.0) > 1e-6)
    throw ValidationError("primitive rotation must be a unit quaternion");
  if (static_cast<int>(p.appearance.size()) != appearance_size(sh_degree)) {
    std::ostringstream os;
    os << "primitive appearance has " << p.appearance.size() << " coefficients, expected "
       << appearance_size(sh_degree) << " for SH degree " << sh_degree;
    throw ValidationError(os.str());
  }
  for (double c : p.appearance)
    if (!std::isfinite(c)) throw ValidationError("primitive appearance is not finite");
}

Mat3 covariance_of(const GaussianPrimitive& p) {
  const Mat3 R = p.rotation.toRotationMatrix();
  const Vec3 s2 = p.scale.cwiseProduct(p.scale);
  Mat3 sigma = R * s2.asDiagonal() * R.transpose();
  // Symmetrize explicitly so the result equals its transpose bit for bit.
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) sigma(j, i) = sigma(i, j);
  return sigma;
}

Mat3 inverse_covariance_of(const GaussianPrimitive& p) {
  const Mat3 R = p.rotation.toRotationMatrix();
  const Vec3 inv_s2 = p.scale.cwiseProduct(p.scale).cwiseInverse();
  Mat3 inv = R * inv_s2.asDiagonal() * R.transpose();
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) inv(j, i) = inv(i, j);
  return inv;
}

Vec3 evaluate_color(std::span<const double> a, int sh_degree, const Vec3& view_dir) {
  Vec3 rgb(kSHC0 * a[0], kSHC0 * a[1], kSHC0 * a[2]);
  if (sh_degree > 0) {
    const int rest = sh_coefficients_per_channel(sh_degree) - 1;
    const double n = view_dir.norm();
    const Vec3 d = n > 0.0 ? Vec3(view_dir / n) : Vec3(0.0, 0.0, 1.0);
    const double x = d.x(), y = d.y(), z = d.z();
    auto coef = [&](int channel, int k) { return a[3 + channel * rest + (k - 1)]; };
    for (int c = 0; c < 3; ++c) {
      double v = kSHC1 * (-y * coef(c, 1) + z * coef(c, 2) - x * coef(c, 3));
      if (sh_degree > 1) {
        const double xx = x * x, yy = y * y, zz = z * z;
        const double xy = x * y, yz = y * z, xz = x * z;
        v += kSHC2[0] * xy * coef(c, 4) + kSHC2[1] * yz * coef(c, 5) +
             kSHC2[2] * (2.0 * zz - xx - yy) * coef(c, 6) + kSHC2[3] * xz * coef(c, 7) +
             kSHC2[4] * (xx - yy) * coef(c, 8);
        if (sh_degree > 2) {
          v += kSHC3[0] * y * (3.0 * xx - yy) * coef(c, 9) + kSHC3[1] * xy * z * coef(c, 10) +
               kSHC3[2] * y * (4.0 * zz - xx - yy) * coef(c, 11) +
               kSHC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy) * coef(c, 12) +
               kSHC3[4] * x * (4.0 * zz - xx - yy) * coef(c, 13) +
               kSHC3[5] * z * (xx - yy) * coef(c, 14) + kSHC3[6] * x * (xx - 3.0 * yy) * coef(c, 15);
        }
      }
      rgb[c] += v;
    }
  }
  for (int c = 0; c < 3; ++c) rgb[c] = std::clamp(rgb[c] + 0.5, 0.0, 1.0);
  return rgb;
}

bool operator==(const GaussianPrimitive& a, const GaussianPrimitive& b) {
  return a.center == b.center && a.scale == b.scale && a.rotation.coeffs() == b.rotation.coeffs() &&
         a.opacity == b.opacity && a.appearance == b.appearance;
}

GaussianField::GaussianField(std::vector<GaussianPrimitive> primitives, int sh_degree)
    : primitives_(std::move(primitives)), sh_degree_(sh_degree) {
  if (sh_degree < 0 || sh_degree > 3) throw ValidationError("SH degree must be in [0, 3]");
  for (std::size_t i = 0; i < primitives_.size(); ++i) {
    auto& p = primitives_[i];
    const double n = p.rotation.norm();
    if (!(n > 0.0) || !std::isfinite(n))
      throw ValidationError("primitive " + std::to_string(i) + ": degenerate rotation quaternion");
    // Already-unit quaternions are left untouched so rebuilding a field is exact.
    if (std::abs(n - 1.0) > 1e-12) p.rotation.coeffs() /= n;
    try {
      validate_primitive(p, sh_degree);
    } catch (const ValidationError& e) {
      throw ValidationError("primitive " + std::to_string(i) + ": " + e.what());
    }
  }
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 K;
  K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return K;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
    throw ValidationError("intrinsics: focal lengths must be finite and positive");
  if (!std::isfinite(cx) || !std::isfinite(cy))
    throw ValidationError("intrinsics: principal point must be finite");
  if (width < 1 || height < 1) throw ValidationError("intrinsics: image size must be at least 1x1");
}

std::string rigid_transform_problem(const Mat4& m, double tolerance) {
  if (!m.allFinite()) return "matrix has non-finite entries";
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0)
    return "last row must be [0, 0, 0, 1]";
  const Mat3 R = m.topLeftCorner<3, 3>();
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > tolerance)
    return "rotation block is not orthonormal";
  if (std::abs(R.determinant() - 1.0) > tolerance) return "rotation block has determinant != +1";
  return {};
}

CameraPose::CameraPose(const Mat4& camera_to_world) : camera_to_world_(camera_to_world) {
  if (auto problem = rigid_transform_problem(camera_to_world); !problem.empty())
    throw ValidationError("camera pose: " + problem);
}

CameraPose CameraPose::from_rotation_translation(const Mat3& rotation, const Vec3& translation) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return CameraPose(m);
}

Vec3 CameraPose::to_world(const Vec3& camera_point) const {
  return camera_to_world_.topLeftCorner<3, 3>() * camera_point + camera_to_world_.topRightCorner<3, 1>();
}

Vec3 CameraPose::to_camera(const Vec3& world_point) const {
  return camera_to_world_.topLeftCorner<3, 3>().transpose() *
         (world_point - camera_to_world_.topRightCorner<3, 1>());
}

Trajectory::Trajectory(std::vector<Camera> cameras) : cameras_(std::move(cameras)) {
  if (cameras_.empty()) throw ValidationError("trajectory must contain at least one camera");
  for (const auto& c : cameras_) c.intrinsics.validate();
}

DepthMap::DepthMap(int width, int height)
    : width_(width), height_(height),
      values_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), kInvalid) {
  if (width < 1 || height < 1) throw ValidationError("depth map must be at least 1x1");
}

DepthMap::DepthMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width < 1 || height < 1) throw ValidationError("depth map must be at least 1x1");
  if (values_.size() != static_cast<std::size_t>(width) * height)
    throw ValidationError("depth map value count does not match its dimensions");
  for (double& d : values_)
    if (!(std::isfinite(d) && d > 0.0)) d = kInvalid;
}

bool DepthMap::valid(int u, int v) const {
  if (u < 0 || v < 0 || u >= width_ || v >= height_) return false;
  const double d = values_[index(u, v)];
  return std::isfinite(d) && d > 0.0;
}

void DepthMap::set(int u, int v, double depth) {
  values_[index(u, v)] = (std::isfinite(depth) && depth > 0.0) ? depth : kInvalid;
}

void BBox2D::validate(int image_width, int image_height) const {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h))
    throw ValidationError("bbox: coordinates must be finite");
  if (!(w > 0.0) || !(h > 0.0)) throw ValidationError("bbox: width and height must be positive");
  if (x + w < 0.0 || y + h < 0.0 || x > image_width - 1 || y > image_height - 1)
    throw ValidationError("bbox: box does not intersect the image");
}

ImageBuffer::ImageBuffer(int w, int h)
    : width(w), height(h),
      color(3 * static_cast<std::size_t>(w) * h, 0.0f),
      alpha(static_cast<std::size_t>(w) * h, 0.0f),
      depth(static_cast<std::size_t>(w) * h, 0.0f) {}

std::optional<PixelProjection> project_point(const CameraIntrinsics& K, const CameraPose& pose,
                                             const Vec3& world_point) {
  const Vec3 c = pose.to_camera(world_point);
  if (!(c.z() > 0.0)) return std::nullopt;
  return PixelProjection{K.fx * c.x() / c.z() + K.cx, K.fy * c.y() / c.z() + K.cy, c.z()};
}

Vec3 backproject_to_camera(const CameraIntrinsics& K, double u, double v, double depth) {
  return {depth * (u - K.cx) / K.fx, depth * (v - K.cy) / K.fy, depth};
}

Vec3 backproject(const CameraIntrinsics& K, const CameraPose& pose, double u, double v,
                 double depth) {
  return pose.to_world(backproject_to_camera(K, u, v, depth));
}

}  // namespace stagehand
