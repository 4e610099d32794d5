#include "vantage/geomcore.hpp"

#include <algorithm>
#include <cmath>

#include "vantage/errors.hpp"

namespace vantage {

namespace {

// Below this angle the closed forms lose precision and Taylor series are used.
constexpr double kSmallAngle = 1e-4;
constexpr double kNearPi = 1e-6;

Vec3 vee(const Mat3& s) { return Vec3(s(2, 1), s(0, 2), s(1, 0)); }

}  // namespace

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  // clang-format off
  s <<     0.0, -v.z(),  v.y(),
         v.z(),    0.0, -v.x(),
        -v.y(),  v.x(),    0.0;
  // clang-format on
  return s;
}

Mat3 rotation_exp(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a, b;
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Mat3 w = skew(omega);
  return Mat3::Identity() + a * w + b * w * w;
}

double rotation_angle(const Mat3& r) {
  const double s = 0.5 * vee(r - r.transpose()).norm();
  const double c = 0.5 * (r.trace() - 1.0);
  return std::atan2(s, c);
}

Vec3 rotation_log(const Mat3& r) {
  const double theta = rotation_angle(r);
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    return 0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) *
           vee(r - r.transpose());
  }
  if (kPi - theta > 1e-3) {
    return theta / (2.0 * std::sin(theta)) * vee(r - r.transpose());
  }
  // Near pi the antisymmetric part vanishes; recover the axis from the
  // symmetric part B = (R + I) / 2 ~ a a^T and fix its sign with vee().
  const Mat3 b = 0.5 * (r + Mat3::Identity());
  int k = 0;
  b.diagonal().maxCoeff(&k);
  Vec3 axis = b.col(k) / std::sqrt(std::max(b(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(vee(r - r.transpose())) < 0.0) axis = -axis;
  return theta * axis;
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!is_rotation(rotation_, 1e-9))
    throw InvalidArgument("RigidTransform: matrix is not a proper rotation");
  if (!translation_.allFinite())
    throw InvalidArgument("RigidTransform: non-finite translation");
}

RigidTransform RigidTransform::from_matrix(const Mat4& m) {
  if (std::abs(m(3, 0)) > 1e-9 || std::abs(m(3, 1)) > 1e-9 ||
      std::abs(m(3, 2)) > 1e-9 || std::abs(m(3, 3) - 1.0) > 1e-9)
    throw InvalidArgument("RigidTransform: last row must be (0, 0, 0, 1)");
  return RigidTransform(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  RigidTransform out;
  out.rotation_ = rotation_ * rhs.rotation_;
  out.translation_ = rotation_ * rhs.translation_ + translation_;
  return out;
}

SimilarityTransform::SimilarityTransform(double scale, const Mat3& rotation,
                                         const Vec3& translation)
    : scale_(scale), rotation_(rotation), translation_(translation) {
  if (!(scale_ > 0.0) || !std::isfinite(scale_))
    throw InvalidArgument("SimilarityTransform: scale must be positive");
  if (!is_rotation(rotation_, 1e-9))
    throw InvalidArgument("SimilarityTransform: matrix is not a proper rotation");
  if (!translation_.allFinite())
    throw InvalidArgument("SimilarityTransform: non-finite translation");
}

SimilarityTransform SimilarityTransform::inverse() const {
  const Mat3 rt = rotation_.transpose();
  return SimilarityTransform(1.0 / scale_, rt, -(rt * translation_) / scale_);
}

SimilarityTransform SimilarityTransform::operator*(
    const SimilarityTransform& rhs) const {
  return SimilarityTransform(
      scale_ * rhs.scale_, rotation_ * rhs.rotation_,
      scale_ * (rotation_ * rhs.translation_) + translation_);
}

Mat4 SimilarityTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = scale_ * rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

ModelViewMatrix::ModelViewMatrix(const Mat4& m) : m_(m) {
  if (!is_rotation(m.topLeftCorner<3, 3>(), 1e-9) || !m.allFinite() ||
      m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0)
    throw InvalidArgument("ModelViewMatrix: matrix is not rigid");
}

ModelViewMatrix ModelViewMatrix::inverse() const {
  ModelViewMatrix out;
  const Mat3 rt = m_.topLeftCorner<3, 3>().transpose();
  out.m_.topLeftCorner<3, 3>() = rt;
  out.m_.topRightCorner<3, 1>() = -(rt * m_.topRightCorner<3, 1>());
  return out;
}

ModelViewMatrix ModelViewMatrix::operator*(const ModelViewMatrix& rhs) const {
  ModelViewMatrix out;
  out.m_ = m_ * rhs.m_;
  out.m_.row(3) << 0.0, 0.0, 0.0, 1.0;
  return out;
}

Intrinsics Intrinsics::from_vertical_fov(int width, int height, double vfov) {
  if (width <= 0 || height <= 0 || !(vfov > 0.0 && vfov < kPi))
    throw InvalidArgument("Intrinsics: invalid size or field of view");
  Intrinsics k;
  k.width = width;
  k.height = height;
  k.fy = 0.5 * height / std::tan(0.5 * vfov);
  k.fx = k.fy;
  k.cx = 0.5 * width;
  k.cy = 0.5 * height;
  return k;
}

Camera::Camera(const Intrinsics& intrinsics,
               const RigidTransform& world_to_camera)
    : intrinsics_(intrinsics), extrinsics_(world_to_camera) {
  if (!(intrinsics_.fx > 0.0) || !(intrinsics_.fy > 0.0))
    throw InvalidArgument("Camera: focal lengths must be positive");
  if (intrinsics_.width <= 0 || intrinsics_.height <= 0)
    throw InvalidArgument("Camera: image size must be positive");
  if (!std::isfinite(intrinsics_.cx) || !std::isfinite(intrinsics_.cy) ||
      !std::isfinite(intrinsics_.skew))
    throw InvalidArgument("Camera: non-finite principal point or skew");
}

Camera Camera::look_at(const Intrinsics& intrinsics, const Vec3& eye,
                       const Vec3& target, const Vec3& up) {
  const Vec3 view = target - eye;
  if (view.norm() <= 0.0) throw DegenerateInput("look_at: eye equals target");
  const Vec3 z = view.normalized();
  const Vec3 up_perp = up - up.dot(z) * z;
  if (up_perp.norm() < 1e-12 * std::max(1.0, up.norm()))
    throw DegenerateInput("look_at: up vector parallel to viewing axis");
  const Vec3 y = -up_perp.normalized();
  const Vec3 x = y.cross(z);
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return Camera(intrinsics, RigidTransform(r, -(r * eye)));
}

Vec2 Camera::project_camera_point(const Vec3& pc) const {
  const double inv_z = 1.0 / pc.z();
  const double x = pc.x() * inv_z;
  const double y = pc.y() * inv_z;
  return Vec2(intrinsics_.fx * x + intrinsics_.skew * y + intrinsics_.cx,
              intrinsics_.fy * y + intrinsics_.cy);
}

std::optional<Vec2> Camera::project(const Vec3& world) const {
  const Vec3 pc = to_camera(world);
  if (!(pc.z() > 0.0)) return std::nullopt;
  return project_camera_point(pc);
}

Vec3 Camera::center() const {
  return -(extrinsics_.rotation().transpose() * extrinsics_.translation());
}

Vec3 Camera::forward() const {
  return extrinsics_.rotation().row(2).transpose();
}

Vec3 Camera::up() const { return -extrinsics_.rotation().row(1).transpose(); }

Camera Camera::with_resolution(int width, int height) const {
  if (width <= 0 || height <= 0)
    throw InvalidArgument("Camera: image size must be positive");
  Intrinsics k = intrinsics_;
  const double sx = static_cast<double>(width) / intrinsics_.width;
  const double sy = static_cast<double>(height) / intrinsics_.height;
  k.fx *= sx;
  k.skew *= sx;
  k.cx *= sx;
  k.fy *= sy;
  k.cy *= sy;
  k.width = width;
  k.height = height;
  return Camera(k, extrinsics_);
}

Camera Camera::with_extrinsics(const RigidTransform& world_to_camera) const {
  return Camera(intrinsics_, world_to_camera);
}

Mat4 se3_log(const ModelViewMatrix& mv) {
  const Mat4& m = mv.matrix();
  const Mat3 r = m.topLeftCorner<3, 3>();
  const Vec3 t = m.topRightCorner<3, 1>();
  const double theta = rotation_angle(r);
  if (theta > kPi - kNearPi)
    throw DegenerateLogarithm(
        "se3_log: rotation angle within 1e-6 of pi, principal log not unique");

  const double t2 = theta * theta;
  double half_factor;  // theta / (2 sin theta)
  double v_coef;       // (1/theta^2) (1 - theta sin theta / (2 (1 - cos theta)))
  if (theta < kSmallAngle) {
    half_factor = 0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
    v_coef = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    half_factor = theta / (2.0 * std::sin(theta));
    v_coef = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) /
             t2;
  }
  const Mat3 omega = half_factor * (r - r.transpose());
  const Mat3 v_inv = Mat3::Identity() - 0.5 * omega + v_coef * omega * omega;

  Mat4 xi = Mat4::Zero();
  xi.topLeftCorner<3, 3>() = omega;
  xi.topRightCorner<3, 1>() = v_inv * t;
  return xi;
}

Mat4 se3_exp(const Mat4& xi) {
  const Vec3 w = vee(xi.topLeftCorner<3, 3>());
  const Vec3 u = xi.topRightCorner<3, 1>();
  const double t2 = w.squaredNorm();
  const double theta = std::sqrt(t2);
  double b, c;
  if (theta < kSmallAngle) {
    b = 0.5 - t2 / 24.0;
    c = 1.0 / 6.0 - t2 / 120.0;
  } else {
    b = (1.0 - std::cos(theta)) / t2;
    c = (theta - std::sin(theta)) / (t2 * theta);
  }
  const Mat3 wh = skew(w);
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_exp(w);
  m.topRightCorner<3, 1>() = (Mat3::Identity() + b * wh + c * wh * wh) * u;
  return m;
}

double viewpoint_distance(const ModelViewMatrix& mi, const ModelViewMatrix& mj) {
  return se3_log(mi.inverse() * mj).norm();
}

std::pair<Vec3, Vec3> horizontal_basis(const Vec3& up) {
  if (!(up.norm() > 0.0)) throw DegenerateInput("up axis must be nonzero");
  const Vec3 u = up.normalized();
  int k = 0;
  u.cwiseAbs().minCoeff(&k);
  Vec3 e1 = Vec3::Unit(k);
  e1 = (e1 - e1.dot(u) * u).normalized();
  const Vec3 e2 = u.cross(e1);
  return {e1, e2};
}

SphericalCoord to_spherical(const Vec3& camera_position,
                            const Vec3& model_center, const Vec3& up_axis) {
  const Vec3 off = camera_position - model_center;
  const double r = off.norm();
  if (!(r > 0.0))
    throw DegenerateInput("to_spherical: camera position equals model center");
  const auto [e1, e2] = horizontal_basis(up_axis);
  const Vec3 u = up_axis.normalized();
  SphericalCoord s;
  s.r = r;
  s.phi = std::asin(std::clamp(off.dot(u) / r, -1.0, 1.0));
  double theta = std::atan2(off.dot(e2), off.dot(e1));
  if (theta < 0.0) theta += 2.0 * kPi;
  if (theta >= 2.0 * kPi) theta -= 2.0 * kPi;
  s.theta = theta;
  return s;
}

Vec3 from_spherical(const SphericalCoord& s, const Vec3& model_center,
                    const Vec3& up_axis) {
  const auto [e1, e2] = horizontal_basis(up_axis);
  const Vec3 u = up_axis.normalized();
  const double c = std::cos(s.phi);
  return model_center +
         s.r * (c * std::cos(s.theta) * e1 + c * std::sin(s.theta) * e2 +
                std::sin(s.phi) * u);
}

}  // namespace vantage
