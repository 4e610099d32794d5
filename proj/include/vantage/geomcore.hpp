// Rigid and similarity transforms, the pinhole camera, and the SE(3)
// logarithm used to compare viewpoints.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <optional>

namespace vantage {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = 3.14159265358979323846;

/// True when `r` is orthonormal with determinant +1 within `tol`.
bool is_rotation(const Mat3& r, double tol = 1e-9);

Mat3 skew(const Vec3& v);

/// Rodrigues' formula: rotation of angle |omega| about omega/|omega|.
Mat3 rotation_exp(const Vec3& omega);

/// Inverse of rotation_exp for angles strictly below pi.
Vec3 rotation_log(const Mat3& r);

/// Rotation angle in [0, pi].
double rotation_angle(const Mat3& r);

class RigidTransform {
 public:
  RigidTransform() = default;
  /// Throws InvalidArgument unless `rotation` is a proper rotation.
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform from_matrix(const Mat4& m);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Mat4 matrix() const;
  RigidTransform inverse() const;
  RigidTransform operator*(const RigidTransform& rhs) const;

 private:
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

/// p -> scale * R * p + t, mapping the mesh frame into the point-cloud frame.
class SimilarityTransform {
 public:
  SimilarityTransform() = default;
  SimilarityTransform(double scale, const Mat3& rotation,
                      const Vec3& translation);

  double scale() const { return scale_; }
  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const {
    return scale_ * (rotation_ * p) + translation_;
  }
  SimilarityTransform inverse() const;
  /// (this * rhs)(p) == this->apply(rhs.apply(p))
  SimilarityTransform operator*(const SimilarityTransform& rhs) const;
  Mat4 matrix() const;

 private:
  double scale_ = 1.0;
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

/// 4x4 rigid world-to-camera matrix. Construction checks rigidity.
class ModelViewMatrix {
 public:
  ModelViewMatrix() : m_(Mat4::Identity()) {}
  explicit ModelViewMatrix(const Mat4& m);
  explicit ModelViewMatrix(const RigidTransform& t) : m_(t.matrix()) {}

  const Mat4& matrix() const { return m_; }
  ModelViewMatrix inverse() const;
  ModelViewMatrix operator*(const ModelViewMatrix& rhs) const;

 private:
  Mat4 m_;
};

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;
  int width = 1;
  int height = 1;

  /// Square-pixel intrinsics from a vertical field of view, principal point
  /// at the image center.
  static Intrinsics from_vertical_fov(int width, int height, double vfov);
};

/// Pinhole camera. Camera frame: +x right, +y down, +z forward (viewing
/// direction). Pixel (i, j) covers [i, i+1) x [j, j+1).
class Camera {
 public:
  Camera() = default;
  /// Throws InvalidArgument on non-positive focal lengths or image size.
  Camera(const Intrinsics& intrinsics, const RigidTransform& world_to_camera);

  /// Camera at `eye` looking at `target`; image "up" follows `up` projected
  /// orthogonally to the viewing axis. Throws DegenerateInput if `up` is
  /// parallel to the viewing axis or eye == target.
  static Camera look_at(const Intrinsics& intrinsics, const Vec3& eye,
                        const Vec3& target, const Vec3& up);

  const Intrinsics& intrinsics() const { return intrinsics_; }
  const RigidTransform& extrinsics() const { return extrinsics_; }
  int width() const { return intrinsics_.width; }
  int height() const { return intrinsics_.height; }

  Vec3 to_camera(const Vec3& world) const { return extrinsics_.apply(world); }
  /// Pixel coordinates of a camera-frame point; requires z > 0.
  Vec2 project_camera_point(const Vec3& pc) const;
  /// Pixel coordinates of a world point, or nullopt when it lies at or
  /// behind the camera plane.
  std::optional<Vec2> project(const Vec3& world) const;

  /// Camera center in world coordinates.
  Vec3 center() const;
  /// Viewing direction (+z axis) in world coordinates.
  Vec3 forward() const;
  /// Image-up direction (-y axis) in world coordinates.
  Vec3 up() const;

  ModelViewMatrix model_view() const { return ModelViewMatrix(extrinsics_); }

  /// Same pose with intrinsics rescaled to a new image size.
  Camera with_resolution(int width, int height) const;
  Camera with_extrinsics(const RigidTransform& world_to_camera) const;

 private:
  Intrinsics intrinsics_;
  RigidTransform extrinsics_;
};

/// se(3) logarithm of a rigid matrix as a 4x4 matrix with skew-symmetric
/// rotation block, translation column, and zero last row. Throws
/// DegenerateLogarithm when the rotation angle is within 1e-6 of pi.
Mat4 se3_log(const ModelViewMatrix& m);

/// Matrix exponential of an se(3) element (inverse of se3_log).
Mat4 se3_exp(const Mat4& xi);

/// ||log(Mi^-1 Mj)||_F
double viewpoint_distance(const ModelViewMatrix& mi, const ModelViewMatrix& mj);

struct SphericalCoord {
  double r = 0.0;
  double theta = 0.0;  ///< longitude in [0, 2pi)
  double phi = 0.0;    ///< latitude in [-pi/2, pi/2], 0 on the horizon
};

/// Orthonormal horizontal basis (e1, e2) for a given up axis; longitude is
/// measured from e1 towards e2. e1 is the world axis least aligned with up
/// (first such axis on ties), projected onto the horizontal plane.
std::pair<Vec3, Vec3> horizontal_basis(const Vec3& up);

SphericalCoord to_spherical(const Vec3& camera_position,
                            const Vec3& model_center, const Vec3& up_axis);
Vec3 from_spherical(const SphericalCoord& s, const Vec3& model_center,
                    const Vec3& up_axis);

}  // namespace vantage
