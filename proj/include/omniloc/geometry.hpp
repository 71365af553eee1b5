#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace omniloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Continuous pixel coordinates; pixel (i, j) has its center at (i + 0.5, j + 0.5).
using Pixel = Vec2;

/// Unit direction in a camera frame (x right, y down, z forward).
using Bearing = Vec3;

/// Element of SO(3). Free functions below check and build them.
using Rotation = Mat3;

bool is_rotation(const Mat3& m, double tol = 1e-12);

Mat3 skew(const Vec3& v);
Mat3 exp_so3(const Vec3& omega);
Vec3 log_so3(const Mat3& r);

/// Yaw about the camera y axis, pitch about x, roll about z; R = Ry(yaw) * Rx(pitch) * Rz(roll).
Rotation rotation_from_ypr(double yaw, double pitch, double roll);

/// Geodesic angle between two rotations, radians in [0, pi].
double rotation_angle(const Mat3& a, const Mat3& b);

/// Rigid motion x -> R x + t. Poses are camera-to-world unless stated otherwise.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_quaternion(double qw, double qx, double qy, double qz, const Vec3& t);

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
  RigidTransform inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }
  Mat4 matrix() const;
  /// Hamilton quaternion (w, x, y, z) with w >= 0.
  Eigen::Vector4d quaternion_wxyz() const;
};

}  // namespace omniloc
