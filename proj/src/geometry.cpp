#include "omniloc/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "omniloc/error.hpp"

namespace omniloc {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::kDomain: return "E_DOMAIN";
    case ErrorCode::kOutOfImage: return "E_OUT_OF_IMAGE";
    case ErrorCode::kDimensionMismatch: return "E_DIMENSION_MISMATCH";
    case ErrorCode::kEmptyInput: return "E_EMPTY_INPUT";
    case ErrorCode::kMissingPose: return "E_MISSING_POSE";
    case ErrorCode::kInsufficientData: return "E_INSUFFICIENT_DATA";
    case ErrorCode::kLocalizationFailed: return "E_LOCALIZATION_FAILED";
    case ErrorCode::kNonFinite: return "E_NON_FINITE";
    case ErrorCode::kNoCorrespondences: return "E_NO_CORRESPONDENCES";
    case ErrorCode::kUnknownMode: return "E_UNKNOWN_MODE";
    case ErrorCode::kDuplicateId: return "E_DUPLICATE_ID";
    case ErrorCode::kParse: return "E_PARSE";
    case ErrorCode::kIo: return "E_IO";
  }
  return "E_UNKNOWN";
}

bool is_rotation(const Mat3& m, double tol) {
  if (!m.allFinite()) return false;
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Mat3 exp_so3(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 k = skew(omega);
  double a, b;
  if (theta2 < 1e-16) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 log_so3(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

Rotation rotation_from_ypr(double yaw, double pitch, double roll) {
  const Mat3 ry = Eigen::AngleAxisd(yaw, Vec3::UnitY()).toRotationMatrix();
  const Mat3 rx = Eigen::AngleAxisd(pitch, Vec3::UnitX()).toRotationMatrix();
  const Mat3 rz = Eigen::AngleAxisd(roll, Vec3::UnitZ()).toRotationMatrix();
  return ry * rx * rz;
}

double rotation_angle(const Mat3& a, const Mat3& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

RigidTransform RigidTransform::from_quaternion(double qw, double qx, double qy, double qz,
                                               const Vec3& t) {
  Eigen::Quaterniond q(qw, qx, qy, qz);
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kInvalidArgument, "quaternion must be finite and non-zero");
  }
  q.coeffs() /= n;
  return {q.toRotationMatrix(), t};
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Eigen::Vector4d RigidTransform::quaternion_wxyz() const {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return {q.w(), q.x(), q.y(), q.z()};
}

}  // namespace omniloc
