#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omniloc/camera_models.hpp"
#include "omniloc/geometry.hpp"
#include "omniloc/raster.hpp"

namespace omniloc {

/// A query/reference match lifted into a 2D-3D pair.
struct Correspondence {
  Pixel query_pixel;
  Pixel ref_pixel;
  Vec3 point;       // world frame, meters
  Bearing bearing;  // query camera frame
};

struct PixelMatch {
  Pixel query;
  Pixel ref;
};

/// World point seen at `pixel` of a 360 reference: ref_pose * (depth * unproject(pixel)).
/// `pixel` is expressed in `model` coordinates; depth is looked up at the
/// nearest pixel after rescaling to the depth map resolution. Returns empty
/// when the depth there is invalid; throws kOutOfImage outside the image.
std::optional<Vec3> lift_reference(const Pixel& pixel, const DepthMap& depth,
                                   const RigidTransform& ref_pose, const EquirectModel& model);

struct LiftStats {
  int kept = 0;
  int dropped_invalid_depth = 0;
  int dropped_query_domain = 0;
};

/// Lifts every match; pairs with invalid depth or an unprojectable query
/// pixel are dropped and counted.
std::vector<Correspondence> build_correspondences(std::span<const PixelMatch> matches,
                                                  const CameraModel& query_model,
                                                  const DepthMap& depth,
                                                  const RigidTransform& ref_pose,
                                                  const EquirectModel& ref_model,
                                                  LiftStats* stats = nullptr);

/// Angle between bearing `b` and world point `x` seen from camera-to-world `pose`.
double angular_residual(const RigidTransform& pose, const Bearing& b, const Vec3& x);

/// Minimal absolute pose from three bearing/point pairs. Points may lie
/// anywhere on the view sphere. Returns up to four camera-to-world poses;
/// empty for collinear points or coplanar bearings.
std::vector<RigidTransform> solve_p3p_bearings(const std::array<Bearing, 3>& bearings,
                                               const std::array<Vec3, 3>& points);

struct RansacOptions {
  double angular_threshold = 0.5 * 3.14159265358979323846 / 180.0;
  int max_iterations = 10000;
  double confidence = 0.999;
  std::uint64_t seed = 0;
  int min_inliers = 4;
  bool refine = true;
};

struct RansacResult {
  RigidTransform pose;
  std::vector<int> inliers;
  int iterations = 0;
};

/// Throws kInsufficientData below four pairs and kLocalizationFailed when no
/// hypothesis reaches min_inliers.
RansacResult ransac_pnp(std::span<const Bearing> bearings, std::span<const Vec3> points,
                        const RansacOptions& opts = {});
RansacResult ransac_pnp(std::span<const Correspondence> corrs, const RansacOptions& opts = {});

struct RefineOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-16;
  double step_tolerance = 1e-15;
};

struct RefineResult {
  RigidTransform pose;
  bool converged = false;
  bool rank_deficient = false;
  int iterations = 0;
  std::vector<double> cost_trace;  // accepted iterates, starting with the input
};

/// Sum of squared angular residuals.
double angular_objective(const RigidTransform& pose, std::span<const Bearing> bearings,
                         std::span<const Vec3> points);

/// Gradient of angular_objective with respect to the tangent update
/// (omega, delta) applied as R <- R * exp(omega), t <- t + R * delta.
Eigen::Matrix<double, 6, 1> angular_objective_gradient(const RigidTransform& pose,
                                                       std::span<const Bearing> bearings,
                                                       std::span<const Vec3> points);

RigidTransform apply_tangent_update(const RigidTransform& pose,
                                    const Eigen::Matrix<double, 6, 1>& step);

/// Levenberg-Marquardt on the angular objective. Needs at least 4 pairs.
RefineResult refine_pose(const RigidTransform& pose, std::span<const Bearing> bearings,
                         std::span<const Vec3> points, const RefineOptions& opts = {});

struct PoseError {
  double translation_m = 0.0;
  double rotation_deg = 0.0;
};

/// Camera-center distance and geodesic rotation angle.
PoseError pose_errors(const RigidTransform& est, const RigidTransform& gt);

struct AccuracyThreshold {
  double translation_m;
  double rotation_deg;
};

inline constexpr AccuracyThreshold kHighAccuracy{0.25, 2.0};
inline constexpr AccuracyThreshold kMediumAccuracy{0.5, 5.0};
inline constexpr AccuracyThreshold kLowAccuracy{5.0, 10.0};

struct AccuracyBuckets {
  bool high = false;
  bool medium = false;
  bool low = false;
};

AccuracyBuckets bucketize(const PoseError& err);

}  // namespace omniloc
