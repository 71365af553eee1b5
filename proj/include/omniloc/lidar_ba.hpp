#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "omniloc/geometry.hpp"

namespace omniloc {

/// One lidar sweep in its sensor frame.
struct FramedCloud {
  int frame = 0;
  std::vector<Vec3> points;
};

enum class FeatureKind { kPlane, kEdge };

struct PointRef {
  int frame = 0;  // index into the frame/pose arrays
  int index = 0;  // index into FramedCloud::points
  bool operator==(const PointRef&) const = default;
};

struct VoxelFeature {
  FeatureKind kind = FeatureKind::kPlane;
  std::vector<PointRef> members;
  Vec3 centroid = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();      // plane normal or edge direction
  Vec3 eigenvalues = Vec3::Zero();     // descending
  int depth = 0;                       // octree level it was accepted at
};

/// Plane n . x + delta = 0.
struct PlaneCoeffs {
  Vec3 normal = Vec3::UnitZ();
  double delta = 0.0;
};

/// P = R p + t for every point of the sweep.
std::vector<Vec3> transform_points(const FramedCloud& cloud, const RigidTransform& pose);

struct PointCovariance {
  Mat3 covariance;    // (1/N) sum (P - mean)(P - mean)^T
  Vec3 eigenvalues;   // descending
  Mat3 eigenvectors;  // column i belongs to eigenvalues(i)
  Vec3 centroid;
};

/// Throws kInsufficientData for fewer than 3 points.
PointCovariance feature_covariance(std::span<const Vec3> points);

struct VoxelOptions {
  double root_voxel_m = 1.0;
  int max_depth = 3;
  double plane_ratio = 0.01;  // plane iff lambda3 / lambda2 < plane_ratio
  double edge_ratio = 0.1;    // edge iff lambda2 / lambda1 < edge_ratio
  int min_points = 10;
};

/// Octree feature extraction over the posed sweeps. Voxels that hold neither
/// a plane nor an edge are split until max_depth and dropped there.
std::vector<VoxelFeature> adaptive_voxelize(std::span<const FramedCloud> frames,
                                            std::span<const RigidTransform> poses,
                                            const VoxelOptions& opts = {});

/// Per-feature energy: lambda_min for planes, lambda2 + lambda3 for edges.
double feature_cost(FeatureKind kind, std::span<const Vec3> world_points);

/// Sum of feature costs with points placed by `poses`.
double ba_objective(std::span<const FramedCloud> frames, std::span<const RigidTransform> poses,
                    std::span<const VoxelFeature> features);

struct BaOptions {
  int max_iterations = 100;
  double relative_tolerance = 1e-12;
};

struct BaResult {
  std::vector<RigidTransform> poses;
  std::vector<double> cost_trace;  // initial cost, then every accepted step
  int iterations = 0;
  bool converged = false;
};

/// Damped Gauss-Newton on the eigenvalue costs, first pose held fixed.
/// Throws kInsufficientData for fewer than 2 poses and kNonFinite when the
/// initial cost is not finite.
BaResult optimize_poses(std::span<const FramedCloud> frames,
                        std::span<const RigidTransform> poses,
                        std::span<const VoxelFeature> features, const BaOptions& opts = {});

/// Residual between the canonical ground plane carried into the sensor frame
/// of `pose` and the plane detected there: tau(canonical') - tau(detected),
/// tau(n, d) = [atan2(ny, nx), atan2(nz, |n|), d], angles wrapped to (-pi, pi].
Vec3 ground_plane_residual(const RigidTransform& pose, const PlaneCoeffs& detected,
                           const PlaneCoeffs& canonical = {});

struct IcpOptions {
  int max_iterations = 50;
  double max_correspondence_distance = 1.0;
  double tolerance = 1e-12;
};

struct IcpResult {
  RigidTransform transform;  // maps source into the target frame
  bool success = false;
  double rms = 0.0;
  std::vector<double> rms_trace;
  int iterations = 0;
  int pairs = 0;
};

/// Point-to-point ICP. Needs at least 3 points per cloud; success is false
/// when no source point finds a target neighbour within range.
IcpResult icp_align(std::span<const Vec3> source, std::span<const Vec3> target,
                    const RigidTransform& init, const IcpOptions& opts = {});

/// Synthetic plane scene used by the BA simulator.
struct BaScenario {
  int planes = 5;
  int poses = 10;
  int points_per_plane = 60;
  double noise_rot_deg = 1.0;
  double noise_t_m = 0.05;
  double sensor_noise_m = 0.0;
  std::uint64_t seed = 0;
  bool voxelize = false;  // extract features by voxelization instead of plane labels
};

/// Parses `key = value` lines: planes, poses, noise_rot_deg, noise_t_m, seed,
/// points_per_plane, sensor_noise_m, features (truth|voxel).
BaScenario parse_ba_scenario(const std::string& text);

struct BaScene {
  std::vector<FramedCloud> frames;
  std::vector<RigidTransform> truth;
  std::vector<RigidTransform> initial;  // truth with noise on every pose but the first
  std::vector<VoxelFeature> features;
};

BaScene simulate_ba_scene(const BaScenario& scenario);

/// Root-mean-square camera-center error between two pose lists.
double translation_rmse(std::span<const RigidTransform> a, std::span<const RigidTransform> b);

}  // namespace omniloc
