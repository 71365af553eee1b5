#include "omniloc/lidar_ba.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "omniloc/error.hpp"

namespace omniloc {

std::vector<Vec3> transform_points(const FramedCloud& cloud, const RigidTransform& pose) {
  std::vector<Vec3> out;
  out.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.push_back(pose.rotation * p + pose.translation);
  return out;
}

PointCovariance feature_covariance(std::span<const Vec3> points) {
  if (points.size() < 3) {
    throw Error(ErrorCode::kInsufficientData, "feature covariance needs at least 3 points");
  }
  PointCovariance out;
  out.centroid = Vec3::Zero();
  for (const auto& p : points) out.centroid += p;
  out.centroid /= static_cast<double>(points.size());
  out.covariance.setZero();
  for (const auto& p : points) {
    const Vec3 d = p - out.centroid;
    out.covariance += d * d.transpose();
  }
  out.covariance /= static_cast<double>(points.size());
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(out.covariance);
  // Eigen sorts ascending.
  for (int i = 0; i < 3; ++i) {
    out.eigenvalues(i) = eig.eigenvalues()(2 - i);
    out.eigenvectors.col(i) = eig.eigenvectors().col(2 - i);
  }
  return out;
}

namespace {

// Directions whose squared projections make up the feature energy.
std::vector<Vec3> residual_directions(FeatureKind kind, const PointCovariance& cov) {
  if (kind == FeatureKind::kPlane) return {cov.eigenvectors.col(2)};
  return {cov.eigenvectors.col(1), cov.eigenvectors.col(2)};
}

double energy(FeatureKind kind, std::span<const Vec3> points, const PointCovariance& cov) {
  // Rayleigh quotients on the points: equal to the eigenvalues but free of
  // the eigensolver's absolute error when they are near zero.
  double sum = 0.0;
  for (const Vec3& v : residual_directions(kind, cov)) {
    for (const auto& p : points) {
      const double r = v.dot(p - cov.centroid);
      sum += r * r;
    }
  }
  return sum / static_cast<double>(points.size());
}

struct Classification {
  bool accepted = false;
  FeatureKind kind = FeatureKind::kPlane;
};

Classification classify(const Vec3& ev, const VoxelOptions& opts) {
  if (ev(2) < opts.plane_ratio * ev(1)) return {true, FeatureKind::kPlane};
  if (ev(1) < opts.edge_ratio * ev(0)) return {true, FeatureKind::kEdge};
  return {};
}

struct Voxelizer {
  const std::vector<std::vector<Vec3>>& world;
  const VoxelOptions& opts;
  std::vector<VoxelFeature> features;

  const Vec3& at(const PointRef& r) const { return world[r.frame][r.index]; }

  void visit(const Vec3& origin, double size, int depth, std::vector<PointRef> members) {
    if (static_cast<int>(members.size()) < std::max(opts.min_points, 3)) return;
    std::vector<Vec3> pts;
    pts.reserve(members.size());
    for (const auto& m : members) pts.push_back(at(m));
    const PointCovariance cov = feature_covariance(pts);
    const Classification c = classify(cov.eigenvalues, opts);
    if (c.accepted) {
      VoxelFeature f;
      f.kind = c.kind;
      f.members = std::move(members);
      f.centroid = cov.centroid;
      f.direction = c.kind == FeatureKind::kPlane ? cov.eigenvectors.col(2)
                                                  : cov.eigenvectors.col(0);
      f.eigenvalues = cov.eigenvalues;
      f.depth = depth;
      features.push_back(std::move(f));
      return;
    }
    if (depth >= opts.max_depth) return;
    const double half = size / 2.0;
    const Vec3 center = origin + Vec3::Constant(half);
    std::array<std::vector<PointRef>, 8> children;
    for (const auto& m : members) {
      const Vec3& p = at(m);
      const int idx = (p.x() >= center.x() ? 1 : 0) | (p.y() >= center.y() ? 2 : 0) |
                      (p.z() >= center.z() ? 4 : 0);
      children[idx].push_back(m);
    }
    for (int i = 0; i < 8; ++i) {
      const Vec3 child_origin = origin + half * Vec3((i & 1) ? 1 : 0, (i & 2) ? 1 : 0, (i & 4) ? 1 : 0);
      visit(child_origin, half, depth + 1, std::move(children[i]));
    }
  }
};

void check_frames(std::span<const FramedCloud> frames, std::span<const RigidTransform> poses) {
  if (frames.size() != poses.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "frame and pose counts differ");
  }
}

std::vector<Vec3> gather(std::span<const FramedCloud> frames, std::span<const RigidTransform> poses,
                         const VoxelFeature& f) {
  std::vector<Vec3> pts;
  pts.reserve(f.members.size());
  for (const auto& m : f.members) {
    if (m.frame < 0 || m.frame >= static_cast<int>(frames.size()) || m.index < 0 ||
        m.index >= static_cast<int>(frames[m.frame].points.size())) {
      throw Error(ErrorCode::kInvalidArgument, "feature member out of range");
    }
    pts.push_back(poses[m.frame] * frames[m.frame].points[m.index]);
  }
  return pts;
}

}  // namespace

std::vector<VoxelFeature> adaptive_voxelize(std::span<const FramedCloud> frames,
                                            std::span<const RigidTransform> poses,
                                            const VoxelOptions& opts) {
  check_frames(frames, poses);
  if (!(opts.root_voxel_m > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "root voxel size must be positive");
  }
  std::vector<std::vector<Vec3>> world;
  world.reserve(frames.size());
  for (size_t u = 0; u < frames.size(); ++u) world.push_back(transform_points(frames[u], poses[u]));

  std::map<std::array<long long, 3>, std::vector<PointRef>> roots;
  for (size_t u = 0; u < world.size(); ++u) {
    for (size_t i = 0; i < world[u].size(); ++i) {
      const Vec3& p = world[u][i];
      if (!p.allFinite()) throw Error(ErrorCode::kNonFinite, "non-finite lidar point");
      const std::array<long long, 3> key = {
          static_cast<long long>(std::floor(p.x() / opts.root_voxel_m)),
          static_cast<long long>(std::floor(p.y() / opts.root_voxel_m)),
          static_cast<long long>(std::floor(p.z() / opts.root_voxel_m))};
      roots[key].push_back({static_cast<int>(u), static_cast<int>(i)});
    }
  }
  Voxelizer vox{world, opts, {}};
  for (auto& [key, members] : roots) {
    const Vec3 origin = opts.root_voxel_m * Vec3(key[0], key[1], key[2]);
    vox.visit(origin, opts.root_voxel_m, 0, std::move(members));
  }
  return std::move(vox.features);
}

double feature_cost(FeatureKind kind, std::span<const Vec3> world_points) {
  const PointCovariance cov = feature_covariance(world_points);
  return energy(kind, world_points, cov);
}

double ba_objective(std::span<const FramedCloud> frames, std::span<const RigidTransform> poses,
                    std::span<const VoxelFeature> features) {
  check_frames(frames, poses);
  double cost = 0.0;
  for (const auto& f : features) cost += feature_cost(f.kind, gather(frames, poses, f));
  return cost;
}

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

struct NormalEquations {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
};

// Gauss-Newton system of the point-to-feature residuals, with each feature's
// offset and residual directions as extra unknowns eliminated by Schur
// complement. Frame 0 is the gauge and has no block.
NormalEquations linearize(std::span<const FramedCloud> frames,
                          std::span<const RigidTransform> poses,
                          std::span<const VoxelFeature> features) {
  using Mat62 = Eigen::Matrix<double, 6, 2>;
  const int m = static_cast<int>(poses.size());
  const int dim = 6 * (m - 1);
  NormalEquations ne{Eigen::MatrixXd::Zero(dim, dim), Eigen::VectorXd::Zero(dim)};
  std::vector<Vec6> sums(m);
  std::vector<Mat62> cross(m);
  std::vector<char> touched(m);
  for (const auto& f : features) {
    const std::vector<Vec3> pts = gather(frames, poses, f);
    const PointCovariance cov = feature_covariance(pts);
    const double inv_n = 1.0 / static_cast<double>(pts.size());
    const std::vector<Vec3> dirs = residual_directions(f.kind, cov);
    // Small rotations of the residual directions that change the cost.
    const std::array<Vec3, 2> axes = f.kind == FeatureKind::kPlane
                                         ? std::array<Vec3, 2>{cov.eigenvectors.col(0), cov.eigenvectors.col(1)}
                                         : std::array<Vec3, 2>{cov.eigenvectors.col(1), cov.eigenvectors.col(2)};
    Eigen::Matrix2d hss = Eigen::Matrix2d::Zero();
    Eigen::Vector2d gs = Eigen::Vector2d::Zero();
    std::fill(cross.begin(), cross.end(), Mat62::Zero());
    std::fill(touched.begin(), touched.end(), 0);
    for (const Vec3& v : dirs) {
      std::fill(sums.begin(), sums.end(), Vec6::Zero());
      for (size_t i = 0; i < pts.size(); ++i) {
        const int u = f.members[i].frame;
        const Vec3 a = pts[i] - poses[u].translation;
        const Vec3 d = pts[i] - cov.centroid;
        Vec6 row;
        row.head<3>() = a.cross(v);
        row.tail<3>() = v;
        const Eigen::Vector2d js(axes[0].cross(v).dot(d), axes[1].cross(v).dot(d));
        const double r = v.dot(d);
        hss += inv_n * js * js.transpose();
        gs += inv_n * r * js;
        sums[u] += row;
        touched[u] = 1;
        if (u == 0) continue;
        const int o = 6 * (u - 1);
        ne.h.block<6, 6>(o, o) += inv_n * row * row.transpose();
        ne.g.segment<6>(o) += inv_n * r * row;
        cross[u] += inv_n * row * js.transpose();
      }
      for (int u = 1; u < m; ++u) {
        if (!touched[u]) continue;
        for (int w = 1; w < m; ++w) {
          if (!touched[w]) continue;
          ne.h.block<6, 6>(6 * (u - 1), 6 * (w - 1)) -= inv_n * inv_n * sums[u] * sums[w].transpose();
        }
      }
    }
    if (!(hss.determinant() > 1e-12 * hss.trace() * hss.trace())) continue;
    const Eigen::Matrix2d hss_inv = hss.inverse();
    for (int u = 1; u < m; ++u) {
      if (!touched[u]) continue;
      const Mat62 k = cross[u] * hss_inv;
      ne.g.segment<6>(6 * (u - 1)) -= k * gs;
      for (int w = 1; w < m; ++w) {
        if (!touched[w]) continue;
        ne.h.block<6, 6>(6 * (u - 1), 6 * (w - 1)) -= k * cross[w].transpose();
      }
    }
  }
  return ne;
}

std::vector<RigidTransform> apply_step(std::span<const RigidTransform> poses,
                                       const Eigen::VectorXd& step) {
  std::vector<RigidTransform> out(poses.begin(), poses.end());
  for (size_t u = 1; u < out.size(); ++u) {
    const Vec6 s = step.segment<6>(6 * (u - 1));
    out[u].rotation = exp_so3(s.head<3>()) * out[u].rotation;
    out[u].translation += s.tail<3>();
  }
  return out;
}

}  // namespace

BaResult optimize_poses(std::span<const FramedCloud> frames,
                        std::span<const RigidTransform> poses,
                        std::span<const VoxelFeature> features, const BaOptions& opts) {
  check_frames(frames, poses);
  if (poses.size() < 2) throw Error(ErrorCode::kInsufficientData, "BA needs at least 2 poses");
  BaResult out;
  out.poses.assign(poses.begin(), poses.end());
  double cost = ba_objective(frames, out.poses, features);
  if (!std::isfinite(cost)) throw Error(ErrorCode::kNonFinite, "initial BA cost is not finite");
  out.cost_trace.push_back(cost);

  double mu = -1.0;
  double mu_floor = 0.0;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    out.iterations = iter + 1;
    if (cost == 0.0) {
      out.converged = true;
      break;
    }
    const NormalEquations ne = linearize(frames, out.poses, features);
    const double scale = std::max(ne.h.diagonal().maxCoeff(), 1e-300);
    if (mu < 0.0) {
      mu = 1e-4 * scale;
      mu_floor = 1e-8 * scale;
    }
    bool accepted = false;
    while (mu < 1e10 * scale) {
      Eigen::MatrixXd damped = ne.h;
      damped.diagonal().array() += mu;
      const Eigen::VectorXd step = damped.ldlt().solve(-ne.g);
      auto candidate = apply_step(out.poses, step);
      const double c = ba_objective(frames, candidate, features);
      if (std::isfinite(c) && c < cost) {
        const double rel = (cost - c) / cost;
        out.poses = std::move(candidate);
        cost = c;
        out.cost_trace.push_back(c);
        mu = std::max(mu * 0.1, mu_floor);
        accepted = true;
        if (rel < opts.relative_tolerance) out.converged = true;
        break;
      }
      mu *= 10.0;
    }
    if (!accepted) out.converged = true;
    if (out.converged) break;
  }
  return out;
}

namespace {

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

Vec3 tau(const PlaneCoeffs& z) {
  const Vec3& n = z.normal;
  // atan2(0, 0) is taken as 0 regardless of the zeros' signs.
  const double azimuth =
      (std::abs(n.x()) < 1e-15 && std::abs(n.y()) < 1e-15) ? 0.0 : std::atan2(n.y(), n.x());
  return {azimuth, std::atan2(n.z(), n.norm()), z.delta};
}

}  // namespace

Vec3 ground_plane_residual(const RigidTransform& pose, const PlaneCoeffs& detected,
                           const PlaneCoeffs& canonical) {
  PlaneCoeffs moved;
  moved.normal = pose.rotation * canonical.normal;
  moved.delta = canonical.delta - pose.translation.dot(moved.normal);
  const Vec3 a = tau(moved);
  const Vec3 b = tau(detected);
  return {wrap_angle(a(0) - b(0)), wrap_angle(a(1) - b(1)), a(2) - b(2)};
}

BaScenario parse_ba_scenario(const std::string& text) {
  BaScenario s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse, "scenario line " + std::to_string(lineno) + ": expected key = value");
    }
    std::istringstream ks(line.substr(0, eq));
    std::istringstream vs(line.substr(eq + 1));
    std::string key;
    ks >> key;
    bool ok = true;
    if (key == "planes") ok = static_cast<bool>(vs >> s.planes);
    else if (key == "poses") ok = static_cast<bool>(vs >> s.poses);
    else if (key == "points_per_plane") ok = static_cast<bool>(vs >> s.points_per_plane);
    else if (key == "noise_rot_deg") ok = static_cast<bool>(vs >> s.noise_rot_deg);
    else if (key == "noise_t_m") ok = static_cast<bool>(vs >> s.noise_t_m);
    else if (key == "sensor_noise_m") ok = static_cast<bool>(vs >> s.sensor_noise_m);
    else if (key == "seed") ok = static_cast<bool>(vs >> s.seed);
    else if (key == "features") {
      std::string v;
      vs >> v;
      if (v == "voxel") s.voxelize = true;
      else if (v == "truth") s.voxelize = false;
      else ok = false;
    } else {
      throw Error(ErrorCode::kParse, "scenario line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!ok) {
      throw Error(ErrorCode::kParse, "scenario line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    }
  }
  if (s.planes < 1 || s.planes > 6 || s.poses < 2 || s.points_per_plane < 3) {
    throw Error(ErrorCode::kInvalidArgument, "scenario needs 1-6 planes, >= 2 poses, >= 3 points per plane");
  }
  return s;
}

namespace {

struct PlanePatch {
  Vec3 origin;
  Vec3 u, v;  // spanning edges
};

// Box room 10 x 8 x 3 m plus one slanted panel; planes are picked in order so
// that any three of the first five have spanning normals.
const std::array<PlanePatch, 6> kRoom = {{
    {{-5, -4, 0}, {10, 0, 0}, {0, 8, 0}},   // floor
    {{-5, -4, 0}, {0, 8, 0}, {0, 0, 3}},    // wall x = -5
    {{-5, 4, 0}, {10, 0, 0}, {0, 0, 3}},    // wall y = 4
    {{5, -4, 0}, {0, 8, 0}, {0, 0, 3}},     // wall x = 5
    {{-5, -4, 3}, {10, 0, 0}, {0, 8, 0}},   // ceiling
    {{-2, -4, 0.5}, {3, 0, 1.5}, {0, 2, 0}},  // slanted panel
}};

}  // namespace

BaScene simulate_ba_scene(const BaScenario& s) {
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gauss3 = [&] { return Vec3(normal(rng), normal(rng), normal(rng)); };

  BaScene scene;
  for (int u = 0; u < s.poses; ++u) {
    const double a = s.poses > 1 ? static_cast<double>(u) / (s.poses - 1) : 0.0;
    RigidTransform t;
    t.rotation = exp_so3(Vec3(0.05 * std::sin(3.0 * a), 0.04 * std::cos(2.0 * a), 2.0 * a));
    t.translation = Vec3(-3.0 + 6.0 * a, 1.5 * std::sin(2.0 * a), 1.2 + 0.2 * a);
    scene.truth.push_back(t);
  }
  const double deg = std::numbers::pi / 180.0;
  scene.initial = scene.truth;
  for (int u = 1; u < s.poses; ++u) {
    scene.initial[u].rotation = exp_so3(s.noise_rot_deg * deg * gauss3()) * scene.initial[u].rotation;
    scene.initial[u].translation += s.noise_t_m * gauss3();
  }

  std::vector<VoxelFeature> labelled(s.planes);
  for (int k = 0; k < s.planes; ++k) labelled[k].kind = FeatureKind::kPlane;
  for (int u = 0; u < s.poses; ++u) {
    FramedCloud cloud;
    cloud.frame = u;
    const RigidTransform to_sensor = scene.truth[u].inverse();
    for (int k = 0; k < s.planes; ++k) {
      const PlanePatch& patch = kRoom[k];
      const Vec3 n = patch.u.cross(patch.v).normalized();
      for (int i = 0; i < s.points_per_plane; ++i) {
        Vec3 p = patch.origin + unit(rng) * patch.u + unit(rng) * patch.v;
        if (s.sensor_noise_m > 0.0) p += s.sensor_noise_m * normal(rng) * n;
        labelled[k].members.push_back({u, static_cast<int>(cloud.points.size())});
        cloud.points.push_back(to_sensor * p);
      }
    }
    scene.frames.push_back(std::move(cloud));
  }
  if (s.voxelize) {
    scene.features = adaptive_voxelize(scene.frames, scene.initial);
  } else {
    for (auto& f : labelled) {
      std::vector<Vec3> pts = gather(scene.frames, scene.initial, f);
      const PointCovariance cov = feature_covariance(pts);
      f.centroid = cov.centroid;
      f.direction = cov.eigenvectors.col(2);
      f.eigenvalues = cov.eigenvalues;
    }
    scene.features = std::move(labelled);
  }
  return scene;
}

double translation_rmse(std::span<const RigidTransform> a, std::span<const RigidTransform> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "pose lists must be non-empty and equally long");
  }
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sum += (a[i].translation - b[i].translation).squaredNorm();
  return std::sqrt(sum / a.size());
}

}  // namespace omniloc
