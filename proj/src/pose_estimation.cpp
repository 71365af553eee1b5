#include "omniloc/pose_estimation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "omniloc/error.hpp"

namespace omniloc {

std::optional<Vec3> lift_reference(const Pixel& pixel, const DepthMap& depth,
                                   const RigidTransform& ref_pose, const EquirectModel& model) {
  const auto d = model.unproject(pixel);
  if (!d) throw Error(ErrorCode::kOutOfImage, "reference pixel lies outside the image");
  const double sx = static_cast<double>(depth.width()) / model.width();
  const double sy = static_cast<double>(depth.height()) / model.height();
  const float z = sample_depth(depth, Pixel(pixel.x() * sx, pixel.y() * sy), EdgeMode::kWrapX);
  if (!DepthMap::valid(z)) return std::nullopt;
  return ref_pose * (static_cast<double>(z) * *d);
}

std::vector<Correspondence> build_correspondences(std::span<const PixelMatch> matches,
                                                  const CameraModel& query_model,
                                                  const DepthMap& depth,
                                                  const RigidTransform& ref_pose,
                                                  const EquirectModel& ref_model,
                                                  LiftStats* stats) {
  LiftStats local;
  std::vector<Correspondence> out;
  out.reserve(matches.size());
  for (const auto& m : matches) {
    const auto b = try_unproject(query_model, m.query);
    if (!b) {
      ++local.dropped_query_domain;
      continue;
    }
    const auto x = lift_reference(m.ref, depth, ref_pose, ref_model);
    if (!x) {
      ++local.dropped_invalid_depth;
      continue;
    }
    out.push_back({m.query, m.ref, *x, *b});
  }
  local.kept = static_cast<int>(out.size());
  if (stats) *stats = local;
  return out;
}

double angular_residual(const RigidTransform& pose, const Bearing& b, const Vec3& x) {
  const Vec3 p = pose.rotation.transpose() * (x - pose.translation);
  return std::atan2(b.cross(p).norm(), b.dot(p));
}

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Tangent-plane residual whose norm is the angle between b and p.
struct AngularTerm {
  Eigen::Vector2d r;
  Eigen::Matrix<double, 2, 6> j;
};

AngularTerm angular_term(const RigidTransform& pose, const Bearing& b, const Vec3& x) {
  const Vec3 p = pose.rotation.transpose() * (x - pose.translation);
  AngularTerm t;
  t.j.setZero();
  const double pn = p.norm();
  if (!(pn > 0.0)) {
    t.r.setZero();
    return t;
  }
  // Orthonormal tangent basis at b.
  const Vec3 helper = std::abs(b.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = b.cross(helper).normalized();
  const Vec3 e2 = b.cross(e1);
  Eigen::Matrix<double, 2, 3> e;
  e.row(0) = e1.transpose();
  e.row(1) = e2.transpose();

  const Vec3 f = p / pn;
  const Eigen::Vector2d s = e * f;
  const double c = b.dot(f);
  const double sigma = s.norm();
  const double theta = std::atan2(sigma, c);

  double g, dg_dsigma;
  if (sigma < 1e-9) {
    if (c <= 0.0) {
      t.r = Eigen::Vector2d(std::numbers::pi, 0.0);
      return t;
    }
    g = 1.0 / c;
    dg_dsigma = 0.0;
  } else {
    g = theta / sigma;
    dg_dsigma = (c / (sigma * sigma + c * c) * sigma - theta) / (sigma * sigma);
  }
  const double dg_dc = -1.0 / (sigma * sigma + c * c);
  t.r = g * s;

  Eigen::Matrix<double, 2, 3> dr_df = g * e;
  if (sigma >= 1e-9) dr_df += s * (dg_dsigma / sigma) * (s.transpose() * e);
  dr_df += s * dg_dc * b.transpose();
  const Mat3 df_dp = (Mat3::Identity() - f * f.transpose()) / pn;
  Eigen::Matrix<double, 3, 6> dp;
  dp.leftCols<3>() = skew(p);
  dp.rightCols<3>() = -Mat3::Identity();
  t.j = dr_df * df_dp * dp;
  return t;
}

void check_sizes(std::span<const Bearing> bearings, std::span<const Vec3> points) {
  if (bearings.size() != points.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "bearing and point counts differ");
  }
}

}  // namespace

RigidTransform apply_tangent_update(const RigidTransform& pose, const Vec6& step) {
  return {pose.rotation * exp_so3(step.head<3>()), pose.translation + pose.rotation * step.tail<3>()};
}

double angular_objective(const RigidTransform& pose, std::span<const Bearing> bearings,
                         std::span<const Vec3> points) {
  check_sizes(bearings, points);
  double cost = 0.0;
  for (size_t i = 0; i < points.size(); ++i) {
    const double a = angular_residual(pose, bearings[i], points[i]);
    cost += a * a;
  }
  return cost;
}

Vec6 angular_objective_gradient(const RigidTransform& pose, std::span<const Bearing> bearings,
                                std::span<const Vec3> points) {
  check_sizes(bearings, points);
  Vec6 g = Vec6::Zero();
  for (size_t i = 0; i < points.size(); ++i) {
    const AngularTerm t = angular_term(pose, bearings[i], points[i]);
    g += 2.0 * t.j.transpose() * t.r;
  }
  return g;
}

RefineResult refine_pose(const RigidTransform& pose, std::span<const Bearing> bearings,
                         std::span<const Vec3> points, const RefineOptions& opts) {
  check_sizes(bearings, points);
  if (points.size() < 4) {
    throw Error(ErrorCode::kInsufficientData, "pose refinement needs at least 4 correspondences");
  }
  RefineResult out;
  out.pose = pose;
  double cost = angular_objective(pose, bearings, points);
  out.cost_trace.push_back(cost);
  double mu = 1e-4;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    Mat6 h = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    for (size_t i = 0; i < points.size(); ++i) {
      const AngularTerm t = angular_term(out.pose, bearings[i], points[i]);
      h += t.j.transpose() * t.j;
      g += t.j.transpose() * t.r;
    }
    if (iter == 0) {
      const Eigen::SelfAdjointEigenSolver<Mat6> eig(h);
      const double top = eig.eigenvalues().maxCoeff();
      out.rank_deficient = !(eig.eigenvalues().minCoeff() > 1e-10 * top);
    }
    out.iterations = iter + 1;
    if (g.norm() <= opts.gradient_tolerance || cost == 0.0) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    while (mu < 1e16) {
      Mat6 damped = h;
      damped.diagonal().array() += mu;
      const Vec6 step = damped.ldlt().solve(-g);
      const RigidTransform candidate = apply_tangent_update(out.pose, step);
      const double c = angular_objective(candidate, bearings, points);
      if (c < cost) {
        const double rel = (cost - c) / std::max(cost, 1e-300);
        out.pose = candidate;
        cost = c;
        out.cost_trace.push_back(c);
        mu = std::max(mu * 0.1, 1e-12);
        accepted = true;
        if (step.norm() <= opts.step_tolerance || rel < 1e-15) out.converged = true;
        break;
      }
      mu *= 10.0;
    }
    // No decreasing step exists at any damping: a stationary point.
    if (!accepted) out.converged = true;
    if (out.converged) break;
  }
  if (out.rank_deficient) out.converged = false;
  return out;
}

namespace {

struct Score {
  int inliers = 0;
  double residual = 0.0;  // sum of truncated squared angles
  bool better_than(const Score& o) const {
    return inliers > o.inliers || (inliers == o.inliers && residual < o.residual);
  }
};

Score score_pose(const RigidTransform& pose, std::span<const Bearing> bearings,
                 std::span<const Vec3> points, double threshold) {
  Score s;
  const double t2 = threshold * threshold;
  for (size_t i = 0; i < points.size(); ++i) {
    const double a = angular_residual(pose, bearings[i], points[i]);
    if (a < threshold) {
      ++s.inliers;
      s.residual += a * a;
    } else {
      s.residual += t2;
    }
  }
  return s;
}

std::vector<int> collect_inliers(const RigidTransform& pose, std::span<const Bearing> bearings,
                                 std::span<const Vec3> points, double threshold) {
  std::vector<int> idx;
  for (size_t i = 0; i < points.size(); ++i) {
    if (angular_residual(pose, bearings[i], points[i]) < threshold) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

}  // namespace

RansacResult ransac_pnp(std::span<const Bearing> bearings, std::span<const Vec3> points,
                        const RansacOptions& opts) {
  check_sizes(bearings, points);
  const int n = static_cast<int>(points.size());
  if (n < 4) throw Error(ErrorCode::kInsufficientData, "PnP needs at least 4 correspondences");

  std::mt19937_64 rng(opts.seed);
  auto draw = [&](int bound) { return static_cast<int>(rng() % static_cast<std::uint64_t>(bound)); };

  RansacResult best;
  Score best_score;
  bool found = false;
  long long needed = opts.max_iterations;
  int iter = 0;
  for (; iter < opts.max_iterations && iter < needed; ++iter) {
    const int i0 = draw(n);
    int i1 = draw(n - 1);
    if (i1 >= i0) ++i1;
    int i2 = draw(n - 2);
    if (i2 >= std::min(i0, i1)) ++i2;
    if (i2 >= std::max(i0, i1)) ++i2;
    const auto candidates = solve_p3p_bearings({bearings[i0], bearings[i1], bearings[i2]},
                                               {points[i0], points[i1], points[i2]});
    for (const auto& pose : candidates) {
      const Score s = score_pose(pose, bearings, points, opts.angular_threshold);
      if (!found || s.better_than(best_score)) {
        found = true;
        best_score = s;
        best.pose = pose;
        const double w = static_cast<double>(s.inliers) / n;
        const double miss = 1.0 - w * w * w;
        if (miss <= 0.0) {
          needed = 0;
        } else if (miss < 1.0) {
          needed = static_cast<long long>(
              std::ceil(std::log(1.0 - opts.confidence) / std::log(miss)));
        }
      }
    }
  }
  best.iterations = iter;
  if (!found || best_score.inliers < opts.min_inliers) {
    throw Error(ErrorCode::kLocalizationFailed, "no pose hypothesis with enough inliers");
  }
  best.inliers = collect_inliers(best.pose, bearings, points, opts.angular_threshold);

  if (opts.refine) {
    // Polish on the inlier set, then once more on the re-scored set.
    for (int round = 0; round < 2; ++round) {
      std::vector<Bearing> b;
      std::vector<Vec3> x;
      for (int i : best.inliers) {
        b.push_back(bearings[i]);
        x.push_back(points[i]);
      }
      const RefineResult r = refine_pose(best.pose, b, x);
      auto inl = collect_inliers(r.pose, bearings, points, opts.angular_threshold);
      if (inl.size() < best.inliers.size()) break;
      best.pose = r.pose;
      const bool same = inl == best.inliers;
      best.inliers = std::move(inl);
      if (same) break;
    }
  }
  return best;
}

RansacResult ransac_pnp(std::span<const Correspondence> corrs, const RansacOptions& opts) {
  std::vector<Bearing> b;
  std::vector<Vec3> x;
  b.reserve(corrs.size());
  x.reserve(corrs.size());
  for (const auto& c : corrs) {
    b.push_back(c.bearing);
    x.push_back(c.point);
  }
  return ransac_pnp(b, x, opts);
}

PoseError pose_errors(const RigidTransform& est, const RigidTransform& gt) {
  const Mat3 rel = est.rotation.transpose() * gt.rotation;
  // Same angle as arccos((trace - 1) / 2), evaluated without its loss of
  // precision near 0 and 180 degrees.
  const Vec3 axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  const double angle = std::atan2(0.5 * axis.norm(), 0.5 * (rel.trace() - 1.0));
  return {(est.translation - gt.translation).norm(),
          std::clamp(angle * 180.0 / std::numbers::pi, 0.0, 180.0)};
}

AccuracyBuckets bucketize(const PoseError& err) {
  auto within = [&](const AccuracyThreshold& t) {
    return err.translation_m <= t.translation_m && err.rotation_deg <= t.rotation_deg;
  };
  return {within(kHighAccuracy), within(kMediumAccuracy), within(kLowAccuracy)};
}

}  // namespace omniloc
