// Minimal absolute pose on bearing vectors in the style of Lambda Twist:
// the three distance constraints are combined into a degenerate conic whose
// factorization into two planes reduces the problem to quadratics.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "omniloc/pose_estimation.hpp"

namespace omniloc {
namespace {

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0, Newton-polished.
std::vector<double> real_cubic_roots(double c3, double c2, double c1, double c0) {
  const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  if (scale == 0.0) return {};
  c3 /= scale;
  c2 /= scale;
  c1 /= scale;
  c0 /= scale;
  std::vector<double> roots;
  if (std::abs(c3) < 1e-12) {
    if (std::abs(c2) < 1e-12) {
      if (std::abs(c1) > 0.0) roots.push_back(-c0 / c1);
    } else {
      const double disc = c1 * c1 - 4.0 * c2 * c0;
      if (disc >= 0.0) {
        const double q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
        roots.push_back(q / c2);
        if (q != 0.0) roots.push_back(c0 / q);
      }
    }
  } else {
    const double a = c2 / c3, b = c1 / c3, c = c0 / c3;
    const double q = (a * a - 3.0 * b) / 9.0;
    const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
    const double q3 = q * q * q;
    if (r * r < q3) {
      const double theta = std::acos(std::clamp(r / std::sqrt(q3), -1.0, 1.0));
      const double m = -2.0 * std::sqrt(q);
      for (int k = 0; k < 3; ++k) {
        roots.push_back(m * std::cos((theta + 2.0 * M_PI * k) / 3.0) - a / 3.0);
      }
    } else {
      const double big = -std::copysign(std::cbrt(std::abs(r) + std::sqrt(r * r - q3)), r);
      const double small = big == 0.0 ? 0.0 : q / big;
      roots.push_back(big + small - a / 3.0);
    }
  }
  for (double& x : roots) {
    for (int it = 0; it < 4; ++it) {
      const double f = ((c3 * x + c2) * x + c1) * x + c0;
      const double df = (3.0 * c3 * x + 2.0 * c2) * x + c1;
      if (df == 0.0) break;
      x -= f / df;
    }
  }
  return roots;
}

struct Quadric {
  double pp, pq, qq;
};

Quadric restrict(const Mat3& m, const Vec3& p, const Vec3& q) {
  return {p.dot(m * p), p.dot(m * q), q.dot(m * q)};
}

// Refines depths against the three squared-distance constraints.
void refine_depths(Vec3& l, const double b01, const double b02, const double b12, const double a01,
                   const double a02, const double a12) {
  for (int it = 0; it < 5; ++it) {
    const Vec3 r(l(0) * l(0) + l(1) * l(1) - 2.0 * b01 * l(0) * l(1) - a01,
                 l(0) * l(0) + l(2) * l(2) - 2.0 * b02 * l(0) * l(2) - a02,
                 l(1) * l(1) + l(2) * l(2) - 2.0 * b12 * l(1) * l(2) - a12);
    if (r.cwiseAbs().maxCoeff() < 1e-15 * std::max({a01, a02, a12})) break;
    Mat3 j;
    j << 2.0 * l(0) - 2.0 * b01 * l(1), 2.0 * l(1) - 2.0 * b01 * l(0), 0.0,
        2.0 * l(0) - 2.0 * b02 * l(2), 0.0, 2.0 * l(2) - 2.0 * b02 * l(0), 0.0,
        2.0 * l(1) - 2.0 * b12 * l(2), 2.0 * l(2) - 2.0 * b12 * l(1);
    const Eigen::FullPivLU<Mat3> lu(j);
    if (!lu.isInvertible()) break;
    l -= lu.solve(r);
  }
}

}  // namespace

std::vector<RigidTransform> solve_p3p_bearings(const std::array<Bearing, 3>& bearings,
                                               const std::array<Vec3, 3>& points) {
  const Vec3& x0 = points[0];
  const Vec3& x1 = points[1];
  const Vec3& x2 = points[2];
  const double a01 = (x0 - x1).squaredNorm();
  const double a02 = (x0 - x2).squaredNorm();
  const double a12 = (x1 - x2).squaredNorm();
  const double scale2 = std::max({a01, a02, a12});
  if (!(scale2 > 0.0) || (x1 - x0).cross(x2 - x0).norm() < 1e-10 * scale2) return {};

  const std::array<Bearing, 3> y = {bearings[0].normalized(), bearings[1].normalized(),
                                    bearings[2].normalized()};
  if (std::abs(y[0].dot(y[1].cross(y[2]))) < 1e-10) return {};

  const double b01 = y[0].dot(y[1]);
  const double b02 = y[0].dot(y[2]);
  const double b12 = y[1].dot(y[2]);

  Mat3 m01, m02, m12;
  m01 << 1.0, -b01, 0.0, -b01, 1.0, 0.0, 0.0, 0.0, 0.0;
  m02 << 1.0, 0.0, -b02, 0.0, 0.0, 0.0, -b02, 0.0, 1.0;
  m12 << 0.0, 0.0, 0.0, 0.0, 1.0, -b12, 0.0, -b12, 1.0;

  // Homogeneous conics that every depth solution lies on.
  const Mat3 d1 = a12 * m01 - a01 * m12;
  const Mat3 d2 = a12 * m02 - a02 * m12;

  const double f0 = d1.determinant();
  const double f3 = d2.determinant();
  const double fp = (d1 + d2).determinant();
  const double fm = (d1 - d2).determinant();
  const double f2 = 0.5 * (fp + fm) - f0;
  const double f1 = 0.5 * (fp - fm) - f3;

  std::vector<double> gammas = real_cubic_roots(f3, f2, f1, f0);
  std::sort(gammas.begin(), gammas.end(),
            [](double a, double b) { return std::abs(a) > std::abs(b); });

  std::vector<Vec3> depth_solutions;
  for (const double gamma : gammas) {
    const Mat3 d0 = d1 + gamma * d2;
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(d0);
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(eig.eigenvalues()(a)) < std::abs(eig.eigenvalues()(b));
    });
    const double sa = eig.eigenvalues()(order[1]);
    const double sb = eig.eigenvalues()(order[2]);
    if (!(sa * sb < 0.0)) continue;
    const Vec3 e0 = eig.eigenvectors().col(order[0]);
    const Vec3 ea = eig.eigenvectors().col(order[1]);
    const Vec3 eb = eig.eigenvectors().col(order[2]);
    const double wa = std::sqrt(std::abs(sa));
    const double wb = std::sqrt(std::abs(sb));

    for (const double sign : {1.0, -1.0}) {
      // The conic splits into the planes n . lambda = 0.
      const Vec3 n = wa * ea + sign * wb * eb;
      const Vec3 p = e0;
      const Vec3 q = n.cross(e0).normalized();
      Quadric c = restrict(d1, p, q);
      const Quadric c2 = restrict(d2, p, q);
      if (std::abs(c2.pp) + std::abs(c2.pq) + std::abs(c2.qq) >
          std::abs(c.pp) + std::abs(c.pq) + std::abs(c.qq)) {
        c = c2;
      }
      const double disc = c.pq * c.pq - c.pp * c.qq;
      if (disc < 0.0) continue;
      const double sq = std::sqrt(disc);
      std::vector<Vec3> directions;
      if (std::abs(c.pp) >= std::abs(c.qq)) {
        if (c.pp == 0.0) continue;
        for (const double s : {1.0, -1.0}) directions.push_back(((-c.pq + s * sq) / c.pp) * p + q);
      } else {
        for (const double s : {1.0, -1.0}) directions.push_back(p + ((-c.pq + s * sq) / c.qq) * q);
      }
      for (Vec3 v : directions) {
        const double denom = v.dot(m01 * v);
        const double denom2 = v.dot(m02 * v);
        double s2;
        if (std::abs(denom) >= std::abs(denom2)) {
          s2 = a01 / denom;
        } else {
          s2 = a02 / denom2;
        }
        if (!(s2 > 0.0)) continue;
        v *= std::sqrt(s2);
        if (v.sum() < 0.0) v = -v;
        if (!(v.minCoeff() > 0.0)) continue;
        refine_depths(v, b01, b02, b12, a01, a02, a12);
        if (!(v.minCoeff() > 0.0) || !v.allFinite()) continue;
        depth_solutions.push_back(v);
      }
    }
    if (!depth_solutions.empty()) break;
  }

  std::vector<RigidTransform> poses;
  Eigen::Matrix3d world, cam;
  for (int i = 0; i < 3; ++i) world.col(i) = points[i];
  for (const Vec3& l : depth_solutions) {
    for (int i = 0; i < 3; ++i) cam.col(i) = l(i) * y[i];
    // world -> camera rigid fit on the three points
    const Eigen::Matrix4d t = Eigen::umeyama(world, cam, false);
    RigidTransform world_to_cam{t.topLeftCorner<3, 3>(), t.topRightCorner<3, 1>()};
    RigidTransform pose = world_to_cam.inverse();
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) worst = std::max(worst, angular_residual(pose, y[i], points[i]));
    if (!(worst < 1e-6)) continue;
    const bool duplicate = std::any_of(poses.begin(), poses.end(), [&](const RigidTransform& o) {
      return (o.rotation - pose.rotation).norm() < 1e-9 &&
             (o.translation - pose.translation).norm() < 1e-9 * (1.0 + std::sqrt(scale2));
    });
    if (!duplicate) poses.push_back(pose);
  }
  return poses;
}

}  // namespace omniloc
