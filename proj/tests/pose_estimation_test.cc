#include "omniloc/pose_estimation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "omniloc/error.hpp"
#include "test_util.hpp"

namespace omniloc {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Scene {
  RigidTransform truth;
  std::vector<Vec3> points;
  std::vector<Bearing> bearings;
};

// Points scattered on all sides of the camera, 2 to 10 m away.
Scene make_scene(std::mt19937_64& rng, int n, double outlier_ratio = 0.0, double noise_deg = 0.0) {
  Scene s;
  s.truth = testing::random_pose(rng);
  std::uniform_real_distribution<double> range(2.0, 10.0);
  std::normal_distribution<double> noise(0.0, noise_deg * kDeg);
  const int outliers = static_cast<int>(std::round(outlier_ratio * n));
  for (int i = 0; i < n; ++i) {
    const Vec3 dir = testing::random_unit(rng);
    const Vec3 x = s.truth * (range(rng) * dir);
    Bearing b = dir;
    if (i < outliers) {
      b = testing::random_unit(rng);
    } else if (noise_deg > 0.0) {
      const Vec3 axis = testing::random_unit(rng).cross(b).normalized();
      b = exp_so3(axis * noise(rng)) * b;
    }
    s.points.push_back(x);
    s.bearings.push_back(b.normalized());
  }
  return s;
}

double quaternion_angle_deg(const Mat3& a, const Mat3& b) {
  const Eigen::Quaterniond qa(a), qb(b);
  const Eigen::Quaterniond rel = qa.conjugate() * qb;
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w())) / kDeg;
}

TEST(LiftReference, IdentityPoseCenterPixel) {
  const EquirectModel model(8, 4);
  DepthMap depth(8, 4, 2.0f);
  const auto x = lift_reference(Pixel(4, 2), depth, RigidTransform::identity(), model);
  ASSERT_TRUE(x);
  EXPECT_LT((*x - Vec3(0, 0, 2)).norm(), 1e-15);

  const RigidTransform shifted{Mat3::Identity(), Vec3(1, -2, 3)};
  const auto y = lift_reference(Pixel(4, 2), depth, shifted, model);
  EXPECT_LT((*y - Vec3(1, -2, 5)).norm(), 1e-15);
}

TEST(LiftReference, InvalidDepthIsDroppedNotFatal) {
  const EquirectModel model(8, 4);
  DepthMap depth(8, 4, 2.0f);
  depth.at(4, 2) = 0.0f;
  depth.at(5, 2) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_FALSE(lift_reference(Pixel(4.5, 2.5), depth, RigidTransform::identity(), model));
  EXPECT_FALSE(lift_reference(Pixel(5.5, 2.5), depth, RigidTransform::identity(), model));
  EXPECT_THROW(lift_reference(Pixel(9, 2), depth, RigidTransform::identity(), model), Error);

  const std::vector<PixelMatch> matches{{Pixel(1, 1), Pixel(4.5, 2.5)},
                                        {Pixel(1, 1), Pixel(1.5, 1.5)},
                                        {Pixel(-5, 1), Pixel(1.5, 1.5)}};
  LiftStats stats;
  const auto corrs = build_correspondences(matches, CameraModel(EquirectModel(8, 4)), depth,
                                           RigidTransform::identity(), model, &stats);
  EXPECT_EQ(corrs.size(), 1u);
  EXPECT_EQ(stats.kept, 1);
  EXPECT_EQ(stats.dropped_invalid_depth, 1);
  EXPECT_EQ(stats.dropped_query_domain, 1);
}

TEST(LiftReference, RoomDepthLandsOnWalls) {
  // Analytic axis-aligned box around the camera, depth along the ray.
  const Vec3 lo(-3, -1.5, -4), hi(5, 1.2, 2.5);
  const EquirectModel model(256, 128);
  DepthMap depth(256, 128, 0.0f);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 256; ++x) {
      const Vec3 d = unproject(model, Pixel(x + 0.5, y + 0.5));
      double t = 1e30;
      for (int k = 0; k < 3; ++k) {
        if (d[k] > 0) t = std::min(t, hi[k] / d[k]);
        if (d[k] < 0) t = std::min(t, lo[k] / d[k]);
      }
      depth.at(x, y) = static_cast<float>(t);
    }
  }
  const RigidTransform pose{rotation_from_ypr(0.4, 0.1, -0.2), Vec3(10, 20, 1)};
  for (int y = 0; y < 128; y += 7) {
    for (int x = 0; x < 256; x += 5) {
      const auto w = lift_reference(Pixel(x + 0.5, y + 0.5), depth, pose, model);
      ASSERT_TRUE(w);
      const Vec3 local = pose.inverse() * *w;
      double gap = 1e30;
      for (int k = 0; k < 3; ++k) {
        gap = std::min({gap, std::abs(local[k] - lo[k]), std::abs(local[k] - hi[k])});
      }
      // Depth is stored as f32, so the tolerance is a float ulp at ~6 m.
      EXPECT_LT(gap, 1e-6);
    }
  }
}

TEST(P3P, RecoversSynthesisPose) {
  std::mt19937_64 rng(21);
  int recovered = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Scene s = make_scene(rng, 3);
    const auto cands = solve_p3p_bearings({s.bearings[0], s.bearings[1], s.bearings[2]},
                                          {s.points[0], s.points[1], s.points[2]});
    ASSERT_LE(cands.size(), 4u);
    for (const auto& c : cands) {
      for (int i = 0; i < 3; ++i) EXPECT_LT(angular_residual(c, s.bearings[i], s.points[i]), 1e-9);
    }
    const bool hit = std::any_of(cands.begin(), cands.end(), [&](const RigidTransform& c) {
      return (c.translation - s.truth.translation).norm() < 1e-8 &&
             (c.rotation - s.truth.rotation).norm() < 1e-8;
    });
    recovered += hit;
  }
  // Near-degenerate draws can lose a few digits; the vast majority must be exact.
  EXPECT_GE(recovered, 495);
}

TEST(P3P, CollinearPointsGiveNoCandidates) {
  const std::array<Vec3, 3> pts{Vec3(0, 0, 5), Vec3(1, 0, 5), Vec3(2, 0, 5)};
  std::array<Bearing, 3> b;
  for (int i = 0; i < 3; ++i) b[i] = pts[i].normalized();
  EXPECT_TRUE(solve_p3p_bearings(b, pts).empty());
}

TEST(P3P, CyclicPermutationGivesSameSet) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Scene s = make_scene(rng, 3);
    const auto a = solve_p3p_bearings({s.bearings[0], s.bearings[1], s.bearings[2]},
                                      {s.points[0], s.points[1], s.points[2]});
    const auto b = solve_p3p_bearings({s.bearings[1], s.bearings[2], s.bearings[0]},
                                      {s.points[1], s.points[2], s.points[0]});
    ASSERT_EQ(a.size(), b.size());
    for (const auto& ca : a) {
      const bool found = std::any_of(b.begin(), b.end(), [&](const RigidTransform& cb) {
        return (ca.translation - cb.translation).norm() < 1e-7 &&
               (ca.rotation - cb.rotation).norm() < 1e-7;
      });
      EXPECT_TRUE(found);
    }
  }
}

TEST(Ransac, ExactCorrespondencesRecoverPose) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Scene s = make_scene(rng, 50);
    const RansacResult r = ransac_pnp(s.bearings, s.points, {.seed = 42u + trial});
    const PoseError e = pose_errors(r.pose, s.truth);
    EXPECT_LT(e.translation_m, 1e-6);
    EXPECT_LT(e.rotation_deg, 1e-6);
    EXPECT_EQ(r.inliers.size(), 50u);
  }
}

TEST(Ransac, OutliersAndNoise) {
  std::mt19937_64 rng(2);
  int good = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const Scene s = make_scene(rng, 50, 0.3, 0.1);
    const RansacResult r = ransac_pnp(s.bearings, s.points, {.seed = 7u + trial});
    const PoseError e = pose_errors(r.pose, s.truth);
    good += e.rotation_deg < 0.1 && e.translation_m < 0.2;
  }
  EXPECT_GE(good, 29);
}

TEST(Ransac, DeterministicUnderSeed) {
  std::mt19937_64 rng(3);
  const Scene s = make_scene(rng, 40, 0.3, 0.1);
  const RansacResult a = ransac_pnp(s.bearings, s.points, {.seed = 5});
  const RansacResult b = ransac_pnp(s.bearings, s.points, {.seed = 5});
  EXPECT_EQ(a.pose.rotation, b.pose.rotation);
  EXPECT_EQ(a.pose.translation, b.pose.translation);
  EXPECT_EQ(a.inliers, b.inliers);
}

TEST(Ransac, Preconditions) {
  std::mt19937_64 rng(4);
  const Scene s = make_scene(rng, 3);
  try {
    ransac_pnp(s.bearings, s.points);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
  // Pure noise: no hypothesis explains four pairs.
  Scene junk = make_scene(rng, 12, 1.0);
  try {
    ransac_pnp(junk.bearings, junk.points, {.angular_threshold = 1e-6, .max_iterations = 200});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLocalizationFailed);
  }
}

TEST(Ransac, GaugeConsistency) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Scene s = make_scene(rng, 50, 0.2, 0.1);
    const RansacResult r = ransac_pnp(s.bearings, s.points, {.seed = 3});
    const PoseError e = pose_errors(r.pose, s.truth);

    const RigidTransform g = testing::random_pose(rng, 50.0);
    for (auto& x : s.points) x = g * x;
    const RansacResult rg = ransac_pnp(s.bearings, s.points, {.seed = 3});
    const PoseError eg = pose_errors(rg.pose, g * s.truth);
    EXPECT_NEAR(e.translation_m, eg.translation_m, 1e-9);
    EXPECT_NEAR(e.rotation_deg, eg.rotation_deg, 1e-9);
  }
}

TEST(Ransac, InliersGrowWhenOutliersBecomeExact) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    Scene s = make_scene(rng, 50, 0.4, 0.05);
    const RansacResult before = ransac_pnp(s.bearings, s.points, {.seed = 11});
    for (int i = 0; i < 10; ++i) s.bearings[i] = (s.truth.inverse() * s.points[i]).normalized();
    const RansacResult after = ransac_pnp(s.bearings, s.points, {.seed = 11});
    EXPECT_GE(after.inliers.size(), before.inliers.size());
  }
}

TEST(Refine, NoiseFreeIsFixedPoint) {
  std::mt19937_64 rng(10);
  const Scene s = make_scene(rng, 30);
  const RefineResult r = refine_pose(s.truth, s.bearings, s.points);
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.rank_deficient);
  EXPECT_LT((r.pose.rotation - s.truth.rotation).norm(), 1e-10);
  EXPECT_LT((r.pose.translation - s.truth.translation).norm(), 1e-10);
}

TEST(Refine, NoisyObjectiveDecreasesMonotonically) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Scene s = make_scene(rng, 40, 0.0, 0.2);
    const RansacResult r = ransac_pnp(s.bearings, s.points, {.seed = 1, .refine = false});
    const RefineResult ref = refine_pose(r.pose, s.bearings, s.points);
    ASSERT_GE(ref.cost_trace.size(), 2u);
    EXPECT_LT(ref.cost_trace.back(), ref.cost_trace.front());
    for (size_t i = 1; i < ref.cost_trace.size(); ++i) {
      EXPECT_LE(ref.cost_trace[i], ref.cost_trace[i - 1]);
    }
    EXPECT_TRUE(ref.converged);
    EXPECT_LT(angular_objective_gradient(ref.pose, s.bearings, s.points).norm(), 1e-8);
  }
}

TEST(Refine, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Scene s = make_scene(rng, 20, 0.0, 2.0);
    // Perturb away from the optimum so the gradient is well above noise.
    Eigen::Matrix<double, 6, 1> kick;
    for (int k = 0; k < 6; ++k) kick[k] = 0.05 * testing::random_unit(rng).x();
    const RigidTransform pose = apply_tangent_update(s.truth, kick);
    const auto g = angular_objective_gradient(pose, s.bearings, s.points);
    Eigen::Matrix<double, 6, 1> fd;
    const double h = 1e-6;
    for (int k = 0; k < 6; ++k) {
      Eigen::Matrix<double, 6, 1> step = Eigen::Matrix<double, 6, 1>::Zero();
      step[k] = h;
      fd[k] = (angular_objective(apply_tangent_update(pose, step), s.bearings, s.points) -
               angular_objective(apply_tangent_update(pose, -step), s.bearings, s.points)) /
              (2 * h);
    }
    EXPECT_LT((g - fd).norm() / fd.norm(), 1e-5);
  }
}

TEST(Refine, RepeatedPointIsRankDeficient) {
  const std::vector<Vec3> pts(4, Vec3(1, 2, 5));
  const std::vector<Bearing> bs(4, Vec3(0.1, 0.3, 1).normalized());
  const RefineResult r = refine_pose(RigidTransform::identity(), bs, pts);
  EXPECT_TRUE(r.rank_deficient);
  EXPECT_FALSE(r.converged);
  EXPECT_THROW(refine_pose(RigidTransform::identity(), std::span(bs).first(3),
                           std::span(pts).first(3)),
               Error);
}

TEST(PoseErrors, TrivialCases) {
  const RigidTransform a{rotation_from_ypr(0.3, 0.2, 0.1), Vec3(1, 2, 3)};
  const PoseError same = pose_errors(a, a);
  EXPECT_EQ(same.translation_m, 0.0);
  EXPECT_NEAR(same.rotation_deg, 0.0, 1e-12);
  const RigidTransform yawed{a.rotation * rotation_from_ypr(std::numbers::pi, 0, 0), a.translation};
  EXPECT_NEAR(pose_errors(yawed, a).rotation_deg, 180.0, 1e-9);
}

TEST(PoseErrors, MatchesQuaternionOracle) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 1000; ++i) {
    const RigidTransform a = testing::random_pose(rng), b = testing::random_pose(rng);
    const PoseError e = pose_errors(a, b);
    EXPECT_NEAR(e.rotation_deg, quaternion_angle_deg(a.rotation, b.rotation), 1e-9);
    EXPECT_NEAR(e.translation_m, (a.translation - b.translation).norm(), 1e-12);
  }
}

TEST(Bucketize, ThresholdExamples) {
  auto as_tuple = [](AccuracyBuckets b) { return std::tuple(b.high, b.medium, b.low); };
  EXPECT_EQ(as_tuple(bucketize({0.2, 1.5})), std::tuple(true, true, true));
  EXPECT_EQ(as_tuple(bucketize({0.3, 1.0})), std::tuple(false, true, true));
  EXPECT_EQ(as_tuple(bucketize({6.0, 1.0})), std::tuple(false, false, false));
  EXPECT_EQ(as_tuple(bucketize({0.25, 2.0})), std::tuple(true, true, true));
  EXPECT_EQ(as_tuple(bucketize({0.1, 7.0})), std::tuple(false, false, true));
}

TEST(Bucketize, NestedOnRandomSweep) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> t(0.0, 8.0), r(0.0, 15.0);
  for (int i = 0; i < 10000; ++i) {
    const AccuracyBuckets b = bucketize({t(rng), r(rng)});
    EXPECT_TRUE(!b.high || b.medium);
    EXPECT_TRUE(!b.medium || b.low);
  }
}

}  // namespace
}  // namespace omniloc
