#include "omniloc/virtual_camera.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "omniloc/error.hpp"
#include "test_util.hpp"

namespace omniloc {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Smooth in the bearing, so it is continuous across the seam and the poles.
RasterImage gradient_pano(int w, int h) {
  const EquirectModel m(w, h);
  RasterImage img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 d = unproject(m, Pixel(x + 0.5, y + 0.5));
      img.at(x, y, 0) = static_cast<std::uint8_t>(std::lround(127.5 + 60 * d.x() + 50 * d.y() + 10 * d.z()));
      img.at(x, y, 1) = static_cast<std::uint8_t>(std::lround(127.5 - 40 * d.x() + 30 * d.z()));
      img.at(x, y, 2) = static_cast<std::uint8_t>(std::lround(127.5 + 80 * d.y() * d.z() + 20 * d.x()));
    }
  }
  return img;
}

// The presets, with the 6144x3072 panorama scaled down to keep tests quick.
std::vector<CameraPreset> small_presets() {
  std::vector<CameraPreset> out;
  for (const auto& p : default_presets()) {
    if (p.name == "360") {
      out.push_back({p.name, p.fov_deg, EquirectModel(768, 384)});
    } else {
      out.push_back(p);
    }
  }
  return out;
}

RasterImage constant_image(int w, int h, std::uint8_t v) {
  return RasterImage(w, h, 3, std::vector<std::uint8_t>(static_cast<size_t>(w) * h * 3, v));
}

TEST(ExtractVirtual, IdentityEquirectIsExactCopy) {
  const RasterImage pano = gradient_pano(128, 64);
  EXPECT_EQ(extract_virtual(pano, EquirectModel(128, 64), Mat3::Identity()), pano);
  EXPECT_EQ(extract_virtual(pano, EquirectModel(128, 64), Mat3::Identity(), Sampler::kNearest), pano);
}

TEST(ExtractVirtual, PinholeCenterSharesForwardAxis) {
  const RasterImage pano = gradient_pano(512, 256);
  const PinholeModel pin = pinhole_from_fov(192, 120, 85 * kDeg);
  const RasterImage out = extract_virtual(pano, pin, Mat3::Identity(), Sampler::kNearest);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(96, 60, c), pano.at(256, 128, c));
}

TEST(ExtractVirtual, ConstantPanoStaysConstant) {
  const RasterImage pano = constant_image(256, 128, 77);
  std::mt19937_64 rng(1);
  for (const auto& preset : small_presets()) {
    const RasterImage out =
        extract_virtual(pano, preset.model, testing::random_rotation(rng), Sampler::kBilinear, 2);
    const int w = out.width(), h = out.height();
    for (int y = 0; y < h; y += 37) {
      for (int x = 0; x < w; x += 41) {
        if (!try_unproject(preset.model, Pixel(x + 0.5, y + 0.5))) continue;
        EXPECT_EQ(out.at(x, y, 1), 77) << preset.name;
      }
    }
  }
}

TEST(ExtractVirtual, RejectsNonPanorama) {
  EXPECT_THROW(extract_virtual(constant_image(100, 100, 1), pinhole_from_fov(10, 10, 1.0), Mat3::Identity()),
               Error);
}

TEST(ExtractVirtual, ThreadCountDoesNotChangeOutput) {
  const RasterImage pano = gradient_pano(256, 128);
  const CameraModel& m = find_preset("fisheye3").model;
  const Mat3 r = rotation_from_ypr(0.4, 0.2, 0.1);
  const RasterImage a = extract_virtual(pano, m, r, Sampler::kBilinear, 1);
  EXPECT_EQ(a, extract_virtual(pano, m, r, Sampler::kBilinear, 3));
  EXPECT_EQ(a, extract_virtual(pano, m, r, Sampler::kBilinear, 8));
}

TEST(ExtractVirtual, RotationEquivariance) {
  const int w = 512, h = 256;
  const RasterImage pano = gradient_pano(w, h);
  const Mat3 r1 = rotation_from_ypr(0.7, -0.2, 0.1);
  const Mat3 r2 = rotation_from_ypr(-1.1, 0.3, -0.05);
  // Rotating the panorama by r2 is itself an equirect extraction.
  const RasterImage rotated = extract_virtual(pano, EquirectModel(w, h), r2);
  const PinholeModel pin = pinhole_from_fov(160, 100, 85 * kDeg);
  const RasterImage a = extract_virtual(rotated, pin, r1);
  const RasterImage b = extract_virtual(pano, pin, r1 * r2);
  double err = 0.0;
  for (size_t i = 0; i < a.data().size(); ++i) err += std::abs(a.data()[i] - b.data()[i]);
  EXPECT_LT(err / a.data().size(), 2.0);
}

TEST(RemapToEquirect, IdentityEquirectCoversEverything) {
  const RasterImage pano = gradient_pano(128, 64);
  const MaskedEquirect m = remap_to_equirect(pano, EquirectModel(128, 64), Mat3::Identity(), 128, 64);
  EXPECT_EQ(m.image, pano);
  EXPECT_DOUBLE_EQ(m.pixel_fraction(), 1.0);
  EXPECT_NEAR(m.solid_angle_fraction(), 1.0, 1e-12);
}

TEST(RemapToEquirect, RejectsNonPanoramaCanvas) {
  const PinholeModel pin = pinhole_from_fov(10, 10, 1.0);
  EXPECT_THROW(remap_to_equirect(constant_image(10, 10, 1), pin, Mat3::Identity(), 100, 60), Error);
  EXPECT_THROW(remap_to_equirect(constant_image(11, 10, 1), pin, Mat3::Identity(), 100, 50), Error);
}

TEST(RemapToEquirect, UncoveredPixelsAreBlack) {
  const PinholeModel pin = pinhole_from_fov(64, 40, 85 * kDeg);
  const MaskedEquirect m = remap_to_equirect(constant_image(64, 40, 200), pin, Mat3::Identity(), 256, 128);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 256; ++x) {
      EXPECT_EQ(m.image.at(x, y, 0), m.covered(x, y) ? 200 : 0);
    }
  }
  const RasterImage mask = m.mask_image();
  EXPECT_EQ(mask.channels(), 1);
  EXPECT_EQ(mask.at(128, 64, 0), 255);
  EXPECT_EQ(mask.at(0, 0, 0), 0);
}

TEST(RemapToEquirect, PinholeCoverageMatchesMonteCarloSolidAngle) {
  const PinholeModel pin = pinhole_from_fov(1920, 1200, 85 * kDeg);
  std::mt19937_64 rng(2);
  int inside = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const auto p = pin.project(testing::random_unit(rng));
    inside += p && p->x() >= 0 && p->x() <= 1920 && p->y() >= 0 && p->y() <= 1200;
  }
  const double oracle = static_cast<double>(inside) / n;
  const RasterImage src = constant_image(1920, 1200, 9);
  const MaskedEquirect m = remap_to_equirect(src, pin, Mat3::Identity(), 2048, 1024);
  EXPECT_NEAR(m.solid_angle_fraction() / oracle, 1.0, 0.01);
}

TEST(RemapToEquirect, CoverageMonotoneInFov) {
  const Mat3 r = rotation_from_ypr(0.3, 0.1, 0.0);
  double last = 0.0;
  for (const char* name : {"pinhole", "fisheye1", "fisheye2", "fisheye3"}) {
    const CameraModel& m = find_preset(name).model;
    const RasterImage src = constant_image(model_width(m), model_height(m), 50);
    const double f = remap_to_equirect(src, m, r, 512, 256).solid_angle_fraction();
    EXPECT_GT(f, last) << name;
    last = f;
  }
}

TEST(RemapToEquirect, RoundTripOnGradientPanorama) {
  const RasterImage pano = gradient_pano(1024, 512);
  std::mt19937_64 rng(3);
  for (const auto& preset : small_presets()) {
    const Mat3 r = testing::random_rotation(rng);
    const RasterImage view = extract_virtual(pano, preset.model, r);
    const MaskedEquirect back = remap_to_equirect(view, preset.model, r, 1024, 512);
    double err = 0.0;
    long count = 0;
    for (int y = 0; y < 512; ++y) {
      for (int x = 0; x < 1024; ++x) {
        if (!back.covered(x, y)) continue;
        for (int c = 0; c < 3; ++c) err += std::abs(back.image.at(x, y, c) - pano.at(x, y, c));
        count += 3;
      }
    }
    ASSERT_GT(count, 0);
    EXPECT_LT(err / count, 2.0) << preset.name;
  }
}

TEST(RayConsistency, ThroughPanoramaAndBack) {
  std::mt19937_64 rng(4);
  const EquirectModel equi(6144, 3072);
  for (const auto& preset : default_presets()) {
    const Mat3 r = testing::random_rotation(rng);
    std::uniform_real_distribution<double> ux(0, model_width(preset.model)), uy(0, model_height(preset.model));
    for (int i = 0; i < 2000; ++i) {
      const Pixel p(ux(rng), uy(rng));
      const auto d = try_unproject(preset.model, p);
      if (!d) continue;
      const auto q = equi.project(r.transpose() * *d);
      ASSERT_TRUE(q);
      const auto back = project(preset.model, r * unproject(equi, *q));
      ASSERT_TRUE(back);
      EXPECT_LT((*back - p).norm(), 0.5);
    }
  }
}

TEST(Cubemap, FiveOrSixFaces) {
  const RasterImage pano = constant_image(256, 128, 33);
  const auto five = cubemap_faces(pano, 32, false);
  ASSERT_EQ(five.size(), 5u);
  const std::vector<std::string> ids{"front", "right", "back", "left", "up"};
  for (size_t i = 0; i < five.size(); ++i) {
    EXPECT_EQ(five[i].id, ids[i]);
    EXPECT_DOUBLE_EQ(five[i].model.fx(), 16.0);
    EXPECT_TRUE(is_rotation(five[i].rotation));
    for (auto v : five[i].image.data()) ASSERT_EQ(v, 33);
  }
  EXPECT_EQ(cubemap_faces(pano, 32, true).size(), 6u);
}

TEST(Cubemap, SixFacesTileTheCanvas) {
  const auto faces = cube_face_rotations(true);
  std::vector<int> hits(512 * 256, 0);
  for (const auto& [id, rot] : faces) {
    const PinholeModel pin(64, 64, 32, 32, 32, 32);
    const MaskedEquirect m = remap_to_equirect(constant_image(64, 64, 1), pin, rot, 512, 256);
    for (size_t i = 0; i < hits.size(); ++i) hits[i] += m.mask[i];
  }
  for (int h : hits) EXPECT_GE(h, 1);
}

TEST(Cubemap, FacesPartitionDirections) {
  // Every bearing projects strictly inside exactly one face (ignoring edges).
  const auto faces = cube_face_rotations(true);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5000; ++i) {
    const Vec3 d = testing::random_unit(rng);
    int count = 0;
    for (const auto& [id, rot] : faces) {
      const Vec3 f = rot * d;
      count += f.z() > 0 && std::abs(f.x()) < f.z() && std::abs(f.y()) < f.z();
    }
    EXPECT_EQ(count, 1);
  }
}

TEST(WarpDepth, AnalyticField) {
  const EquirectModel equi(512, 256);
  DepthMap depth(512, 256);
  auto field = [](const Vec3& d) { return static_cast<float>(3.0 + d.x() + 0.5 * d.y()); };
  for (int y = 0; y < 256; ++y)
    for (int x = 0; x < 512; ++x) depth.at(x, y) = field(unproject(equi, Pixel(x + 0.5, y + 0.5)));

  EXPECT_EQ(warp_depth(depth, equi, Mat3::Identity()), depth);

  const PinholeModel pin = pinhole_from_fov(100, 80, 70 * kDeg);
  const Mat3 r = rotation_from_ypr(0.5, 0.2, 0.0);
  const DepthMap out = warp_depth(depth, pin, r);
  // Nearest lookup moves the bearing by at most half a diagonal panorama pixel.
  const double step = std::numbers::pi / 256 * std::sqrt(2.0) * 0.5 * std::sqrt(1.25);
  for (int y = 0; y < 80; ++y) {
    for (int x = 0; x < 100; ++x) {
      const Vec3 d = r.transpose() * unproject(pin, Pixel(x + 0.5, y + 0.5));
      EXPECT_NEAR(out.at(x, y), field(d), step + 1e-5);
    }
  }
  const DepthMap flat = warp_depth(DepthMap(512, 256, 4.0f), find_preset("fisheye2").model, r);
  for (int y = 0; y < flat.height(); y += 50)
    for (int x = 0; x < flat.width(); x += 50) EXPECT_EQ(flat.at(x, y), 4.0f);
}

TEST(SampleRotation, ZeroRangesGiveIdentity) {
  EXPECT_EQ(sample_rotation(7, {0, 0}, {0, 0}, {0, 0}), Mat3::Identity());
  EXPECT_EQ(sample_rotation(7), sample_rotation(7));
  EXPECT_NE(sample_rotation(7), sample_rotation(8));
  EXPECT_THROW(sample_rotation(1, {1.0, 0.0}, {0, 0}, {0, 0}), Error);
}

TEST(SampleRotation, YawHistogramIsUniform) {
  const int bins = 20, n = 10000;
  std::vector<int> counts(bins, 0);
  for (int i = 0; i < n; ++i) {
    const Mat3 r = sample_rotation(1000 + i);
    EXPECT_TRUE(is_rotation(r));
    // Ry(yaw) Rx(pitch): yaw is recoverable from the third column.
    double yaw = std::atan2(r(0, 2), r(2, 2));
    if (yaw < 0) yaw += 2 * std::numbers::pi;
    counts[std::min(bins - 1, static_cast<int>(yaw / (2 * std::numbers::pi) * bins))]++;
  }
  double chi2 = 0.0;
  const double expected = static_cast<double>(n) / bins;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 99th percentile of chi-square with 19 degrees of freedom.
  EXPECT_LT(chi2, 36.19);
}

TEST(SampleRotation, PitchStaysInRange) {
  for (int i = 0; i < 2000; ++i) {
    const Mat3 r = sample_rotation(i);
    const double pitch = std::asin(-r(1, 2));
    EXPECT_LE(std::abs(pitch), 15 * kDeg + 1e-12);
  }
}

}  // namespace
}  // namespace omniloc
