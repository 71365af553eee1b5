#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omniloc/camera_models.hpp"
#include "omniloc/raster.hpp"

namespace omniloc {

/// Output of the query-to-panorama remap: pixels not covered by the source
/// camera are black and carry mask == 0.
struct MaskedEquirect {
  RasterImage image;
  std::vector<std::uint8_t> mask;  // 1 = covered, row-major

  bool covered(int x, int y) const { return mask[static_cast<size_t>(y) * image.width() + x] != 0; }
  /// Fraction of covered pixels, unweighted.
  double pixel_fraction() const;
  /// Fraction of the view sphere covered (rows weighted by cos(latitude)).
  double solid_angle_fraction() const;
  /// 1-channel 0/255 rendering of the mask.
  RasterImage mask_image() const;
};

/// Renders `target` from an equirectangular panorama: target pixel p takes
/// the panorama value at project_equirect(rot^T * unproject_target(p)).
/// Pixels outside the target's unprojection domain are black.
RasterImage extract_virtual(const RasterImage& pano, const CameraModel& target,
                            const Rotation& rot, Sampler sampler = Sampler::kBilinear,
                            int threads = 1);

/// Inverse warp onto a 2:1 canvas: canvas pixel p is filled from `img` at
/// project_source(rot * unproject_equirect(p)) when that lands inside the image.
MaskedEquirect remap_to_equirect(const RasterImage& img, const CameraModel& source,
                                 const Rotation& rot, int canvas_width, int canvas_height,
                                 Sampler sampler = Sampler::kBilinear, int threads = 1);

/// Nearest-neighbour version of extract_virtual for depth maps. Depth stays
/// "meters along the ray", which pure rotation preserves.
DepthMap warp_depth(const DepthMap& depth, const CameraModel& target, const Rotation& rot,
                    int threads = 1);

struct CubeFace {
  std::string id;
  Rotation rotation;  // panorama frame -> face frame
  PinholeModel model;
  RasterImage image;
};

/// Face ids and rotations in order front, right, back, left, up[, down].
std::vector<std::pair<std::string, Rotation>> cube_face_rotations(bool include_bottom);

/// 90 degree pinhole faces with fx = face_px / 2.
std::vector<CubeFace> cubemap_faces(const RasterImage& pano, int face_px, bool include_bottom,
                                    Sampler sampler = Sampler::kBilinear, int threads = 1);

struct AngleRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct RotationRanges {
  AngleRange yaw{0.0, 2.0 * 3.14159265358979323846};
  AngleRange pitch{-15.0 * 3.14159265358979323846 / 180.0, 15.0 * 3.14159265358979323846 / 180.0};
  AngleRange roll{0.0, 0.0};
};

/// Ry(yaw) * Rx(pitch) * Rz(roll) with each angle uniform on its range.
/// Deterministic in the seed on every platform.
Rotation sample_rotation(std::uint64_t seed, AngleRange yaw, AngleRange pitch, AngleRange roll);
inline Rotation sample_rotation(std::uint64_t seed, const RotationRanges& r = {}) {
  return sample_rotation(seed, r.yaw, r.pitch, r.roll);
}

}  // namespace omniloc
