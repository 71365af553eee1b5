#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "omniloc/camera_models.hpp"
#include "omniloc/geometry.hpp"
#include "omniloc/raster.hpp"

namespace omniloc {

/// Axis-aligned room, world z up, textured walls.
struct BoxRoom {
  Vec3 lo;
  Vec3 hi;

  /// Distance along unit `dir` from an interior point to the first wall.
  double ray_depth(const Vec3& origin, const Vec3& dir) const;
  /// Procedural wall colour at a surface point.
  std::array<std::uint8_t, 3> shade(const Vec3& x) const;
};

/// Renders `model` from camera-to-world `pose`; pixels without a bearing are black.
RasterImage render_room(const BoxRoom& room, const CameraModel& model, const RigidTransform& pose,
                        double brightness = 1.0);
DepthMap render_room_depth(const BoxRoom& room, const EquirectModel& model, const RigidTransform& pose);

/// Level camera at `position` looking along heading `yaw` (radians from
/// world +x toward +y), then tilted by pitch and roll.
RigidTransform upright_pose(const Vec3& position, double yaw, double pitch = 0.0, double roll = 0.0);

struct SynthOptions {
  std::vector<std::string> scenes = {"atrium", "concourse", "hall", "piatrium"};
  int references = 6;
  int queries_per_list = 2;  // per (camera, day/night) list
  std::vector<std::string> cameras = {"pinhole", "fisheye1", "fisheye2", "fisheye3", "360"};
  bool night = true;
  int pano_height = 128;        // reference panoramas are 2:1
  double query_scale = 0.125;   // query cameras keep their FoV at this resolution
  int match_refs = 2;           // nearest references that get a match file per query
  int matches = 80;
  double outlier_ratio = 0.25;
  double pixel_noise = 0.3;
  int descriptor_dim = 64;
  int ref_match_width = 1228;   // reference pixels in match files use a 1228x614 grid
  std::uint64_t seed = 0;
};

struct SynthScene {
  std::string name;
  std::string manifest;  // path
  int references = 0;
  int queries = 0;
  int match_files = 0;
};

struct SynthSummary {
  std::vector<SynthScene> scenes;
};

/// Writes one directory per scene (manifest, images, depth, per-camera preset
/// files, matches, descriptors) plus shared lidar fixtures:
/// clouds/run_a.xyz, clouds/run_b.bin, clouds/truth.txt and ba_scenario.txt.
SynthSummary generate_fixture(const std::string& out_dir, const SynthOptions& opts);

}  // namespace omniloc
