#pragma once

#include <string>
#include <vector>

#include "omniloc/manifest.hpp"
#include "omniloc/retrieval.hpp"

namespace omniloc {

struct AugmentEntry {
  std::string name;
  std::string camera;  // "360", a preset name, or "cube_<face>"
  std::string image;   // path relative to the output directory
  RigidTransform pose;  // camera-to-world
};

struct AugmentInventory {
  int originals = 0;
  int crops = 0;
  std::vector<AugmentEntry> entries;  // each reference followed by its crops
};

struct AugmentOptions {
  Vc2Config vc2;
  double crop_scale = 1.0;  // resolution factor for preset crops
  int threads = 1;
};

/// Camera-to-world pose of a crop rendered with `rot` (panorama -> crop).
RigidTransform crop_pose(const RigidTransform& ref_pose, const Rotation& rot);

/// Names, cameras and poses of the training set, without touching any file.
AugmentInventory plan_augmented_set(const SceneManifest& manifest, const Vc2Config& cfg);

/// Writes images/<name>.png for every crop, copies the reference images, and
/// writes labels.txt (`name camera tx ty tz qw qx qy qz`) and inventory.json.
AugmentInventory emit_augmented_set(const SceneManifest& manifest, const AugmentOptions& opts,
                                    const std::string& out_dir);

std::string format_labels(const AugmentInventory& inv);
std::string inventory_json(const AugmentInventory& inv);

/// Camera used to render a VC2 crop request.
CameraModel crop_camera(const DescriptorRequest& req, const Vc2Config& cfg, double crop_scale);

}  // namespace omniloc
