#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "omniloc/camera_models.hpp"
#include "omniloc/geometry.hpp"

namespace omniloc {

/// One frame line. Pose numbers are kept as written (tx ty tz qw qx qy qz)
/// so that saving and reloading reproduces the manifest exactly.
struct FrameEntry {
  std::string id;
  std::string image;  // relative to the manifest directory
  std::string depth;  // references only
  std::array<double, 7> pose_values{0, 0, 0, 1, 0, 0, 0};

  RigidTransform pose() const;
  bool operator==(const FrameEntry&) const = default;
};

struct QueryList {
  std::string camera;       // preset name
  std::string camera_file;  // optional preset file overriding the built-in one
  std::string time = "day";
  std::vector<FrameEntry> frames;

  /// `<camera>_<time>`, the query type used in reports.
  std::string label() const { return camera + "_" + time; }
  bool operator==(const QueryList&) const = default;
};

struct SceneManifest {
  std::string scene;
  double threshold_m = 10.0;
  std::string base_dir;  // directory holding the manifest file
  std::vector<FrameEntry> references;
  std::vector<QueryList> queries;

  /// Joins a manifest-relative path onto base_dir.
  std::string resolve(const std::string& relative) const;
  /// Camera of a query list, loaded from camera_file when set.
  CameraPreset camera(const QueryList& list) const;
  const FrameEntry* find_reference(const std::string& id) const;
  /// Query frame and the list it belongs to.
  std::optional<std::pair<const FrameEntry*, const QueryList*>> find_query(const std::string& id) const;

  bool operator==(const SceneManifest&) const = default;
};

/// 5 m for Concourse-like scenes, 10 m otherwise.
double default_threshold(const std::string& scene);

/// Parses manifest text. File existence is not checked here.
///
///   scene = atrium
///   threshold_m = 10
///   [reference]
///   <id> <image> <depth> tx ty tz qw qx qy qz
///   [query camera=fisheye1 time=night camera_file=cams/f1.txt]
///   <id> <image> tx ty tz qw qx qy qz
SceneManifest parse_manifest(const std::string& text, const std::string& base_dir = ".",
                             const std::string& origin = "<manifest>");

/// Reads and validates a manifest: every referenced file must exist.
SceneManifest load_manifest(const std::string& path);

std::string format_manifest(const SceneManifest& m);
void save_manifest(const std::string& path, const SceneManifest& m);

}  // namespace omniloc
