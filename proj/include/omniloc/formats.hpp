#pragma once

#include <map>
#include <string>
#include <vector>

#include "omniloc/geometry.hpp"
#include "omniloc/pose_estimation.hpp"
#include "omniloc/raster.hpp"
#include "omniloc/retrieval.hpp"

namespace omniloc {

// Depth maps: PFM, single channel ("Pf"), negative scale = little-endian,
// rows stored bottom-up.
DepthMap read_pfm(const std::string& path);
void write_pfm(const std::string& path, const DepthMap& depth);

// Pose files: one `frame_id tx ty tz qw qx qy qz` per line, camera-to-world,
// Hamilton quaternion. Blank lines and `#` comments are skipped.
using PoseTable = std::map<std::string, RigidTransform>;
PoseTable parse_poses(const std::string& text, const std::string& origin = "<poses>");
PoseTable read_poses(const std::string& path);
std::string format_pose_line(const std::string& id, const RigidTransform& pose);
void write_poses(const std::string& path, const PoseTable& poses);

// Descriptor files: magic "OLDC", u32 version (1), u32 count, u32 dim, then
// per record u16 name length, name, u16 source-ref length, source ref,
// dim x f32. All little-endian.
std::vector<GlobalDescriptor> read_descriptors(const std::string& path);
void write_descriptors(const std::string& path, const std::vector<GlobalDescriptor>& descriptors);

// Match files: header `# query=<name> ref=<name> model=<preset>` then one
// `qu qv ru rv` per line.
struct MatchFile {
  std::string query;
  std::string ref;
  std::string model;
  std::vector<PixelMatch> matches;
};
MatchFile parse_matches(const std::string& text, const std::string& origin = "<matches>");
MatchFile read_matches(const std::string& path);
void write_matches(const std::string& path, const MatchFile& m);

// Point clouds: ASCII `x y z` per line, or binary "OLPC", u32 count, count x 3 x f32 LE.
// read_cloud picks the format from the leading magic.
std::vector<Vec3> read_cloud(const std::string& path);
void write_cloud_xyz(const std::string& path, const std::vector<Vec3>& points);
void write_cloud_binary(const std::string& path, const std::vector<Vec3>& points);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace omniloc
