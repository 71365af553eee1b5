#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "omniloc/geometry.hpp"
#include "omniloc/virtual_camera.hpp"

namespace omniloc {

/// L2-normalized global image embedding. `source_ref` names the parent 360
/// frame for descriptors of rectified crops and is empty otherwise.
class GlobalDescriptor {
 public:
  /// Normalizes `values`; throws on empty, zero or non-finite input.
  GlobalDescriptor(std::string id, std::span<const float> values, std::string source_ref = "");

  const std::string& id() const { return id_; }
  const std::string& source_ref() const { return source_ref_; }
  const std::vector<float>& vector() const { return vector_; }
  size_t dim() const { return vector_.size(); }
  /// Squared norm of the stored float vector, accumulated in double.
  double stored_norm2() const { return stored_norm2_; }
  /// Reference this descriptor votes for: source_ref if set, else id.
  const std::string& reference_key() const { return source_ref_.empty() ? id_ : source_ref_; }

 private:
  std::string id_;
  std::vector<float> vector_;
  std::string source_ref_;
  double stored_norm2_ = 1.0;
};

/// All crop descriptors of one 360 reference frame.
class FeatureGroup {
 public:
  FeatureGroup(std::string ref_id, std::vector<GlobalDescriptor> members);

  const std::string& ref_id() const { return ref_id_; }
  const std::vector<GlobalDescriptor>& members() const { return members_; }

 private:
  std::string ref_id_;
  std::vector<GlobalDescriptor> members_;
};

double cosine_similarity(const GlobalDescriptor& a, const GlobalDescriptor& b);

/// Best member similarity; the group score used for crop-expanded references.
double group_score(const GlobalDescriptor& q, const FeatureGroup& g);

/// Groups descriptors by reference_key(); groups come out sorted by ref id.
std::vector<FeatureGroup> group_by_reference(std::vector<GlobalDescriptor> descriptors);

struct ScoredRef {
  std::string ref_id;
  double score = 0.0;
};

struct RetrievalResult {
  std::string query_id;
  std::vector<ScoredRef> ranked;  // distinct ref ids, scores non-increasing
  int k_max = 0;
};

/// Top-k references by group score, ties broken by ascending ref id.
RetrievalResult retrieve_topk(const GlobalDescriptor& q, std::span<const FeatureGroup> db, int k);
/// Flat database: descriptors are grouped through reference_key() first.
RetrievalResult retrieve_topk(const GlobalDescriptor& q, std::span<const GlobalDescriptor> db,
                              int k);

struct RetrievalMetrics {
  int k = 0;
  double recall = 0.0;
  double precision = 0.0;
};

/// A retrieved reference is correct iff its camera center lies within
/// `d_threshold` meters of the query's. R@k: share of queries with at least
/// one correct reference in the top k. P@k: mean of (#correct in top k) / k.
std::vector<RetrievalMetrics> eval_retrieval(std::span<const RetrievalResult> results,
                                             const std::map<std::string, RigidTransform>& query_poses,
                                             const std::map<std::string, RigidTransform>& ref_poses,
                                             double d_threshold, std::span<const int> ks);

enum class RetrievalMode { kDirect, kVc1, kVc2 };

RetrievalMode parse_retrieval_mode(const std::string& name);
std::string to_string(RetrievalMode mode);

/// Image the external descriptor extractor must embed.
struct DescriptorRequest {
  enum class Kind {
    kAsIs,           // the image itself
    kRemapped,       // query remapped onto a masked equirect canvas
    kReferenceCrop,  // virtual camera rendered from a 360 reference
  };
  Kind kind = Kind::kAsIs;
  std::string image_id;  // source frame
  std::string camera;    // preset of the source (kRemapped) or of the crop
  Rotation rotation = Rotation::Identity();
  std::string name;      // output image / descriptor id
};

struct Vc2Config {
  bool cube_faces = true;
  bool include_bottom = false;
  int face_px = 512;
  std::vector<std::string> crop_presets = {"fisheye1", "fisheye2", "fisheye3"};
  int crops_per_preset = 1;
  std::uint64_t seed = 0;
  RotationRanges ranges{};
};

/// Deterministic rotation for crop `index` of `preset` taken from `ref_id`.
Rotation crop_rotation(const Vc2Config& cfg, const std::string& ref_id, const std::string& preset,
                       int index);

/// The crop set of one reference: cube faces followed by preset crops.
std::vector<DescriptorRequest> reference_crops(const std::string& ref_id, const Vc2Config& cfg);

struct RetrievalPlan {
  std::vector<DescriptorRequest> query;
  std::vector<DescriptorRequest> references;
};

/// Lists the images to embed for one query under `mode`. No inference happens here.
RetrievalPlan route_query(RetrievalMode mode, const std::string& query_id,
                          const std::string& query_camera, std::span<const std::string> ref_ids,
                          const Vc2Config& cfg = {});

}  // namespace omniloc
