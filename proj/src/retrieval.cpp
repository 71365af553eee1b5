#include "omniloc/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "omniloc/error.hpp"
#include "omniloc/hash.hpp"

namespace omniloc {

GlobalDescriptor::GlobalDescriptor(std::string id, std::span<const float> values,
                                   std::string source_ref)
    : id_(std::move(id)), source_ref_(std::move(source_ref)) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "descriptor '" + id_ + "' is empty");
  double norm2 = 0.0;
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFinite, "descriptor '" + id_ + "' has non-finite entries");
    }
    norm2 += static_cast<double>(v) * v;
  }
  if (!(norm2 > 0.0)) throw Error(ErrorCode::kDomain, "descriptor '" + id_ + "' has zero norm");
  const double inv = 1.0 / std::sqrt(norm2);
  vector_.reserve(values.size());
  for (float v : values) vector_.push_back(static_cast<float>(v * inv));
  // Float storage leaves the norm a few ulps off 1; keep it so similarities
  // can be renormalized exactly.
  stored_norm2_ = 0.0;
  for (float v : vector_) stored_norm2_ += static_cast<double>(v) * v;
}

FeatureGroup::FeatureGroup(std::string ref_id, std::vector<GlobalDescriptor> members)
    : ref_id_(std::move(ref_id)), members_(std::move(members)) {
  if (members_.empty()) {
    throw Error(ErrorCode::kEmptyInput, "feature group '" + ref_id_ + "' has no members");
  }
  for (const auto& m : members_) {
    if (m.reference_key() != ref_id_) {
      throw Error(ErrorCode::kInvalidArgument,
                  "descriptor '" + m.id() + "' does not belong to group '" + ref_id_ + "'");
    }
    if (m.dim() != members_.front().dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "feature group '" + ref_id_ + "' mixes dimensions");
    }
  }
}

double cosine_similarity(const GlobalDescriptor& a, const GlobalDescriptor& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "descriptor dimensions differ: " +
                                                   std::to_string(a.dim()) + " vs " +
                                                   std::to_string(b.dim()));
  }
  const auto& x = a.vector();
  const auto& y = b.vector();
  double dot = 0.0;
  for (size_t i = 0; i < x.size(); ++i) dot += static_cast<double>(x[i]) * y[i];
  // sqrt(n * n) == n exactly, so a descriptor scores exactly 1 against itself.
  return std::clamp(dot / std::sqrt(a.stored_norm2() * b.stored_norm2()), -1.0, 1.0);
}

double group_score(const GlobalDescriptor& q, const FeatureGroup& g) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& m : g.members()) best = std::max(best, cosine_similarity(q, m));
  return best;
}

std::vector<FeatureGroup> group_by_reference(std::vector<GlobalDescriptor> descriptors) {
  std::map<std::string, std::vector<GlobalDescriptor>> by_ref;
  for (auto& d : descriptors) {
    const std::string key = d.reference_key();
    by_ref[key].push_back(std::move(d));
  }
  std::vector<FeatureGroup> groups;
  groups.reserve(by_ref.size());
  for (auto& [ref, members] : by_ref) groups.emplace_back(ref, std::move(members));
  return groups;
}

RetrievalResult retrieve_topk(const GlobalDescriptor& q, std::span<const FeatureGroup> db,
                              int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (db.empty()) throw Error(ErrorCode::kEmptyInput, "reference database is empty");
  std::map<std::string, double> best;
  for (const auto& g : db) {
    const double s = group_score(q, g);
    auto [it, inserted] = best.emplace(g.ref_id(), s);
    if (!inserted) it->second = std::max(it->second, s);
  }
  std::vector<ScoredRef> all;
  all.reserve(best.size());
  for (const auto& [ref, s] : best) all.push_back({ref, s});
  const size_t n = std::min(all.size(), static_cast<size_t>(k));
  std::partial_sort(all.begin(), all.begin() + n, all.end(),
                    [](const ScoredRef& a, const ScoredRef& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.ref_id < b.ref_id;
                    });
  all.resize(n);
  return {q.id(), std::move(all), k};
}

RetrievalResult retrieve_topk(const GlobalDescriptor& q, std::span<const GlobalDescriptor> db,
                              int k) {
  const auto groups = group_by_reference({db.begin(), db.end()});
  return retrieve_topk(q, groups, k);
}

std::vector<RetrievalMetrics> eval_retrieval(std::span<const RetrievalResult> results,
                                             const std::map<std::string, RigidTransform>& query_poses,
                                             const std::map<std::string, RigidTransform>& ref_poses,
                                             double d_threshold, std::span<const int> ks) {
  if (!(d_threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "distance threshold must be positive");
  }
  for (int k : ks) {
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  }
  std::vector<RetrievalMetrics> table;
  for (int k : ks) table.push_back({k, 0.0, 0.0});
  if (results.empty()) return table;

  for (const auto& r : results) {
    auto q = query_poses.find(r.query_id);
    if (q == query_poses.end()) {
      throw Error(ErrorCode::kMissingPose, "no pose for query '" + r.query_id + "'");
    }
    std::vector<bool> correct;
    correct.reserve(r.ranked.size());
    for (const auto& s : r.ranked) {
      auto ref = ref_poses.find(s.ref_id);
      if (ref == ref_poses.end()) {
        throw Error(ErrorCode::kMissingPose, "no pose for reference '" + s.ref_id + "'");
      }
      correct.push_back((q->second.translation - ref->second.translation).norm() <= d_threshold);
    }
    for (auto& row : table) {
      const size_t n = std::min(correct.size(), static_cast<size_t>(row.k));
      const auto hits = std::count(correct.begin(), correct.begin() + n, true);
      row.recall += hits > 0 ? 1.0 : 0.0;
      row.precision += static_cast<double>(hits) / row.k;
    }
  }
  for (auto& row : table) {
    row.recall /= results.size();
    row.precision /= results.size();
  }
  return table;
}

RetrievalMode parse_retrieval_mode(const std::string& name) {
  if (name == "direct") return RetrievalMode::kDirect;
  if (name == "vc1") return RetrievalMode::kVc1;
  if (name == "vc2") return RetrievalMode::kVc2;
  throw Error(ErrorCode::kUnknownMode, "unknown retrieval mode '" + name + "'");
}

std::string to_string(RetrievalMode mode) {
  switch (mode) {
    case RetrievalMode::kDirect: return "direct";
    case RetrievalMode::kVc1: return "vc1";
    case RetrievalMode::kVc2: return "vc2";
  }
  return "direct";
}

namespace {

bool is_panoramic(const std::string& camera) { return camera == "360" || camera == "equirect"; }

}  // namespace

Rotation crop_rotation(const Vc2Config& cfg, const std::string& ref_id, const std::string& preset,
                       int index) {
  const std::uint64_t seed = cfg.seed ^ fnv1a(ref_id + "/" + preset + "/" + std::to_string(index));
  return sample_rotation(seed, cfg.ranges);
}

std::vector<DescriptorRequest> reference_crops(const std::string& ref_id, const Vc2Config& cfg) {
  std::vector<DescriptorRequest> out;
  if (cfg.cube_faces) {
    for (const auto& [face, rot] : cube_face_rotations(cfg.include_bottom)) {
      out.push_back({DescriptorRequest::Kind::kReferenceCrop, ref_id, "cube_" + face, rot,
                     ref_id + "__cube_" + face});
    }
  }
  for (const auto& preset : cfg.crop_presets) {
    for (int i = 0; i < cfg.crops_per_preset; ++i) {
      out.push_back({DescriptorRequest::Kind::kReferenceCrop, ref_id, preset,
                     crop_rotation(cfg, ref_id, preset, i),
                     ref_id + "__" + preset + "_" + std::to_string(i)});
    }
  }
  return out;
}

RetrievalPlan route_query(RetrievalMode mode, const std::string& query_id,
                          const std::string& query_camera, std::span<const std::string> ref_ids,
                          const Vc2Config& cfg) {
  RetrievalPlan plan;
  // 360 queries already live in the reference domain.
  if (is_panoramic(query_camera)) mode = RetrievalMode::kDirect;
  switch (mode) {
    case RetrievalMode::kDirect:
    case RetrievalMode::kVc2:
      plan.query.push_back({DescriptorRequest::Kind::kAsIs, query_id, query_camera,
                            Rotation::Identity(), query_id});
      break;
    case RetrievalMode::kVc1:
      plan.query.push_back({DescriptorRequest::Kind::kRemapped, query_id, query_camera,
                            Rotation::Identity(), query_id + "__vc1"});
      break;
  }
  for (const auto& ref : ref_ids) {
    if (mode == RetrievalMode::kVc2) {
      auto crops = reference_crops(ref, cfg);
      plan.references.insert(plan.references.end(), crops.begin(), crops.end());
    } else {
      plan.references.push_back(
          {DescriptorRequest::Kind::kAsIs, ref, "360", Rotation::Identity(), ref});
    }
  }
  return plan;
}

}  // namespace omniloc
