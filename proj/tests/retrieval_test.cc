#include "omniloc/retrieval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "omniloc/error.hpp"

namespace omniloc {
namespace {

std::vector<float> random_vec(std::mt19937_64& rng, int dim) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  std::vector<float> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

GlobalDescriptor desc(std::string id, std::vector<float> v, std::string ref = "") {
  return GlobalDescriptor(std::move(id), v, std::move(ref));
}

RigidTransform at_x(double x) { return {Mat3::Identity(), Vec3(x, 0, 0)}; }

TEST(Descriptor, NormalizesOnIngest) {
  const GlobalDescriptor d = desc("a", {3, 4});
  EXPECT_FLOAT_EQ(d.vector()[0], 0.6f);
  EXPECT_FLOAT_EQ(d.vector()[1], 0.8f);
  std::mt19937_64 rng(1);
  const auto v = random_vec(rng, 256);
  // Power-of-two scaling is exact in float, so storage must match bit for bit.
  for (float c : {4.0f, 0.125f}) {
    std::vector<float> scaled = v;
    for (auto& x : scaled) x *= c;
    EXPECT_EQ(desc("a", v).vector(), desc("b", scaled).vector());
  }
  EXPECT_THROW(desc("z", {0, 0, 0}), Error);
  EXPECT_THROW(desc("e", {}), Error);
  EXPECT_THROW(desc("n", {1, std::numeric_limits<float>::quiet_NaN()}), Error);
}

TEST(Cosine, TrivialCases) {
  const auto a = desc("a", {1, 2, 3});
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-7);
  EXPECT_NEAR(cosine_similarity(a, desc("m", {-1, -2, -3})), -1.0, 1e-7);
  EXPECT_NEAR(cosine_similarity(desc("x", {1, 0}), desc("y", {0, 1})), 0.0, 1e-15);
  try {
    cosine_similarity(a, desc("b", {1, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(GroupScore, MaxOverMembers) {
  const FeatureGroup g("r", {desc("c0", {1, 0, 0}, "r"), desc("c1", {0, 1, 0}, "r"),
                             desc("c2", {1, 1, 0}, "r")});
  const auto q = desc("q", {1, 1, 0.2f});
  double best = -2.0;
  for (const auto& m : g.members()) best = std::max(best, cosine_similarity(q, m));
  EXPECT_EQ(group_score(q, g), best);
  EXPECT_NEAR(group_score(g.members()[1], g), 1.0, 1e-7);
  const FeatureGroup single("s", {desc("s0", {0.3f, 0.1f, 2}, "s")});
  EXPECT_EQ(group_score(q, single), cosine_similarity(q, single.members()[0]));
}

TEST(GroupScore, BruteForceOnRandomCases) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> size(1, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<GlobalDescriptor> members;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) members.push_back(desc("m" + std::to_string(i), random_vec(rng, 16), "g"));
    const FeatureGroup g("g", members);
    const auto q = desc("q", random_vec(rng, 16));
    double best = -2.0;
    for (const auto& m : members) {
      double dot = 0.0, nq = 0.0, nm = 0.0;
      for (size_t k = 0; k < 16; ++k) {
        dot += static_cast<double>(q.vector()[k]) * m.vector()[k];
        nq += static_cast<double>(q.vector()[k]) * q.vector()[k];
        nm += static_cast<double>(m.vector()[k]) * m.vector()[k];
      }
      best = std::max(best, dot / std::sqrt(nq) / std::sqrt(nm));
    }
    EXPECT_NEAR(group_score(q, g), best, 1e-12);
    for (const auto& m : members) EXPECT_GE(group_score(q, g), cosine_similarity(q, m));
  }
}

TEST(FeatureGroupType, Validation) {
  EXPECT_THROW(FeatureGroup("r", {}), Error);
  EXPECT_THROW(FeatureGroup("r", {desc("c", {1, 0}, "other")}), Error);
  EXPECT_THROW(FeatureGroup("r", {desc("c", {1, 0}, "r"), desc("d", {1, 0, 0}, "r")}), Error);
}

TEST(RetrieveTopk, QueryInDatabaseRanksFirst) {
  std::mt19937_64 rng(3);
  std::vector<GlobalDescriptor> db;
  for (int i = 0; i < 10; ++i) db.push_back(desc("r" + std::to_string(i), random_vec(rng, 32)));
  const RetrievalResult r = retrieve_topk(db[6], db, 3);
  ASSERT_EQ(r.ranked.size(), 3u);
  EXPECT_EQ(r.ranked[0].ref_id, "r6");
  EXPECT_NEAR(r.ranked[0].score, 1.0, 1e-7);
  EXPECT_EQ(retrieve_topk(db[0], db, 50).ranked.size(), 10u);
}

TEST(RetrieveTopk, RankingIgnoresDescriptorScale) {
  std::mt19937_64 rng(7);
  std::vector<GlobalDescriptor> db;
  for (int i = 0; i < 10; ++i) db.push_back(desc("r" + std::to_string(i), random_vec(rng, 32)));
  auto v = random_vec(rng, 32);
  const RetrievalResult a = retrieve_topk(desc("q", v), db, 10);
  for (auto& x : v) x *= 37.5f;
  const RetrievalResult b = retrieve_topk(desc("q", v), db, 10);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.ranked[i].ref_id, b.ranked[i].ref_id);
}

TEST(RetrieveTopk, MatchesFullSort) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GlobalDescriptor> db;
    for (int i = 0; i < 10; ++i) db.push_back(desc("r" + std::to_string(i), random_vec(rng, 8)));
    const auto q = desc("q", random_vec(rng, 8));
    std::vector<std::pair<double, std::string>> all;
    for (const auto& d : db) all.emplace_back(-cosine_similarity(q, d), d.id());
    std::sort(all.begin(), all.end());
    const RetrievalResult r = retrieve_topk(q, db, 10);
    ASSERT_EQ(r.ranked.size(), 10u);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(r.ranked[i].ref_id, all[i].second);
  }
}

TEST(RetrieveTopk, DedupsCropsAndBreaksTiesById) {
  const std::vector<GlobalDescriptor> db{desc("b__0", {1, 0}, "b"), desc("b__1", {0.9f, 0.1f}, "b"),
                                         desc("a__0", {1, 0}, "a"), desc("c__0", {0, 1}, "c")};
  const RetrievalResult r = retrieve_topk(desc("q", {1, 0}), db, 5);
  ASSERT_EQ(r.ranked.size(), 3u);
  EXPECT_EQ(r.ranked[0].ref_id, "a");
  EXPECT_EQ(r.ranked[1].ref_id, "b");
  EXPECT_EQ(r.ranked[2].ref_id, "c");
  std::set<std::string> ids;
  for (const auto& s : r.ranked) ids.insert(s.ref_id);
  EXPECT_EQ(ids.size(), r.ranked.size());
}

TEST(RetrieveTopk, CropCopyFindsParentAtRankOne) {
  std::mt19937_64 rng(5);
  std::vector<GlobalDescriptor> crops;
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 8; ++c) {
      crops.push_back(desc("ref" + std::to_string(r) + "__" + std::to_string(c), random_vec(rng, 64),
                           "ref" + std::to_string(r)));
    }
  }
  const auto groups = group_by_reference(crops);
  ASSERT_EQ(groups.size(), 20u);
  for (const auto& crop : crops) {
    const GlobalDescriptor q("q", crop.vector());
    const RetrievalResult res = retrieve_topk(q, groups, 5);
    EXPECT_EQ(res.ranked[0].ref_id, crop.source_ref());
    EXPECT_EQ(res.ranked[0].score, 1.0);
  }
}

TEST(EvalRetrieval, HandEnumeratedLineLayout) {
  // References along x at 0, 3, ..., 15 m; queries at 1, 7, 14 and 30 m.
  std::map<std::string, RigidTransform> refs, queries;
  for (int i = 0; i < 6; ++i) refs["r" + std::to_string(i)] = at_x(3.0 * i);
  queries["q1"] = at_x(1);
  queries["q2"] = at_x(7);
  queries["q3"] = at_x(14);
  queries["q4"] = at_x(30);
  auto ranked = [](std::string q, std::vector<std::string> ids) {
    RetrievalResult r{q, {}, 5};
    double s = 1.0;
    for (auto& id : ids) r.ranked.push_back({id, s -= 0.1});
    return r;
  };
  const std::vector<RetrievalResult> results{
      ranked("q1", {"r5", "r0", "r3", "r1", "r4"}),
      ranked("q2", {"r2", "r0", "r1", "r5", "r4"}),
      ranked("q3", {"r0", "r1", "r2", "r3", "r5"}),
      ranked("q4", {"r0", "r1", "r2", "r3", "r4"}),
  };
  // Correct within 5 m: q1 {r0 r1 r2}, q2 {r1 r2 r3 r4}, q3 {r3 r4 r5}, q4 {}.
  // Top-1 hits: q2 only. Top-5 hits: q1 2, q2 3, q3 2, q4 0.
  const std::vector<int> ks{1, 5};
  const auto m = eval_retrieval(results, queries, refs, 5.0, ks);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].k, 1);
  EXPECT_DOUBLE_EQ(m[0].recall, 0.25);
  EXPECT_DOUBLE_EQ(m[0].precision, 0.25);
  EXPECT_EQ(m[1].k, 5);
  EXPECT_DOUBLE_EQ(m[1].recall, 0.75);
  EXPECT_DOUBLE_EQ(m[1].precision, 0.35);
}

TEST(EvalRetrieval, AllOrNothing) {
  std::map<std::string, RigidTransform> refs{{"r", at_x(0)}, {"far", at_x(100)}};
  std::map<std::string, RigidTransform> queries{{"q", at_x(1)}};
  const std::vector<RetrievalResult> hit{{"q", {{"r", 0.9}, {"far", 0.1}}, 2}};
  const std::vector<int> ks{1, 2};
  EXPECT_EQ(eval_retrieval(hit, queries, refs, 5.0, ks)[0].recall, 1.0);
  EXPECT_EQ(eval_retrieval(hit, queries, refs, 5.0, ks)[1].precision, 0.5);
  const auto none = eval_retrieval(hit, queries, refs, 0.5, ks);
  for (const auto& m : none) {
    EXPECT_EQ(m.recall, 0.0);
    EXPECT_EQ(m.precision, 0.0);
  }
  refs.erase("far");
  try {
    eval_retrieval(hit, queries, refs, 5.0, ks);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingPose);
  }
}

TEST(EvalRetrieval, RecallMonotoneInK) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> pos(0.0, 60.0);
  std::map<std::string, RigidTransform> refs, queries;
  std::vector<GlobalDescriptor> db;
  for (int i = 0; i < 30; ++i) {
    refs["r" + std::to_string(i)] = at_x(pos(rng));
    db.push_back(desc("r" + std::to_string(i), random_vec(rng, 16)));
  }
  std::vector<RetrievalResult> results;
  for (int i = 0; i < 20; ++i) {
    queries["q" + std::to_string(i)] = at_x(pos(rng));
    results.push_back(retrieve_topk(desc("q" + std::to_string(i), random_vec(rng, 16)), db, 10));
  }
  const std::vector<int> ks{1, 2, 3, 5, 8, 10};
  const auto m = eval_retrieval(results, queries, refs, 5.0, ks);
  for (size_t i = 1; i < m.size(); ++i) EXPECT_GE(m[i].recall, m[i - 1].recall);
  for (const auto& x : m) EXPECT_LE(x.precision, x.recall);
}

TEST(Modes, ParseAndPrint) {
  for (auto m : {RetrievalMode::kDirect, RetrievalMode::kVc1, RetrievalMode::kVc2}) {
    EXPECT_EQ(parse_retrieval_mode(to_string(m)), m);
  }
  try {
    parse_retrieval_mode("vc3");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownMode);
  }
}

TEST(RouteQuery, Plans) {
  const std::vector<std::string> refs{"a", "b", "c", "d"};
  const RetrievalPlan direct = route_query(RetrievalMode::kDirect, "q", "pinhole", refs);
  ASSERT_EQ(direct.query.size(), 1u);
  EXPECT_EQ(direct.query[0].kind, DescriptorRequest::Kind::kAsIs);
  EXPECT_EQ(direct.references.size(), 4u);

  const RetrievalPlan vc1 = route_query(RetrievalMode::kVc1, "q", "pinhole", refs);
  ASSERT_EQ(vc1.query.size(), 1u);
  EXPECT_EQ(vc1.query[0].kind, DescriptorRequest::Kind::kRemapped);
  EXPECT_EQ(vc1.query[0].camera, "pinhole");
  EXPECT_EQ(vc1.references.size(), 4u);

  const RetrievalPlan vc2 = route_query(RetrievalMode::kVc2, "q", "fisheye2", refs);
  EXPECT_EQ(vc2.query.size(), 1u);
  ASSERT_EQ(vc2.references.size(), 32u);
  std::set<std::string> names;
  for (const auto& r : vc2.references) {
    EXPECT_EQ(r.kind, DescriptorRequest::Kind::kReferenceCrop);
    EXPECT_TRUE(is_rotation(r.rotation));
    names.insert(r.name);
  }
  EXPECT_EQ(names.size(), 32u);
  EXPECT_EQ(vc2.references[0].name, "a__cube_front");
  EXPECT_EQ(vc2.references[5].name, "a__fisheye1_0");
}

TEST(RouteQuery, PanoramaQueriesStayDirect) {
  const std::vector<std::string> refs{"a"};
  EXPECT_EQ(route_query(RetrievalMode::kVc1, "q", "360", refs).query[0].kind,
            DescriptorRequest::Kind::kAsIs);
  EXPECT_EQ(route_query(RetrievalMode::kVc2, "q", "360", refs).references.size(), 1u);
}

TEST(CropRotation, DeterministicAndDistinct) {
  const Vc2Config cfg;
  EXPECT_EQ(crop_rotation(cfg, "a", "fisheye1", 0), crop_rotation(cfg, "a", "fisheye1", 0));
  EXPECT_NE(crop_rotation(cfg, "a", "fisheye1", 0), crop_rotation(cfg, "b", "fisheye1", 0));
  EXPECT_NE(crop_rotation(cfg, "a", "fisheye1", 0), crop_rotation(cfg, "a", "fisheye1", 1));
  Vc2Config other = cfg;
  other.seed = 99;
  EXPECT_NE(crop_rotation(cfg, "a", "fisheye1", 0), crop_rotation(other, "a", "fisheye1", 0));
}

}  // namespace
}  // namespace omniloc
