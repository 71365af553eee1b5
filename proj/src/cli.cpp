#include "omniloc/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "omniloc/augment.hpp"
#include "omniloc/error.hpp"
#include "omniloc/formats.hpp"
#include "omniloc/hash.hpp"
#include "omniloc/image_io.hpp"
#include "omniloc/lidar_ba.hpp"
#include "omniloc/manifest.hpp"
#include "omniloc/parallel.hpp"
#include "omniloc/pose_estimation.hpp"
#include "omniloc/report.hpp"
#include "omniloc/retrieval.hpp"
#include "omniloc/synthetic.hpp"
#include "omniloc/virtual_camera.hpp"

namespace omniloc {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr double kDeg = std::numbers::pi / 180.0;

struct Common {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "worker threads (default: OMNILOC_THREADS or 1)")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();
  auto* out = cmd->add_option("--out", c.out, "output path");
  if (out_required) out->required();
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

// Sibling path with a new extension: a/b.csv -> a/b.json.
std::string with_extension(const std::string& path, const std::string& ext) {
  return fs::path(path).replace_extension(ext).string();
}

void write_report(const std::string& path, const std::string& text) {
  ensure_parent(path);
  write_text_file(path, text);
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');) {
    try {
      size_t used = 0;
      out.push_back(std::stoi(tok, &used));
      if (used != tok.size() || out.back() < 1) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad list entry '" + tok + "' in '" + s + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "empty list");
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

CameraPreset resolve_camera(const std::string& name, const std::string& file) {
  if (!file.empty()) return load_camera_preset(file);
  if (name.empty()) throw Error(ErrorCode::kInvalidArgument, "give --camera or --camera-file");
  return find_preset(name);
}

Sampler parse_sampler(const std::string& s) {
  if (s == "bilinear") return Sampler::kBilinear;
  if (s == "nearest") return Sampler::kNearest;
  throw Error(ErrorCode::kUnknownMode, "unknown sampler '" + s + "'");
}

// Runtime goes to stderr so that reports stay byte-identical.
class Timer {
 public:
  explicit Timer(std::string what) : what_(std::move(what)), start_(std::chrono::steady_clock::now()) {}
  ~Timer() {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::cerr << what_ << ": " << format_decimal(s, 3) << " s\n";
  }

 private:
  std::string what_;
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------- remap / rectify / cubemap

struct ViewArgs {
  std::string image, camera, camera_file, sampler = "bilinear";
  double yaw = 0.0, pitch = 0.0, roll = 0.0;
};

void add_view_args(CLI::App* cmd, ViewArgs& v) {
  cmd->add_option("--image", v.image, "input image")->required();
  cmd->add_option("--camera", v.camera, "camera preset name");
  cmd->add_option("--camera-file", v.camera_file, "camera preset file");
  cmd->add_option("--yaw", v.yaw, "degrees")->capture_default_str();
  cmd->add_option("--pitch", v.pitch, "degrees")->capture_default_str();
  cmd->add_option("--roll", v.roll, "degrees")->capture_default_str();
  cmd->add_option("--sampler", v.sampler, "bilinear|nearest")->capture_default_str();
}

struct RemapArgs {
  Common c;
  ViewArgs v;
  int width = 1228;
};

int run_remap(const RemapArgs& a) {
  const CameraPreset cam = resolve_camera(a.v.camera, a.v.camera_file);
  const RasterImage img = read_image(a.v.image);
  const Rotation rot = rotation_from_ypr(a.v.yaw * kDeg, a.v.pitch * kDeg, a.v.roll * kDeg);
  const MaskedEquirect out = remap_to_equirect(img, cam.model, rot, a.width, a.width / 2,
                                               parse_sampler(a.v.sampler), a.c.threads);
  ensure_parent(a.c.out);
  write_image(a.c.out, out.image);
  write_image(with_extension(a.c.out, ".mask.png"), out.mask_image());
  std::cout << "coverage " << format_decimal(out.solid_angle_fraction()) << "\n";
  return 0;
}

struct RectifyArgs {
  Common c;
  ViewArgs v;
  bool random = false;
  double scale = 1.0;
  std::string depth, depth_out;
};

int run_rectify(const RectifyArgs& a) {
  const CameraPreset cam = resolve_camera(a.v.camera, a.v.camera_file);
  const CameraModel model = scale_model(cam.model, a.scale);
  const Rotation rot = a.random ? sample_rotation(a.c.seed)
                                : rotation_from_ypr(a.v.yaw * kDeg, a.v.pitch * kDeg, a.v.roll * kDeg);
  const RasterImage pano = read_image(a.v.image);
  ensure_parent(a.c.out);
  write_image(a.c.out, extract_virtual(pano, model, rot, parse_sampler(a.v.sampler), a.c.threads));
  if (!a.depth.empty()) {
    if (a.depth_out.empty()) throw Error(ErrorCode::kInvalidArgument, "--depth needs --depth-out");
    ensure_parent(a.depth_out);
    write_pfm(a.depth_out, warp_depth(read_pfm(a.depth), model, rot, a.c.threads));
  }
  std::cout << format_pose_line("rotation", {rot, Vec3::Zero()}) << "\n";
  return 0;
}

struct CubemapArgs {
  Common c;
  std::string image;
  int face_px = 512;
  bool include_bottom = false;
};

int run_cubemap(const CubemapArgs& a) {
  const RasterImage pano = read_image(a.image);
  const std::string stem = fs::path(a.image).stem().string();
  fs::create_directories(a.c.out);
  for (const auto& face : cubemap_faces(pano, a.face_px, a.include_bottom, Sampler::kBilinear, a.c.threads)) {
    write_image((fs::path(a.c.out) / (stem + "__cube_" + face.id + ".png")).string(), face.image);
  }
  return 0;
}

// ---------------------------------------------------------------- retrieval

struct RetrieveArgs {
  Common c;
  std::string db, queries, mode = "direct";
  int k = 10;
};

int run_retrieve(const RetrieveArgs& a) {
  const RetrievalMode mode = parse_retrieval_mode(a.mode);
  if (a.k < 1) throw Error(ErrorCode::kInvalidArgument, "--k must be positive");
  const auto groups = group_by_reference(read_descriptors(a.db));
  if (groups.empty()) throw Error(ErrorCode::kEmptyInput, a.db + ": no reference descriptors");
  auto queries = read_descriptors(a.queries);
  std::sort(queries.begin(), queries.end(),
            [](const GlobalDescriptor& x, const GlobalDescriptor& y) { return x.id() < y.id(); });
  std::vector<RetrievalResult> results(queries.size());
  parallel_for(static_cast<int>(queries.size()), a.c.threads,
               [&](int i) { results[i] = retrieve_topk(queries[i], groups, a.k); });
  write_report(a.c.out, retrieval_csv(results, to_string(mode)));
  write_report(with_extension(a.c.out, ".json"), retrieval_json(results, to_string(mode)));
  return 0;
}

struct EvalIrArgs {
  Common c;
  std::string manifest, ks = "1,5,10";
  std::vector<std::string> ranked;
  double threshold = 0.0;
};

int run_eval_ir(const EvalIrArgs& a) {
  const SceneManifest m = load_manifest(a.manifest);
  const double d = a.threshold > 0.0 ? a.threshold : m.threshold_m;
  const std::vector<int> ks = parse_int_list(a.ks);
  std::map<std::string, RigidTransform> refs, queries;
  for (const auto& r : m.references) refs[r.id] = r.pose();
  for (const auto& list : m.queries)
    for (const auto& f : list.frames) queries[f.id] = f.pose();

  std::vector<IrRow> rows;
  for (const auto& path : a.ranked) {
    const RankedFile file = parse_retrieval_csv(read_text_file(path), path);
    std::map<std::string, const RetrievalResult*> by_query;
    for (const auto& r : file.results) {
      if (!queries.count(r.query_id)) {
        throw Error(ErrorCode::kMissingPose, path + ": query '" + r.query_id + "' is not in the manifest");
      }
      by_query[r.query_id] = &r;
    }
    for (const auto& list : m.queries) {
      std::vector<RetrievalResult> subset;
      for (const auto& f : list.frames) {
        auto it = by_query.find(f.id);
        subset.push_back(it != by_query.end() ? *it->second : RetrievalResult{f.id, {}, 0});
      }
      if (subset.empty()) continue;
      for (const auto& metric : eval_retrieval(subset, queries, refs, d, ks)) {
        rows.push_back({list.label(), file.mode, metric.k, metric.recall, metric.precision});
      }
    }
  }
  write_report(a.c.out, ir_csv(rows));
  write_report(with_extension(a.c.out, ".json"), ir_json(rows));
  return 0;
}

// ---------------------------------------------------------------- localization

struct LocalizeArgs {
  Common c;
  std::string manifest, matches, ref_size = "1228x614";
  double threshold_deg = 0.5;
  int iterations = 10000;
  int min_inliers = 4;
};

std::pair<int, int> parse_size(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "size must look like WIDTHxHEIGHT, got '" + s + "'");
  }
}

struct QueryOutcome {
  std::string status = "failed";
  int match_files = 0;
  int matches = 0;
  int kept = 0;
  int inliers = 0;
  std::optional<RigidTransform> pose;
};

int run_localize(const LocalizeArgs& a) {
  const SceneManifest m = load_manifest(a.manifest);
  const auto [rw, rh] = parse_size(a.ref_size);
  const EquirectModel ref_model(rw, rh);

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(a.matches)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, std::vector<MatchFile>> per_query;
  for (const auto& f : files) {
    MatchFile mf = read_matches(f);
    const auto q = m.find_query(mf.query);
    if (!q) throw Error(ErrorCode::kMissingPose, f + ": query '" + mf.query + "' is not in the manifest");
    if (!m.find_reference(mf.ref)) {
      throw Error(ErrorCode::kMissingPose, f + ": reference '" + mf.ref + "' is not in the manifest");
    }
    if (mf.model != q->second->camera) {
      throw Error(ErrorCode::kInvalidArgument,
                  f + ": model '" + mf.model + "' differs from manifest camera '" + q->second->camera + "'");
    }
    per_query[mf.query].push_back(std::move(mf));
  }

  std::map<std::string, DepthMap> depths;
  for (const auto& [q, list] : per_query)
    for (const auto& mf : list)
      if (!depths.count(mf.ref)) depths[mf.ref] = read_pfm(m.resolve(m.find_reference(mf.ref)->depth));
  std::map<std::string, CameraPreset> cameras;
  for (const auto& list : m.queries) cameras.emplace(list.label(), m.camera(list));

  std::vector<std::string> ids;
  for (const auto& list : m.queries)
    for (const auto& f : list.frames) ids.push_back(f.id);
  std::sort(ids.begin(), ids.end());
  std::vector<QueryOutcome> outcomes(ids.size());

  RansacOptions base;
  base.angular_threshold = a.threshold_deg * kDeg;
  base.max_iterations = a.iterations;
  base.min_inliers = a.min_inliers;
  parallel_for(static_cast<int>(ids.size()), a.c.threads, [&](int i) {
    QueryOutcome& out = outcomes[i];
    auto it = per_query.find(ids[i]);
    if (it == per_query.end()) {
      out.status = "no_matches";
      return;
    }
    const auto q = m.find_query(ids[i]);
    const CameraModel& model = cameras.at(q->second->label()).model;
    std::vector<Correspondence> corrs;
    for (const auto& mf : it->second) {
      ++out.match_files;
      out.matches += static_cast<int>(mf.matches.size());
      const auto c = build_correspondences(mf.matches, model, depths.at(mf.ref),
                                           m.find_reference(mf.ref)->pose(), ref_model);
      corrs.insert(corrs.end(), c.begin(), c.end());
    }
    out.kept = static_cast<int>(corrs.size());
    RansacOptions opts = base;
    opts.seed = a.c.seed ^ fnv1a(ids[i]);
    try {
      const RansacResult r = ransac_pnp(corrs, opts);
      out.inliers = static_cast<int>(r.inliers.size());
      out.pose = r.pose;
      out.status = "ok";
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kLocalizationFailed && e.code() != ErrorCode::kInsufficientData) throw;
      out.status = error_code_name(e.code());
    }
  });

  std::string poses, csv = "query,match_files,matches,kept,inliers,status\n";
  ordered_json arr = ordered_json::array();
  for (size_t i = 0; i < ids.size(); ++i) {
    const auto& o = outcomes[i];
    if (o.pose) poses += format_pose_line(ids[i], *o.pose) + "\n";
    csv += ids[i] + "," + std::to_string(o.match_files) + "," + std::to_string(o.matches) + "," +
           std::to_string(o.kept) + "," + std::to_string(o.inliers) + "," + o.status + "\n";
    arr.push_back({{"query", ids[i]},
                   {"match_files", o.match_files},
                   {"matches", o.matches},
                   {"kept", o.kept},
                   {"inliers", o.inliers},
                   {"status", o.status}});
  }
  write_report(a.c.out, poses);
  write_report(with_extension(a.c.out, ".csv"), csv);
  write_report(with_extension(a.c.out, ".json"), ordered_json{{"queries", arr}}.dump(2) + "\n");
  return 0;
}

struct EvalPoseArgs {
  Common c;
  std::string manifest, poses;
};

int run_eval_pose(const EvalPoseArgs& a) {
  const SceneManifest m = load_manifest(a.manifest);
  const PoseTable est = read_poses(a.poses);
  for (const auto& [id, pose] : est) {
    if (!m.find_query(id)) throw Error(ErrorCode::kMissingPose, a.poses + ": '" + id + "' is not a query");
  }
  std::vector<PoseRow> rows;
  std::vector<PoseError> all;
  int total = 0;
  for (const auto& list : m.queries) {
    std::vector<PoseError> errs;
    for (const auto& f : list.frames) {
      auto it = est.find(f.id);
      if (it != est.end()) errs.push_back(pose_errors(it->second, f.pose()));
    }
    rows.push_back(summarize_pose_errors(list.label(), errs, static_cast<int>(list.frames.size())));
    all.insert(all.end(), errs.begin(), errs.end());
    total += static_cast<int>(list.frames.size());
  }
  rows.push_back(summarize_pose_errors("all", all, total));
  write_report(a.c.out, pose_csv(rows));
  write_report(with_extension(a.c.out, ".json"), pose_json(rows));
  return 0;
}

// ---------------------------------------------------------------- augmentation

struct AugmentArgs {
  Common c;
  std::string manifest, presets = "fisheye1,fisheye2,fisheye3";
  int face_px = 512;
  int crops_per_preset = 1;
  bool no_cube = false;
  bool include_bottom = false;
  double crop_scale = 1.0;
};

int run_augment(const AugmentArgs& a) {
  const SceneManifest m = load_manifest(a.manifest);
  AugmentOptions opts;
  opts.vc2.cube_faces = !a.no_cube;
  opts.vc2.include_bottom = a.include_bottom;
  opts.vc2.face_px = a.face_px;
  opts.vc2.crop_presets = split_csv(a.presets);
  opts.vc2.crops_per_preset = a.crops_per_preset;
  opts.vc2.seed = a.c.seed;
  opts.crop_scale = a.crop_scale;
  opts.threads = a.c.threads;
  if (a.face_px < 1 || a.crops_per_preset < 0) {
    throw Error(ErrorCode::kInvalidArgument, "--face-px must be positive and --crops-per-preset non-negative");
  }
  for (const auto& p : opts.vc2.crop_presets) find_preset(p);
  const AugmentInventory inv = emit_augmented_set(m, opts, a.c.out);
  std::cout << inv.originals << " originals, " << inv.crops << " crops\n";
  return 0;
}

// ---------------------------------------------------------------- lidar

struct BaSimArgs {
  Common c;
  std::string scenario, features;
  int planes = 0, poses = 0;
  double noise_rot_deg = -1.0, noise_t_m = -1.0;
  bool seed_given = false;
};

std::string pose_list(const std::vector<RigidTransform>& poses) {
  std::string text;
  for (size_t i = 0; i < poses.size(); ++i) {
    text += format_pose_line("frame_" + std::to_string(i), poses[i]) + "\n";
  }
  return text;
}

double ground_rms(const std::vector<RigidTransform>& est, const std::vector<RigidTransform>& truth) {
  // The floor seen from each frame, as the true pose would observe it.
  const PlaneCoeffs canonical;
  double sum = 0.0;
  for (size_t i = 0; i < est.size(); ++i) {
    const Vec3 n = truth[i].rotation * canonical.normal;
    const PlaneCoeffs detected{n, canonical.delta - truth[i].translation.dot(n)};
    sum += ground_plane_residual(est[i], detected, canonical).squaredNorm();
  }
  return std::sqrt(sum / est.size());
}

int run_ba_sim(const BaSimArgs& a) {
  BaScenario s = a.scenario.empty() ? BaScenario{} : parse_ba_scenario(read_text_file(a.scenario));
  if (a.planes > 0) s.planes = a.planes;
  if (a.poses > 0) s.poses = a.poses;
  if (a.noise_rot_deg >= 0.0) s.noise_rot_deg = a.noise_rot_deg;
  if (a.noise_t_m >= 0.0) s.noise_t_m = a.noise_t_m;
  if (a.seed_given || a.scenario.empty()) s.seed = a.c.seed;
  if (!a.features.empty()) {
    if (a.features != "truth" && a.features != "voxel") {
      throw Error(ErrorCode::kUnknownMode, "features must be truth or voxel");
    }
    s.voxelize = a.features == "voxel";
  }
  const BaScene scene = simulate_ba_scene(s);
  const BaResult r = optimize_poses(scene.frames, scene.initial, scene.features);

  fs::create_directories(a.c.out);
  const fs::path out(a.c.out);
  std::string trace = "iteration,cost\n";
  for (size_t i = 0; i < r.cost_trace.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.12e\n", i, r.cost_trace[i]);
    trace += buf;
  }
  write_text_file((out / "trace.csv").string(), trace);
  write_text_file((out / "poses_truth.txt").string(), pose_list(scene.truth));
  write_text_file((out / "poses_initial.txt").string(), pose_list(scene.initial));
  write_text_file((out / "poses_optimized.txt").string(), pose_list(r.poses));
  ordered_json doc{{"planes", s.planes},
                   {"poses", s.poses},
                   {"features", scene.features.size()},
                   {"seed", s.seed},
                   {"iterations", r.iterations},
                   {"converged", r.converged},
                   {"initial_cost", r.cost_trace.front()},
                   {"final_cost", r.cost_trace.back()},
                   {"initial_rmse_m", translation_rmse(scene.initial, scene.truth)},
                   {"final_rmse_m", translation_rmse(r.poses, scene.truth)},
                   {"initial_ground_rms", ground_rms(scene.initial, scene.truth)},
                   {"final_ground_rms", ground_rms(r.poses, scene.truth)}};
  write_text_file((out / "summary.json").string(), doc.dump(2) + "\n");
  return 0;
}

struct IcpArgs {
  Common c;
  std::string source, target, init;
  double max_dist = 1.0;
  int iterations = 50;
};

int run_icp(const IcpArgs& a) {
  const auto src = read_cloud(a.source);
  const auto dst = read_cloud(a.target);
  RigidTransform init = RigidTransform::identity();
  if (!a.init.empty()) {
    const PoseTable t = read_poses(a.init);
    if (t.empty()) throw Error(ErrorCode::kEmptyInput, a.init + ": no pose");
    init = t.begin()->second;
  }
  IcpOptions opts;
  opts.max_correspondence_distance = a.max_dist;
  opts.max_iterations = a.iterations;
  const IcpResult r = icp_align(src, dst, init, opts);
  write_report(a.c.out, format_pose_line("source_to_target", r.transform) + "\n");
  ordered_json doc{{"success", r.success},
                   {"iterations", r.iterations},
                   {"pairs", r.pairs},
                   {"rms", r.rms},
                   {"rms_trace", r.rms_trace}};
  write_report(with_extension(a.c.out, ".json"), doc.dump(2) + "\n");
  if (!r.success) throw Error(ErrorCode::kNoCorrespondences, "no point pairs within --max-dist");
  return 0;
}

// ---------------------------------------------------------------- fixture

struct SynthArgs {
  Common c;
  std::string scenes = "atrium,concourse,hall,piatrium";
  int refs = 6, queries_per_list = 2, pano_height = 128, matches = 80;
  double query_scale = 0.125;
};

int run_synth(const SynthArgs& a) {
  SynthOptions o;
  o.scenes = split_csv(a.scenes);
  o.references = a.refs;
  o.queries_per_list = a.queries_per_list;
  o.pano_height = a.pano_height;
  o.query_scale = a.query_scale;
  o.matches = a.matches;
  o.seed = a.c.seed;
  const SynthSummary s = generate_fixture(a.c.out, o);
  for (const auto& scene : s.scenes) {
    std::cout << scene.name << ": " << scene.references << " references, " << scene.queries
              << " queries, " << scene.match_files << " match files\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Cross-device omnidirectional localization toolkit"};
  app.require_subcommand(1);
  const int threads = default_threads();

  RemapArgs remap;
  RectifyArgs rectify;
  CubemapArgs cubemap;
  RetrieveArgs retrieve;
  EvalIrArgs eval_ir;
  LocalizeArgs localize;
  EvalPoseArgs eval_pose;
  AugmentArgs augment;
  BaSimArgs ba_sim;
  IcpArgs icp;
  SynthArgs synth;
  for (Common* c : {&remap.c, &rectify.c, &cubemap.c, &retrieve.c, &eval_ir.c, &localize.c, &eval_pose.c,
                    &augment.c, &ba_sim.c, &icp.c, &synth.c}) {
    c->threads = threads;
  }

  auto* cmd = app.add_subcommand("remap", "VC1: remap a query image onto a masked panorama");
  add_common(cmd, remap.c);
  add_view_args(cmd, remap.v);
  cmd->add_option("--width", remap.width, "canvas width (height is half)")->capture_default_str();

  cmd = app.add_subcommand("rectify", "VC2: render a virtual camera from a panorama");
  add_common(cmd, rectify.c);
  add_view_args(cmd, rectify.v);
  cmd->add_flag("--random", rectify.random, "sample the rotation from --seed");
  cmd->add_option("--scale", rectify.scale, "output resolution factor")->capture_default_str();
  cmd->add_option("--depth", rectify.depth, "reference depth map (PFM) to warp alongside");
  cmd->add_option("--depth-out", rectify.depth_out, "warped depth output (PFM)");

  cmd = app.add_subcommand("cubemap", "cube-map faces of a panorama");
  add_common(cmd, cubemap.c);
  cmd->add_option("--image", cubemap.image, "panorama")->required();
  cmd->add_option("--face-px", cubemap.face_px, "face size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_flag("--include-bottom", cubemap.include_bottom, "also write the bottom face");

  cmd = app.add_subcommand("retrieve", "rank references for each query descriptor");
  add_common(cmd, retrieve.c);
  cmd->add_option("--db", retrieve.db, "reference descriptors (crops grouped by source ref)")->required();
  cmd->add_option("--queries", retrieve.queries, "query descriptors")->required();
  cmd->add_option("--k", retrieve.k, "list length")->capture_default_str();
  cmd->add_option("--mode", retrieve.mode, "direct|vc1|vc2 label for the report")->capture_default_str();

  cmd = app.add_subcommand("eval-ir", "recall and precision at k");
  add_common(cmd, eval_ir.c);
  cmd->add_option("--manifest", eval_ir.manifest, "scene manifest")->required();
  cmd->add_option("--ranked", eval_ir.ranked, "ranked CSV from retrieve (repeatable)")->required();
  cmd->add_option("--k", eval_ir.ks, "comma-separated k values")->capture_default_str();
  cmd->add_option("--threshold", eval_ir.threshold, "distance gate in meters (default: manifest)");

  cmd = app.add_subcommand("localize", "PnP + RANSAC against depth-backed references");
  add_common(cmd, localize.c);
  cmd->add_option("--manifest", localize.manifest, "scene manifest")->required();
  cmd->add_option("--matches", localize.matches, "directory of match files")->required();
  cmd->add_option("--ref-size", localize.ref_size, "reference pixel grid of the matches")->capture_default_str();
  cmd->add_option("--threshold-deg", localize.threshold_deg, "angular inlier threshold")->capture_default_str();
  cmd->add_option("--iterations", localize.iterations, "RANSAC iteration cap")->capture_default_str();
  cmd->add_option("--min-inliers", localize.min_inliers, "minimum inliers")->capture_default_str();

  cmd = app.add_subcommand("eval-pose", "accuracy buckets and median errors");
  add_common(cmd, eval_pose.c);
  cmd->add_option("--manifest", eval_pose.manifest, "scene manifest with ground-truth query poses")->required();
  cmd->add_option("--poses", eval_pose.poses, "estimated poses")->required();

  cmd = app.add_subcommand("augment", "VC2 training set for pose regressors");
  add_common(cmd, augment.c);
  cmd->add_option("--manifest", augment.manifest, "scene manifest")->required();
  cmd->add_option("--presets", augment.presets, "crop presets, comma-separated")->capture_default_str();
  cmd->add_option("--face-px", augment.face_px, "cube face size")->capture_default_str();
  cmd->add_option("--crops-per-preset", augment.crops_per_preset, "random crops per preset")->capture_default_str();
  cmd->add_flag("--no-cube", augment.no_cube, "skip cube faces");
  cmd->add_flag("--include-bottom", augment.include_bottom, "keep the bottom cube face");
  cmd->add_option("--crop-scale", augment.crop_scale, "resolution factor for preset crops")->capture_default_str();

  cmd = app.add_subcommand("ba-sim", "plane bundle adjustment on a synthetic scene");
  add_common(cmd, ba_sim.c);
  cmd->get_option("--seed")->each([&](const std::string&) { ba_sim.seed_given = true; });
  cmd->add_option("--scenario", ba_sim.scenario, "scenario file");
  cmd->add_option("--planes", ba_sim.planes, "override plane count");
  cmd->add_option("--poses", ba_sim.poses, "override pose count");
  cmd->add_option("--noise-rot-deg", ba_sim.noise_rot_deg, "override rotation noise");
  cmd->add_option("--noise-t-m", ba_sim.noise_t_m, "override translation noise");
  cmd->add_option("--features", ba_sim.features, "truth|voxel");

  cmd = app.add_subcommand("icp", "point-to-point ICP between two clouds");
  add_common(cmd, icp.c);
  cmd->add_option("--source", icp.source, "cloud to move")->required();
  cmd->add_option("--target", icp.target, "fixed cloud")->required();
  cmd->add_option("--init", icp.init, "initial transform (pose file)");
  cmd->add_option("--max-dist", icp.max_dist, "correspondence gate in meters")->capture_default_str();
  cmd->add_option("--iterations", icp.iterations, "iteration cap")->capture_default_str();

  cmd = app.add_subcommand("synth", "write a synthetic test fixture");
  add_common(cmd, synth.c);
  cmd->add_option("--scenes", synth.scenes, "scene names, comma-separated")->capture_default_str();
  cmd->add_option("--refs", synth.refs, "references per scene")->capture_default_str();
  cmd->add_option("--queries-per-list", synth.queries_per_list, "queries per camera and time")->capture_default_str();
  cmd->add_option("--pano-height", synth.pano_height, "reference panorama height")->capture_default_str();
  cmd->add_option("--query-scale", synth.query_scale, "query resolution factor")->capture_default_str();
  cmd->add_option("--matches", synth.matches, "matches per query/reference pair")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: E_USAGE: " << e.what() << "\n";
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    Timer timer(name);
    if (name == "remap") return run_remap(remap);
    if (name == "rectify") return run_rectify(rectify);
    if (name == "cubemap") return run_cubemap(cubemap);
    if (name == "retrieve") return run_retrieve(retrieve);
    if (name == "eval-ir") return run_eval_ir(eval_ir);
    if (name == "localize") return run_localize(localize);
    if (name == "eval-pose") return run_eval_pose(eval_pose);
    if (name == "augment") return run_augment(augment);
    if (name == "ba-sim") return run_ba_sim(ba_sim);
    if (name == "icp") return run_icp(icp);
    if (name == "synth") return run_synth(synth);
  } catch (const Error& e) {
    std::cerr << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: E_IO: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: E_INTERNAL: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace omniloc
