#include "omniloc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "omniloc/error.hpp"
#include "omniloc/formats.hpp"
#include "omniloc/hash.hpp"
#include "omniloc/image_io.hpp"
#include "omniloc/manifest.hpp"
#include "omniloc/retrieval.hpp"

namespace omniloc {
namespace fs = std::filesystem;

double BoxRoom::ray_depth(const Vec3& origin, const Vec3& dir) const {
  double t = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (dir[k] > 0.0) t = std::min(t, (hi[k] - origin[k]) / dir[k]);
    if (dir[k] < 0.0) t = std::min(t, (lo[k] - origin[k]) / dir[k]);
  }
  return t;
}

std::array<std::uint8_t, 3> BoxRoom::shade(const Vec3& x) const {
  // Wall id picks a base colour; a 1 m checker and a soft stripe add texture.
  const Vec3 a = (x - lo).cwiseAbs(), b = (hi - x).cwiseAbs();
  int wall = 0;
  double best = a[0];
  for (int k = 0; k < 3; ++k) {
    if (a[k] < best) best = a[k], wall = 2 * k;
    if (b[k] < best) best = b[k], wall = 2 * k + 1;
  }
  static constexpr std::array<std::array<int, 3>, 6> base{
      {{170, 90, 60}, {60, 150, 90}, {70, 90, 170}, {160, 150, 60}, {120, 120, 120}, {200, 200, 190}}};
  const int checker = (static_cast<int>(std::floor(x.x())) + static_cast<int>(std::floor(x.y())) +
                       static_cast<int>(std::floor(x.z()))) & 1;
  const double stripe = 0.5 + 0.5 * std::sin(2.1 * x.x() + 1.3 * x.y() + 3.7 * x.z());
  std::array<std::uint8_t, 3> c{};
  for (int k = 0; k < 3; ++k) {
    const double v = base[wall][k] * (checker ? 1.0 : 0.7) + 40.0 * stripe;
    c[k] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return c;
}

RasterImage render_room(const BoxRoom& room, const CameraModel& model, const RigidTransform& pose,
                        double brightness) {
  const int w = model_width(model), h = model_height(model);
  RasterImage img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto d = try_unproject(model, Pixel(x + 0.5, y + 0.5));
      if (!d) continue;
      const Vec3 dir = pose.rotation * *d;
      const Vec3 hit = pose.translation + room.ray_depth(pose.translation, dir) * dir;
      const auto c = room.shade(hit);
      for (int k = 0; k < 3; ++k) {
        img.at(x, y, k) = static_cast<std::uint8_t>(std::lround(c[k] * brightness));
      }
    }
  }
  return img;
}

DepthMap render_room_depth(const BoxRoom& room, const EquirectModel& model, const RigidTransform& pose) {
  DepthMap depth(model.width(), model.height());
  for (int y = 0; y < model.height(); ++y) {
    for (int x = 0; x < model.width(); ++x) {
      const Vec3 dir = pose.rotation * unproject(model, Pixel(x + 0.5, y + 0.5));
      depth.at(x, y) = static_cast<float>(room.ray_depth(pose.translation, dir));
    }
  }
  return depth;
}

RigidTransform upright_pose(const Vec3& position, double yaw, double pitch, double roll) {
  const Vec3 forward(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 down(0.0, 0.0, -1.0);
  Mat3 r;
  r.col(0) = down.cross(forward);
  r.col(1) = down;
  r.col(2) = forward;
  // Pitch about the camera x axis, roll about its optical axis.
  return {r * rotation_from_ypr(0.0, pitch, roll), position};
}

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int index(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }
  double normal() {
    // Box-Muller keeps the stream identical across standard libraries.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 gen_;
};

// Random Fourier features: nearby places and similar headings embed closely.
class Embedder {
 public:
  Embedder(int dim, Rng& rng) : half_(dim / 2), wp_(half_, 3), wd_(half_, 3), bp_(half_), bd_(half_) {
    for (int i = 0; i < half_; ++i) {
      for (int k = 0; k < 3; ++k) {
        wp_(i, k) = rng.normal() / 4.0;
        wd_(i, k) = rng.normal() * 1.5;
      }
      bp_[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
      bd_[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
  }

  /// `view_weight` 0 gives an omnidirectional embedding.
  std::vector<float> embed(const Vec3& position, const Vec3& forward, double view_weight,
                           double noise, Rng& rng) const {
    std::vector<float> v(2 * half_);
    for (int i = 0; i < half_; ++i) {
      v[i] = static_cast<float>(std::cos(wp_.row(i).dot(position) + bp_[i]) + noise * rng.normal());
      v[half_ + i] = static_cast<float>(view_weight * std::cos(wd_.row(i).dot(forward) + bd_[i]) +
                                        noise * rng.normal());
    }
    return v;
  }

 private:
  int half_;
  Eigen::MatrixXd wp_, wd_;
  Eigen::VectorXd bp_, bd_;
};

std::string frame_name(const std::string& prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", i);
  return prefix + buf;
}

FrameEntry entry_for(const std::string& id, const std::string& image, const std::string& depth,
                     const RigidTransform& pose) {
  FrameEntry f{id, image, depth, {}};
  const Eigen::Vector4d q = pose.quaternion_wxyz();
  f.pose_values = {pose.translation.x(), pose.translation.y(), pose.translation.z(),
                   q[0], q[1], q[2], q[3]};
  return f;
}

constexpr double kDeg = std::numbers::pi / 180.0;

struct QueryFrame {
  std::string id;
  std::string camera;
  RigidTransform pose;
  CameraModel model;
  bool night;
};

SynthScene generate_scene(const fs::path& root, const std::string& scene, const SynthOptions& opts) {
  Rng rng(opts.seed ^ fnv1a(scene));
  const fs::path dir = root / scene;
  for (const char* sub : {"references", "depth", "queries", "cameras", "matches", "descriptors"}) {
    fs::create_directories(dir / sub);
  }
  const double len = rng.uniform(16.0, 28.0), wid = rng.uniform(8.0, 12.0), ht = rng.uniform(3.0, 5.0);
  const BoxRoom room{Vec3(-len / 2, -wid / 2, 0.0), Vec3(len / 2, wid / 2, ht)};

  SceneManifest m;
  m.scene = scene;
  m.threshold_m = default_threshold(scene);
  m.base_dir = dir.string();

  // References along the room's long axis.
  const EquirectModel pano(2 * opts.pano_height, opts.pano_height);
  std::vector<RigidTransform> ref_poses;
  for (int i = 0; i < opts.references; ++i) {
    const double s = opts.references > 1 ? static_cast<double>(i) / (opts.references - 1) : 0.5;
    const Vec3 c(room.lo.x() + 2.0 + s * (len - 4.0), rng.uniform(-1.0, 1.0), 1.6);
    const RigidTransform pose = upright_pose(c, rng.uniform(-0.3, 0.3));
    const std::string id = frame_name("ref_", i);
    write_image((dir / "references" / (id + ".png")).string(), render_room(room, pano, pose));
    write_pfm((dir / "depth" / (id + ".pfm")).string(), render_room_depth(room, pano, pose));
    m.references.push_back(entry_for(id, "references/" + id + ".png", "depth/" + id + ".pfm", pose));
    ref_poses.push_back(pose);
  }

  // Queries near the trajectory, one list per camera and time of day.
  std::vector<QueryFrame> queries;
  int serial = 0;
  for (const auto& camera : opts.cameras) {
    const CameraModel model = scale_model(find_preset(camera).model, opts.query_scale);
    const std::string cam_file = "cameras/" + camera + ".txt";
    write_text_file((dir / cam_file).string(),
                    format_camera_preset({camera, find_preset(camera).fov_deg, model}));
    for (bool night : {false, true}) {
      if (night && !opts.night) continue;
      QueryList list{camera, cam_file, night ? "night" : "day", {}};
      for (int j = 0; j < opts.queries_per_list; ++j) {
        const Vec3 c(rng.uniform(room.lo.x() + 2.0, room.hi.x() - 2.0), rng.uniform(-2.0, 2.0),
                     rng.uniform(1.2, 1.8));
        const RigidTransform pose = upright_pose(c, rng.uniform(-std::numbers::pi, std::numbers::pi),
                                                 rng.uniform(-5.0, 5.0) * kDeg,
                                                 rng.uniform(-3.0, 3.0) * kDeg);
        const std::string id = frame_name("q_", serial++);
        write_image((dir / "queries" / (id + ".png")).string(),
                    render_room(room, model, pose, night ? 0.4 : 1.0));
        list.frames.push_back(entry_for(id, "queries/" + id + ".png", "", pose));
        queries.push_back({id, camera, pose, model, night});
      }
      m.queries.push_back(std::move(list));
    }
  }
  save_manifest((dir / "manifest.txt").string(), m);

  // Matches against the nearest references. Reference pixels sit on depth
  // pixel centers so lifting reproduces the sampled world point.
  const double ref_scale = static_cast<double>(opts.ref_match_width) / pano.width();
  std::vector<DepthMap> depths;
  for (int i = 0; i < opts.references; ++i) {
    depths.push_back(read_pfm((dir / "depth" / (frame_name("ref_", i) + ".pfm")).string()));
  }
  int match_files = 0;
  for (const auto& q : queries) {
    std::vector<int> order(opts.references);
    for (int i = 0; i < opts.references; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return (ref_poses[a].translation - q.pose.translation).norm() <
             (ref_poses[b].translation - q.pose.translation).norm();
    });
    for (int r = 0; r < std::min(opts.match_refs, opts.references); ++r) {
      const int ri = order[r];
      MatchFile mf{q.id, frame_name("ref_", ri), q.camera, {}};
      const int outliers = static_cast<int>(std::lround(opts.outlier_ratio * opts.matches));
      const int inliers = opts.matches - outliers;
      for (int attempt = 0; attempt < 200 * opts.matches && static_cast<int>(mf.matches.size()) < inliers;
           ++attempt) {
        const int ix = rng.index(pano.width()), iy = rng.index(pano.height());
        const Pixel ref_px(ix + 0.5, iy + 0.5);
        const Vec3 x = ref_poses[ri] * (static_cast<double>(depths[ri].at(ix, iy)) * unproject(pano, ref_px));
        const auto qp = project(q.model, (q.pose.rotation.transpose() * (x - q.pose.translation)).normalized());
        if (!qp) continue;
        const Pixel noisy = *qp + opts.pixel_noise * Pixel(rng.normal(), rng.normal());
        if (!try_unproject(q.model, noisy)) continue;
        mf.matches.push_back({noisy, ref_px * ref_scale});
      }
      for (int k = 0; k < outliers; ++k) {
        Pixel qp;
        do {
          qp = Pixel(rng.uniform(0.0, model_width(q.model)), rng.uniform(0.0, model_height(q.model)));
        } while (!try_unproject(q.model, qp));
        const Pixel ref_px(rng.index(pano.width()) + 0.5, rng.index(pano.height()) + 0.5);
        mf.matches.push_back({qp, ref_px * ref_scale});
      }
      write_matches((dir / "matches" / (q.id + "__" + mf.ref + ".txt")).string(), mf);
      ++match_files;
    }
  }

  // Global descriptors for direct, VC1 and VC2 retrieval.
  const Embedder embed(opts.descriptor_dim, rng);
  const double view = 0.8;
  std::vector<GlobalDescriptor> refs, crops, direct_q, vc1_q;
  Vc2Config vc2;
  vc2.seed = opts.seed;
  for (int i = 0; i < opts.references; ++i) {
    const std::string id = frame_name("ref_", i);
    const Vec3 c = ref_poses[i].translation;
    refs.emplace_back(id, embed.embed(c, Vec3::Zero(), 0.0, 0.02, rng));
    for (const auto& req : reference_crops(id, vc2)) {
      const Vec3 fwd = ref_poses[i].rotation * req.rotation.transpose() * Vec3::UnitZ();
      crops.emplace_back(req.name, embed.embed(c, fwd, view, 0.02, rng), id);
    }
  }
  for (const auto& q : queries) {
    const bool pano_query = std::holds_alternative<EquirectModel>(q.model);
    const double noise = q.night ? 0.15 : 0.05;
    const Vec3 fwd = q.pose.rotation.col(2);
    direct_q.emplace_back(q.id, embed.embed(q.pose.translation, fwd, pano_query ? 0.0 : view, noise, rng));
    vc1_q.emplace_back(q.id, embed.embed(q.pose.translation, fwd, pano_query ? 0.0 : 0.3 * view, noise, rng));
  }
  write_descriptors((dir / "descriptors" / "refs.oldc").string(), refs);
  write_descriptors((dir / "descriptors" / "refs_vc2.oldc").string(), crops);
  write_descriptors((dir / "descriptors" / "queries.oldc").string(), direct_q);
  write_descriptors((dir / "descriptors" / "queries_vc1.oldc").string(), vc1_q);

  return {scene, (dir / "manifest.txt").string(), opts.references, static_cast<int>(queries.size()),
          match_files};
}

void generate_lidar_fixture(const fs::path& root, std::uint64_t seed) {
  Rng rng(seed ^ fnv1a("lidar"));
  const BoxRoom room{Vec3(-6, -4, 0), Vec3(6, 4, 3)};
  std::vector<Vec3> a;
  const Vec3 origin(0.5, -0.3, 1.2);
  while (a.size() < 4000) {
    Vec3 d(rng.normal(), rng.normal(), rng.normal());
    d.normalize();
    a.push_back(origin + room.ray_depth(origin, d) * d);
  }
  const RigidTransform g{rotation_from_ypr(3.0 * kDeg, -1.0 * kDeg, 0.5 * kDeg), Vec3(0.15, -0.1, 0.05)};
  std::vector<Vec3> b;
  for (const auto& p : a) b.push_back(g * p);
  fs::create_directories(root / "clouds");
  write_cloud_xyz((root / "clouds" / "run_a.xyz").string(), a);
  write_cloud_binary((root / "clouds" / "run_b.bin").string(), b);
  write_text_file((root / "clouds" / "truth.txt").string(), format_pose_line("run_a_to_run_b", g) + "\n");
  write_text_file((root / "ba_scenario.txt").string(),
                  "# synthetic plane scene\nplanes = 5\nposes = 10\npoints_per_plane = 60\n"
                  "noise_rot_deg = 1\nnoise_t_m = 0.05\nseed = " + std::to_string(seed) + "\n");
}

}  // namespace

SynthSummary generate_fixture(const std::string& out_dir, const SynthOptions& opts) {
  if (opts.references < 1 || opts.queries_per_list < 0 || opts.matches < 4 || opts.pano_height < 8 ||
      opts.descriptor_dim < 2 || opts.match_refs < 0) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic fixture options out of range");
  }
  const fs::path root(out_dir);
  fs::create_directories(root);
  SynthSummary summary;
  for (const auto& scene : opts.scenes) summary.scenes.push_back(generate_scene(root, scene, opts));
  generate_lidar_fixture(root, opts.seed);

  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& s : summary.scenes) {
    doc.push_back({{"scene", s.name},
                   {"manifest", fs::relative(s.manifest, root).string()},
                   {"references", s.references},
                   {"queries", s.queries},
                   {"match_files", s.match_files}});
  }
  write_text_file((root / "fixture.json").string(), doc.dump(2) + "\n");
  return summary;
}

}  // namespace omniloc
