#include "omniloc/virtual_camera.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "omniloc/error.hpp"
#include "omniloc/parallel.hpp"

namespace omniloc {
namespace {

void require_panorama(int width, int height, const char* what) {
  if (width <= 0 || width != 2 * height) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be a 2:1 image");
  }
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

double MaskedEquirect::pixel_fraction() const {
  size_t n = 0;
  for (auto m : mask) n += m != 0;
  return mask.empty() ? 0.0 : static_cast<double>(n) / mask.size();
}

double MaskedEquirect::solid_angle_fraction() const {
  const int w = image.width();
  const int h = image.height();
  double hit = 0.0;
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    const double lat = std::numbers::pi / 2.0 - std::numbers::pi * (y + 0.5) / h;
    const double weight = std::cos(lat);
    int row = 0;
    for (int x = 0; x < w; ++x) row += covered(x, y);
    hit += weight * row;
    total += weight * w;
  }
  return hit / total;
}

RasterImage MaskedEquirect::mask_image() const {
  RasterImage out(image.width(), image.height(), 1);
  for (size_t i = 0; i < mask.size(); ++i) out.data()[i] = mask[i] ? 255 : 0;
  return out;
}

RasterImage extract_virtual(const RasterImage& pano, const CameraModel& target,
                            const Rotation& rot, Sampler sampler, int threads) {
  require_panorama(pano.width(), pano.height(), "panorama");
  const EquirectModel equi(pano.width(), pano.height());
  const int w = model_width(target);
  const int h = model_height(target);
  const int channels = pano.channels();
  RasterImage out(w, h, channels);
  const Mat3 rt = rot.transpose();
  parallel_for(h, threads, [&](int y) {
    std::array<double, 3> value{};
    for (int x = 0; x < w; ++x) {
      const auto d = try_unproject(target, Pixel(x + 0.5, y + 0.5));
      if (!d) continue;
      const auto src = equi.project(rt * *d);
      sample(pano, *src, sampler, EdgeMode::kWrapX, value);
      for (int c = 0; c < channels; ++c) out.at(x, y, c) = to_byte(value[c]);
    }
  });
  return out;
}

MaskedEquirect remap_to_equirect(const RasterImage& img, const CameraModel& source,
                                 const Rotation& rot, int canvas_width, int canvas_height,
                                 Sampler sampler, int threads) {
  require_panorama(canvas_width, canvas_height, "canvas");
  if (img.width() != model_width(source) || img.height() != model_height(source)) {
    throw Error(ErrorCode::kDimensionMismatch, "image size does not match the source camera");
  }
  const EquirectModel equi(canvas_width, canvas_height);
  const bool source_is_equirect = std::holds_alternative<EquirectModel>(source);
  const EdgeMode edge = source_is_equirect ? EdgeMode::kWrapX : EdgeMode::kClamp;
  MaskedEquirect out{RasterImage(canvas_width, canvas_height, img.channels()),
                     std::vector<std::uint8_t>(static_cast<size_t>(canvas_width) * canvas_height)};
  const int channels = img.channels();
  parallel_for(canvas_height, threads, [&](int y) {
    std::array<double, 3> value{};
    for (int x = 0; x < canvas_width; ++x) {
      const auto d = equi.unproject(Pixel(x + 0.5, y + 0.5));
      const auto p = project(source, rot * *d);
      if (!p || !contains(source, *p)) continue;
      // Pixels beyond the fisheye image circle carry no data.
      if (!source_is_equirect && !try_unproject(source, *p)) continue;
      sample(img, *p, sampler, edge, value);
      for (int c = 0; c < channels; ++c) out.image.at(x, y, c) = to_byte(value[c]);
      out.mask[static_cast<size_t>(y) * canvas_width + x] = 1;
    }
  });
  return out;
}

DepthMap warp_depth(const DepthMap& depth, const CameraModel& target, const Rotation& rot,
                    int threads) {
  require_panorama(depth.width(), depth.height(), "depth panorama");
  const EquirectModel equi(depth.width(), depth.height());
  const int w = model_width(target);
  const int h = model_height(target);
  DepthMap out(w, h, 0.0f);
  const Mat3 rt = rot.transpose();
  parallel_for(h, threads, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const auto d = try_unproject(target, Pixel(x + 0.5, y + 0.5));
      if (!d) continue;
      out.at(x, y) = sample_depth(depth, *equi.project(rt * *d), EdgeMode::kWrapX);
    }
  });
  return out;
}

std::vector<std::pair<std::string, Rotation>> cube_face_rotations(bool include_bottom) {
  struct Axis {
    const char* id;
    Vec3 forward;
    Vec3 down;
  };
  std::vector<Axis> axes = {
      {"front", Vec3::UnitZ(), Vec3::UnitY()},  {"right", Vec3::UnitX(), Vec3::UnitY()},
      {"back", -Vec3::UnitZ(), Vec3::UnitY()},  {"left", -Vec3::UnitX(), Vec3::UnitY()},
      {"up", -Vec3::UnitY(), Vec3::UnitZ()},
  };
  if (include_bottom) axes.push_back({"down", Vec3::UnitY(), -Vec3::UnitZ()});
  std::vector<std::pair<std::string, Rotation>> out;
  for (const auto& a : axes) {
    // Columns are the face axes expressed in the panorama frame.
    Mat3 face_in_pano;
    face_in_pano.col(0) = a.down.cross(a.forward);
    face_in_pano.col(1) = a.down;
    face_in_pano.col(2) = a.forward;
    out.emplace_back(a.id, face_in_pano.transpose());
  }
  return out;
}

std::vector<CubeFace> cubemap_faces(const RasterImage& pano, int face_px, bool include_bottom,
                                    Sampler sampler, int threads) {
  if (face_px <= 0) throw Error(ErrorCode::kInvalidArgument, "face size must be positive");
  const PinholeModel model(face_px, face_px, face_px / 2.0, face_px / 2.0, face_px / 2.0,
                           face_px / 2.0);
  std::vector<CubeFace> faces;
  for (auto& [id, rot] : cube_face_rotations(include_bottom)) {
    faces.push_back({id, rot, model, extract_virtual(pano, model, rot, sampler, threads)});
  }
  return faces;
}

Rotation sample_rotation(std::uint64_t seed, AngleRange yaw, AngleRange pitch, AngleRange roll) {
  for (const AngleRange& r : {yaw, pitch, roll}) {
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
      throw Error(ErrorCode::kInvalidArgument, "rotation range is empty");
    }
  }
  std::mt19937_64 rng(seed);
  auto draw = [&](const AngleRange& r) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return r.lo + (r.hi - r.lo) * u;
  };
  const double y = draw(yaw);
  const double p = draw(pitch);
  const double r = draw(roll);
  return rotation_from_ypr(y, p, r);
}

}  // namespace omniloc
