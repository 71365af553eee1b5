#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "omniloc/geometry.hpp"

namespace omniloc {

/// 2:1 equirectangular panorama. Longitude grows with u, v = 0 is the north pole (-y).
class EquirectModel {
 public:
  EquirectModel(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  std::optional<Bearing> unproject(const Pixel& p) const;
  std::optional<Pixel> project(const Bearing& d) const;

 private:
  int width_;
  int height_;
};

class PinholeModel {
 public:
  PinholeModel(int width, int height, double fx, double fy, double cx, double cy);

  int width() const { return width_; }
  int height() const { return height_; }
  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }

  std::optional<Bearing> unproject(const Pixel& p) const;
  /// Empty for directions with z <= 0.
  std::optional<Pixel> project(const Bearing& d) const;

 private:
  int width_;
  int height_;
  double fx_, fy_, cx_, cy_;
};

// Double sphere fisheye model:
//   d1 = |p|, d2 = |(x, y, xi * d1 + z)|
//   u = fx * x / (alpha * d2 + (1 - alpha) * (xi * d1 + z)) + cx
// A point projects only when z > -w2 * d1. Pixels unproject only when
// r^2 <= 1 / (2 alpha - 1) for alpha > 0.5, r being the normalized radius.
class DoubleSphereModel {
 public:
  DoubleSphereModel(int width, int height, double fx, double fy, double cx, double cy, double xi,
                    double alpha);

  int width() const { return width_; }
  int height() const { return height_; }
  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  double xi() const { return xi_; }
  double alpha() const { return alpha_; }

  /// Cosine bound of the projection validity cone: visible iff z > -w2 * |p|.
  double validity_w2() const;

  std::optional<Bearing> unproject(const Pixel& p) const;
  std::optional<Pixel> project(const Bearing& d) const;

 private:
  int width_;
  int height_;
  double fx_, fy_, cx_, cy_, xi_, alpha_;
};

using CameraModel = std::variant<EquirectModel, PinholeModel, DoubleSphereModel>;

int model_width(const CameraModel& model);
int model_height(const CameraModel& model);

/// Closed image rectangle [0, W] x [0, H].
bool contains(const CameraModel& model, const Pixel& p);

/// Throws kOutOfImage for pixels outside the image and kDomain outside the
/// double sphere unprojection radius.
Bearing unproject(const CameraModel& model, const Pixel& p);

/// Like unproject() but reports failure as an empty optional.
std::optional<Bearing> try_unproject(const CameraModel& model, const Pixel& p);

/// Empty when the direction is outside the model's validity region. The
/// returned pixel may still lie outside the image rectangle.
std::optional<Pixel> project(const CameraModel& model, const Bearing& d);

/// Pinhole with fx = fy = (width / 2) / tan(hfov / 2) and principal point at the center.
PinholeModel pinhole_from_fov(int width, int height, double hfov);

/// Double sphere fisheye with the given xi whose horizontal half-FoV ray lands
/// on the left/right image edge. alpha is chosen so the radial profile is
/// equidistant at the half and quarter field angles.
DoubleSphereModel double_sphere_from_fov(int width, int height, double hfov, double xi);

/// Same field of view at a different resolution: the image size is scaled by
/// `factor` (rounded, equirect kept 2:1) and the intrinsics follow.
CameraModel scale_model(const CameraModel& model, double factor);

struct CameraPreset {
  std::string name;
  double fov_deg = 0.0;
  CameraModel model;
};

/// The five capture devices: "360", "fisheye1", "fisheye2", "fisheye3", "pinhole".
const std::vector<CameraPreset>& default_presets();

/// Finds a default preset by name ("equirect" is accepted for "360").
const CameraPreset& find_preset(const std::string& name);

/// Parses `key = value` lines: type, width, height, fov_deg and optional
/// fx fy cx cy xi alpha overrides. `#` starts a comment.
CameraPreset parse_camera_preset(const std::string& text, const std::string& default_name = "");
CameraPreset load_camera_preset(const std::string& path);
std::string format_camera_preset(const CameraPreset& preset);

}  // namespace omniloc
