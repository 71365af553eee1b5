#include "omniloc/camera_models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <type_traits>

#include "omniloc/error.hpp"

namespace omniloc {
namespace {

constexpr double kPi = std::numbers::pi;

void require_size(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
  }
}

bool in_rect(const Pixel& p, int width, int height) {
  return p.x() >= 0.0 && p.x() <= width && p.y() >= 0.0 && p.y() <= height;
}

// Radius (in focal units) of a ray at `theta` from the optical axis under the
// double sphere model.
double double_sphere_radius(double theta, double xi, double alpha) {
  const double s = std::sin(theta);
  const double k = xi + std::cos(theta);
  const double d2 = std::hypot(s, k);
  return s / (alpha * d2 + (1.0 - alpha) * k);
}

}  // namespace

EquirectModel::EquirectModel(int width, int height) : width_(width), height_(height) {
  require_size(width, height);
  if (width != 2 * height) {
    throw Error(ErrorCode::kInvalidArgument, "equirectangular image must be 2:1");
  }
}

std::optional<Bearing> EquirectModel::unproject(const Pixel& p) const {
  if (!in_rect(p, width_, height_)) return std::nullopt;
  const double lon = 2.0 * kPi * (p.x() / width_) - kPi;
  const double lat = kPi / 2.0 - kPi * (p.y() / height_);
  const double c = std::cos(lat);
  return Bearing(c * std::sin(lon), -std::sin(lat), c * std::cos(lon));
}

std::optional<Pixel> EquirectModel::project(const Bearing& d) const {
  const double lon = std::atan2(d.x(), d.z());
  const double lat = std::atan2(-d.y(), std::hypot(d.x(), d.z()));
  return Pixel(width_ * (lon + kPi) / (2.0 * kPi), height_ * (kPi / 2.0 - lat) / kPi);
}

PinholeModel::PinholeModel(int width, int height, double fx, double fy, double cx, double cy)
    : width_(width), height_(height), fx_(fx), fy_(fy), cx_(cx), cy_(cy) {
  require_size(width, height);
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "pinhole focal lengths must be positive");
  }
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw Error(ErrorCode::kInvalidArgument, "pinhole principal point must lie inside the image");
  }
}

std::optional<Bearing> PinholeModel::unproject(const Pixel& p) const {
  if (!in_rect(p, width_, height_)) return std::nullopt;
  return Bearing((p.x() - cx_) / fx_, (p.y() - cy_) / fy_, 1.0).normalized();
}

std::optional<Pixel> PinholeModel::project(const Bearing& d) const {
  if (!(d.z() > 0.0)) return std::nullopt;
  return Pixel(fx_ * d.x() / d.z() + cx_, fy_ * d.y() / d.z() + cy_);
}

DoubleSphereModel::DoubleSphereModel(int width, int height, double fx, double fy, double cx,
                                     double cy, double xi, double alpha)
    : width_(width), height_(height), fx_(fx), fy_(fy), cx_(cx), cy_(cy), xi_(xi), alpha_(alpha) {
  require_size(width, height);
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "double sphere focal lengths must be positive");
  }
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "double sphere alpha must lie in [0, 1)");
  }
  if (!(std::abs(xi) < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "double sphere xi must lie in (-1, 1)");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw Error(ErrorCode::kInvalidArgument, "double sphere principal point must be finite");
  }
}

double DoubleSphereModel::validity_w2() const {
  const double w1 = alpha_ <= 0.5 ? alpha_ / (1.0 - alpha_) : (1.0 - alpha_) / alpha_;
  return (w1 + xi_) / std::sqrt(2.0 * w1 * xi_ + xi_ * xi_ + 1.0);
}

std::optional<Bearing> DoubleSphereModel::unproject(const Pixel& p) const {
  if (!in_rect(p, width_, height_)) return std::nullopt;
  const double mx = (p.x() - cx_) / fx_;
  const double my = (p.y() - cy_) / fy_;
  const double r2 = mx * mx + my * my;
  if (alpha_ > 0.5 && r2 > 1.0 / (2.0 * alpha_ - 1.0)) return std::nullopt;

  const double s2 = std::max(0.0, 1.0 - (2.0 * alpha_ - 1.0) * r2);
  const double mz = (1.0 - alpha_ * alpha_ * r2) / (alpha_ * std::sqrt(s2) + 1.0 - alpha_);
  const double mz2 = mz * mz;
  const double s1 = mz2 + (1.0 - xi_ * xi_) * r2;
  if (s1 < 0.0) return std::nullopt;
  const double k = (mz * xi_ + std::sqrt(s1)) / (mz2 + r2);
  Bearing d(k * mx, k * my, k * mz - xi_);
  const double n = d.norm();
  if (!(n > 0.0) || !std::isfinite(n)) return std::nullopt;
  d /= n;
  if (!(d.z() > -validity_w2())) return std::nullopt;
  return d;
}

std::optional<Pixel> DoubleSphereModel::project(const Bearing& d) const {
  const double d1 = d.norm();
  if (!(d.z() > -validity_w2() * d1)) return std::nullopt;
  const double k = xi_ * d1 + d.z();
  const double d2 = std::sqrt(d.x() * d.x() + d.y() * d.y() + k * k);
  const double denom = alpha_ * d2 + (1.0 - alpha_) * k;
  if (!(denom > 0.0)) return std::nullopt;
  return Pixel(fx_ * d.x() / denom + cx_, fy_ * d.y() / denom + cy_);
}

int model_width(const CameraModel& model) {
  return std::visit([](const auto& m) { return m.width(); }, model);
}

int model_height(const CameraModel& model) {
  return std::visit([](const auto& m) { return m.height(); }, model);
}

bool contains(const CameraModel& model, const Pixel& p) {
  return in_rect(p, model_width(model), model_height(model));
}

std::optional<Bearing> try_unproject(const CameraModel& model, const Pixel& p) {
  return std::visit([&](const auto& m) { return m.unproject(p); }, model);
}

Bearing unproject(const CameraModel& model, const Pixel& p) {
  if (!contains(model, p)) {
    throw Error(ErrorCode::kOutOfImage, "pixel lies outside the image");
  }
  auto d = try_unproject(model, p);
  if (!d) {
    throw Error(ErrorCode::kDomain, "pixel lies outside the unprojection domain");
  }
  return *d;
}

std::optional<Pixel> project(const CameraModel& model, const Bearing& d) {
  return std::visit([&](const auto& m) { return m.project(d); }, model);
}

PinholeModel pinhole_from_fov(int width, int height, double hfov) {
  if (!(hfov > 0.0 && hfov < kPi)) {
    throw Error(ErrorCode::kDomain, "pinhole field of view must lie in (0, pi)");
  }
  const double f = (width / 2.0) / std::tan(hfov / 2.0);
  return PinholeModel(width, height, f, f, width / 2.0, height / 2.0);
}

namespace {

double focal_for_fov(int width, double half_fov, double xi, double alpha) {
  const double r = double_sphere_radius(half_fov, xi, alpha);
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::kDomain, "field of view is not representable with these xi/alpha");
  }
  return (width / 2.0) / r;
}

}  // namespace

DoubleSphereModel double_sphere_from_fov(int width, int height, double hfov, double xi) {
  if (!(hfov > 0.0 && hfov < 2.0 * kPi)) {
    throw Error(ErrorCode::kDomain, "fisheye field of view must lie in (0, 2 pi)");
  }
  const double half = hfov / 2.0;
  // Ratio of the radii at the half and quarter field angles; 2 for an
  // equidistant profile. It decreases monotonically in alpha.
  auto excess = [&](double alpha) {
    const double outer = double_sphere_radius(half, xi, alpha);
    const double inner = double_sphere_radius(half / 2.0, xi, alpha);
    if (!(outer > 0.0)) return 1e300;
    return outer / inner - 2.0;
  };
  double lo = 0.0;
  double hi = 1.0 - 1e-9;
  if (excess(lo) < 0.0 || excess(hi) > 0.0) {
    throw Error(ErrorCode::kDomain, "no double sphere alpha matches this field of view and xi");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  const double alpha = 0.5 * (lo + hi);
  const double f = focal_for_fov(width, half, xi, alpha);
  DoubleSphereModel model(width, height, f, f, width / 2.0, height / 2.0, xi, alpha);
  if (std::cos(half) <= -model.validity_w2()) {
    throw Error(ErrorCode::kDomain, "field of view exceeds the double sphere validity region");
  }
  return model;
}

const std::vector<CameraPreset>& default_presets() {
  static const std::vector<CameraPreset> presets = [] {
    const double deg = kPi / 180.0;
    std::vector<CameraPreset> p;
    p.push_back({"360", 360.0, EquirectModel(6144, 3072)});
    p.push_back({"fisheye1", 120.0, double_sphere_from_fov(1280, 1024, 120.0 * deg, -0.2)});
    p.push_back({"fisheye2", 150.0, double_sphere_from_fov(1280, 1024, 150.0 * deg, 0.0)});
    p.push_back({"fisheye3", 195.0, double_sphere_from_fov(1280, 1024, 195.0 * deg, 0.5)});
    p.push_back({"pinhole", 85.0, pinhole_from_fov(1920, 1200, 85.0 * deg)});
    return p;
  }();
  return presets;
}

CameraModel scale_model(const CameraModel& model, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorCode::kInvalidArgument, "scale factor must be positive");
  }
  auto scaled = [&](int n) { return std::max(1, static_cast<int>(std::lround(n * factor))); };
  return std::visit(
      [&](const auto& m) -> CameraModel {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, EquirectModel>) {
          const int h = scaled(m.height());
          return EquirectModel(2 * h, h);
        } else {
          const int w = scaled(m.width());
          const int h = scaled(m.height());
          const double sx = static_cast<double>(w) / m.width();
          const double sy = static_cast<double>(h) / m.height();
          if constexpr (std::is_same_v<T, PinholeModel>) {
            return PinholeModel(w, h, m.fx() * sx, m.fy() * sy, m.cx() * sx, m.cy() * sy);
          } else {
            return DoubleSphereModel(w, h, m.fx() * sx, m.fy() * sy, m.cx() * sx, m.cy() * sy,
                                     m.xi(), m.alpha());
          }
        }
      },
      model);
}

const CameraPreset& find_preset(const std::string& name) {
  const std::string key = name == "equirect" ? "360" : name;
  for (const auto& p : default_presets()) {
    if (p.name == key) return p;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown camera preset '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& value, int line) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": bad number for '" + key +
                                       "': " + value);
  }
}

}  // namespace

CameraPreset parse_camera_preset(const std::string& text, const std::string& default_name) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": expected key = value");
    }
    kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
  auto num = [&](const std::string& key) -> std::optional<double> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return parse_number(key, it->second, 0);
  };
  auto required = [&](const std::string& key) {
    auto v = num(key);
    if (!v) throw Error(ErrorCode::kParse, "camera preset is missing '" + key + "'");
    return *v;
  };
  if (!kv.count("type")) throw Error(ErrorCode::kParse, "camera preset is missing 'type'");
  const std::string type = kv["type"];
  const int width = static_cast<int>(required("width"));
  const int height = static_cast<int>(required("height"));

  const std::string name = kv.count("name") ? kv["name"] : default_name;
  const double deg = kPi / 180.0;

  if (type == "equirect" || type == "360") {
    return {name, 360.0, EquirectModel(width, height)};
  } else if (type == "pinhole") {
    const auto fov = num("fov_deg");
    const auto fx = num("fx");
    if (!fov && !fx) throw Error(ErrorCode::kParse, "pinhole preset needs fov_deg or fx");
    const double f = fx ? *fx : (width / 2.0) / std::tan(*fov * deg / 2.0);
    if (!fx && !(*fov > 0.0 && *fov < 180.0)) {
      throw Error(ErrorCode::kDomain, "pinhole field of view must lie in (0, 180) degrees");
    }
    return {name, fov ? *fov : 2.0 * std::atan(width / (2.0 * f)) / deg,
            PinholeModel(width, height, f, num("fy").value_or(f), num("cx").value_or(width / 2.0),
                         num("cy").value_or(height / 2.0))};
  } else if (type == "double_sphere" || type == "fisheye") {
    const double xi = num("xi").value_or(0.0);
    const auto fov = num("fov_deg");
    const auto alpha = num("alpha");
    const auto fx = num("fx");
    double a = 0.0;
    double f = 0.0;
    if (alpha && fx) {
      a = *alpha;
      f = *fx;
    } else if (!fov) {
      throw Error(ErrorCode::kParse, "double sphere preset needs fov_deg or both fx and alpha");
    } else if (alpha) {
      a = *alpha;
      f = focal_for_fov(width, *fov * deg / 2.0, xi, a);
    } else {
      const DoubleSphereModel solved = double_sphere_from_fov(width, height, *fov * deg, xi);
      a = solved.alpha();
      f = fx.value_or(solved.fx());
    }
    return {name, fov.value_or(0.0),
            DoubleSphereModel(width, height, f, num("fy").value_or(f),
                              num("cx").value_or(width / 2.0), num("cy").value_or(height / 2.0),
                              xi, a)};
  }
  throw Error(ErrorCode::kParse, "unknown camera type '" + type + "'");
}

CameraPreset load_camera_preset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open camera preset " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.find('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return parse_camera_preset(buf.str(), stem);
}

std::string format_camera_preset(const CameraPreset& preset) {
  std::ostringstream out;
  out.precision(17);
  out << "name = " << preset.name << "\n";
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, EquirectModel>) {
          out << "type = equirect\n";
        } else if constexpr (std::is_same_v<T, PinholeModel>) {
          out << "type = pinhole\n";
        } else {
          out << "type = double_sphere\n";
        }
        out << "width = " << m.width() << "\nheight = " << m.height() << "\n";
        if (preset.fov_deg > 0.0) out << "fov_deg = " << preset.fov_deg << "\n";
        if constexpr (!std::is_same_v<T, EquirectModel>) {
          out << "fx = " << m.fx() << "\nfy = " << m.fy() << "\ncx = " << m.cx()
              << "\ncy = " << m.cy() << "\n";
        }
        if constexpr (std::is_same_v<T, DoubleSphereModel>) {
          out << "xi = " << m.xi() << "\nalpha = " << m.alpha() << "\n";
        }
      },
      preset.model);
  return out.str();
}

}  // namespace omniloc
