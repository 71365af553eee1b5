#include "omniloc/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "omniloc/error.hpp"
#include "omniloc/formats.hpp"

namespace omniloc {
namespace fs = std::filesystem;

RigidTransform FrameEntry::pose() const {
  const auto& v = pose_values;
  return RigidTransform::from_quaternion(v[3], v[4], v[5], v[6], Vec3(v[0], v[1], v[2]));
}

std::string SceneManifest::resolve(const std::string& relative) const {
  const fs::path p(relative);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

CameraPreset SceneManifest::camera(const QueryList& list) const {
  if (!list.camera_file.empty()) {
    CameraPreset p = load_camera_preset(resolve(list.camera_file));
    p.name = list.camera;
    return p;
  }
  return find_preset(list.camera);
}

const FrameEntry* SceneManifest::find_reference(const std::string& id) const {
  for (const auto& r : references) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::optional<std::pair<const FrameEntry*, const QueryList*>> SceneManifest::find_query(
    const std::string& id) const {
  for (const auto& list : queries) {
    for (const auto& f : list.frames) {
      if (f.id == id) return std::make_pair(&f, &list);
    }
  }
  return std::nullopt;
}

double default_threshold(const std::string& scene) {
  std::string lower = scene;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.find("concourse") != std::string::npos ? 5.0 : 10.0;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

double parse_number(const std::string& tok, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kParse, where + ": bad number '" + tok + "'");
  }
  return v;
}

void check_unique(const std::vector<FrameEntry>& frames, std::set<std::string>& seen,
                  const std::string& origin) {
  for (const auto& f : frames) {
    if (!seen.insert(f.id).second) {
      throw Error(ErrorCode::kDuplicateId, origin + ": duplicate frame id '" + f.id + "'");
    }
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SceneManifest parse_manifest(const std::string& text, const std::string& base_dir,
                             const std::string& origin) {
  SceneManifest m;
  m.base_dir = base_dir;
  bool have_threshold = false;
  enum class Section { kHeader, kReference, kQuery } section = Section::kHeader;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::kParse, where + ": unterminated section");
      const auto parts = split_ws(line.substr(1, line.size() - 2));
      if (parts.empty()) throw Error(ErrorCode::kParse, where + ": empty section name");
      if (parts[0] == "reference") {
        if (parts.size() != 1) throw Error(ErrorCode::kParse, where + ": [reference] takes no keys");
        section = Section::kReference;
      } else if (parts[0] == "query") {
        QueryList list;
        for (size_t i = 1; i < parts.size(); ++i) {
          const auto eq = parts[i].find('=');
          if (eq == std::string::npos) throw Error(ErrorCode::kParse, where + ": expected key=value");
          const std::string key = parts[i].substr(0, eq);
          const std::string value = parts[i].substr(eq + 1);
          if (key == "camera") {
            list.camera = value;
          } else if (key == "time") {
            if (value != "day" && value != "night") {
              throw Error(ErrorCode::kParse, where + ": time must be day or night");
            }
            list.time = value;
          } else if (key == "camera_file") {
            list.camera_file = value;
          } else {
            throw Error(ErrorCode::kParse, where + ": unknown query key '" + key + "'");
          }
        }
        if (list.camera.empty()) throw Error(ErrorCode::kParse, where + ": query section needs camera=");
        m.queries.push_back(std::move(list));
        section = Section::kQuery;
      } else {
        throw Error(ErrorCode::kParse, where + ": unknown section '" + parts[0] + "'");
      }
      continue;
    }

    if (section == Section::kHeader) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::kParse, where + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "scene") {
        m.scene = value;
      } else if (key == "threshold_m") {
        m.threshold_m = parse_number(value, where);
        if (!(m.threshold_m > 0.0)) throw Error(ErrorCode::kParse, where + ": threshold must be positive");
        have_threshold = true;
      } else {
        throw Error(ErrorCode::kParse, where + ": unknown key '" + key + "'");
      }
      continue;
    }

    const auto tok = split_ws(line);
    const bool is_ref = section == Section::kReference;
    const size_t expected = is_ref ? 10 : 9;
    if (tok.size() != expected) {
      throw Error(ErrorCode::kParse, where + ": expected " + std::to_string(expected) +
                                         " fields, got " + std::to_string(tok.size()));
    }
    FrameEntry f;
    f.id = tok[0];
    f.image = tok[1];
    const size_t first = is_ref ? 3 : 2;
    if (is_ref) f.depth = tok[2];
    for (size_t i = 0; i < 7; ++i) f.pose_values[i] = parse_number(tok[first + i], where);
    try {
      f.pose();
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, where + ": " + e.what());
    }
    (is_ref ? m.references : m.queries.back().frames).push_back(std::move(f));
  }
  if (m.scene.empty()) throw Error(ErrorCode::kParse, origin + ": missing 'scene'");
  if (!have_threshold) m.threshold_m = default_threshold(m.scene);

  std::set<std::string> ref_ids, query_ids;
  check_unique(m.references, ref_ids, origin);
  for (const auto& q : m.queries) check_unique(q.frames, query_ids, origin);
  return m;
}

SceneManifest load_manifest(const std::string& path) {
  const std::string dir = fs::path(path).parent_path().string();
  SceneManifest m = parse_manifest(read_text_file(path), dir.empty() ? "." : dir, path);
  auto require = [&](const std::string& rel, const std::string& id) {
    if (!fs::exists(m.resolve(rel))) {
      throw Error(ErrorCode::kIo, path + ": file for '" + id + "' not found: " + m.resolve(rel));
    }
  };
  for (const auto& r : m.references) {
    require(r.image, r.id);
    require(r.depth, r.id);
  }
  for (const auto& q : m.queries) {
    if (!q.camera_file.empty()) require(q.camera_file, q.camera);
    for (const auto& f : q.frames) require(f.image, f.id);
  }
  return m;
}

std::string format_manifest(const SceneManifest& m) {
  std::ostringstream out;
  out << "scene = " << m.scene << "\n";
  out << "threshold_m = " << fmt(m.threshold_m) << "\n";
  auto pose = [&](const FrameEntry& f) {
    for (double v : f.pose_values) out << ' ' << fmt(v);
    out << '\n';
  };
  out << "\n[reference]\n";
  for (const auto& r : m.references) {
    out << r.id << ' ' << r.image << ' ' << r.depth;
    pose(r);
  }
  for (const auto& q : m.queries) {
    out << "\n[query camera=" << q.camera << " time=" << q.time;
    if (!q.camera_file.empty()) out << " camera_file=" << q.camera_file;
    out << "]\n";
    for (const auto& f : q.frames) {
      out << f.id << ' ' << f.image;
      pose(f);
    }
  }
  return out.str();
}

void save_manifest(const std::string& path, const SceneManifest& m) {
  write_text_file(path, format_manifest(m));
}

}  // namespace omniloc
