#include "omniloc/formats.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "omniloc/error.hpp"

namespace omniloc {
namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(ErrorCode::kParse, path + ": truncated file");
  }
  return v;
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::string parse_error(const std::string& origin, int line, const std::string& what) {
  return origin + ":" + std::to_string(line) + ": " + what;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  auto in = open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);
}

DepthMap read_pfm(const std::string& path) {
  auto in = open_in(path);
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  if (!(in >> magic >> width >> height >> scale)) {
    throw Error(ErrorCode::kParse, path + ": bad PFM header");
  }
  if (magic != "Pf") throw Error(ErrorCode::kParse, path + ": only single-channel PFM is supported");
  if (scale >= 0.0) throw Error(ErrorCode::kParse, path + ": big-endian PFM is not supported");
  in.get();  // single whitespace after the header
  DepthMap depth(width, height);
  for (int y = height - 1; y >= 0; --y) {
    for (int x = 0; x < width; ++x) depth.at(x, y) = read_pod<float>(in, path);
  }
  return depth;
}

void write_pfm(const std::string& path, const DepthMap& depth) {
  auto out = open_out(path);
  out << "Pf\n" << depth.width() << " " << depth.height() << "\n-1.0\n";
  for (int y = depth.height() - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width(); ++x) write_pod<float>(out, depth.at(x, y));
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);
}

PoseTable parse_poses(const std::string& text, const std::string& origin) {
  PoseTable poses;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string id;
    if (!(ls >> id)) continue;
    double v[7];
    for (double& x : v) {
      if (!(ls >> x) || !std::isfinite(x)) {
        throw Error(ErrorCode::kParse, parse_error(origin, lineno, "expected id tx ty tz qw qx qy qz"));
      }
    }
    std::string extra;
    if (ls >> extra) throw Error(ErrorCode::kParse, parse_error(origin, lineno, "trailing fields"));
    if (v[3] == 0.0 && v[4] == 0.0 && v[5] == 0.0 && v[6] == 0.0) {
      throw Error(ErrorCode::kParse, parse_error(origin, lineno, "zero quaternion"));
    }
    if (!poses.emplace(id, RigidTransform::from_quaternion(v[3], v[4], v[5], v[6],
                                                           Vec3(v[0], v[1], v[2])))
             .second) {
      throw Error(ErrorCode::kDuplicateId, parse_error(origin, lineno, "duplicate frame id '" + id + "'"));
    }
  }
  return poses;
}

PoseTable read_poses(const std::string& path) { return parse_poses(read_text_file(path), path); }

std::string format_pose_line(const std::string& id, const RigidTransform& pose) {
  const Eigen::Vector4d q = pose.quaternion_wxyz();
  std::ostringstream out;
  out << std::setprecision(17) << id << " " << pose.translation.x() << " " << pose.translation.y()
      << " " << pose.translation.z() << " " << q(0) << " " << q(1) << " " << q(2) << " " << q(3);
  return out.str();
}

void write_poses(const std::string& path, const PoseTable& poses) {
  std::string text;
  for (const auto& [id, pose] : poses) text += format_pose_line(id, pose) + "\n";
  write_text_file(path, text);
}

std::vector<GlobalDescriptor> read_descriptors(const std::string& path) {
  auto in = open_in(path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "OLDC", 4) != 0) {
    throw Error(ErrorCode::kParse, path + ": not a descriptor file");
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != 1) throw Error(ErrorCode::kParse, path + ": unsupported version " + std::to_string(version));
  const auto count = read_pod<std::uint32_t>(in, path);
  const auto dim = read_pod<std::uint32_t>(in, path);
  if (dim == 0) throw Error(ErrorCode::kParse, path + ": zero descriptor dimension");
  auto read_string = [&] {
    const auto len = read_pod<std::uint16_t>(in, path);
    std::string s(len, '\0');
    if (len && !in.read(s.data(), len)) throw Error(ErrorCode::kParse, path + ": truncated name");
    return s;
  };
  std::vector<GlobalDescriptor> out;
  out.reserve(count);
  std::vector<float> values(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = read_string();
    std::string source = read_string();
    if (!in.read(reinterpret_cast<char*>(values.data()), sizeof(float) * dim)) {
      throw Error(ErrorCode::kParse, path + ": truncated vector");
    }
    out.emplace_back(std::move(name), values, std::move(source));
  }
  return out;
}

void write_descriptors(const std::string& path, const std::vector<GlobalDescriptor>& descriptors) {
  const std::uint32_t dim = descriptors.empty() ? 0 : static_cast<std::uint32_t>(descriptors[0].dim());
  auto out = open_out(path);
  out.write("OLDC", 4);
  write_pod<std::uint32_t>(out, 1);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(descriptors.size()));
  write_pod<std::uint32_t>(out, dim);
  auto write_string = [&](const std::string& s) {
    if (s.size() > 0xffff) throw Error(ErrorCode::kInvalidArgument, "name too long: " + s);
    write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  };
  for (const auto& d : descriptors) {
    if (d.dim() != dim) throw Error(ErrorCode::kDimensionMismatch, "descriptor dimensions differ");
    write_string(d.id());
    write_string(d.source_ref());
    out.write(reinterpret_cast<const char*>(d.vector().data()), sizeof(float) * dim);
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);
}

MatchFile parse_matches(const std::string& text, const std::string& origin) {
  MatchFile m;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[line.find_first_not_of(" \t")] == '#') {
      if (header) continue;
      std::istringstream hs(line.substr(line.find('#') + 1));
      std::string tok;
      while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const std::string value = tok.substr(eq + 1);
        if (key == "query") m.query = value;
        else if (key == "ref") m.ref = value;
        else if (key == "model") m.model = value;
      }
      if (m.query.empty() || m.ref.empty() || m.model.empty()) {
        throw Error(ErrorCode::kParse, parse_error(origin, lineno, "header needs query=, ref= and model="));
      }
      header = true;
      continue;
    }
    if (!header) throw Error(ErrorCode::kParse, parse_error(origin, lineno, "missing match header"));
    std::istringstream ls(line);
    double qu, qv, ru, rv;
    if (!(ls >> qu >> qv >> ru >> rv)) {
      throw Error(ErrorCode::kParse, parse_error(origin, lineno, "expected qu qv ru rv"));
    }
    m.matches.push_back({Pixel(qu, qv), Pixel(ru, rv)});
  }
  if (!header) throw Error(ErrorCode::kParse, origin + ": missing match header");
  return m;
}

MatchFile read_matches(const std::string& path) { return parse_matches(read_text_file(path), path); }

void write_matches(const std::string& path, const MatchFile& m) {
  std::ostringstream out;
  out << std::setprecision(17) << "# query=" << m.query << " ref=" << m.ref << " model=" << m.model
      << "\n";
  for (const auto& p : m.matches) {
    out << p.query.x() << " " << p.query.y() << " " << p.ref.x() << " " << p.ref.y() << "\n";
  }
  write_text_file(path, out.str());
}

std::vector<Vec3> read_cloud(const std::string& path) {
  const std::string data = read_text_file(path);
  std::vector<Vec3> pts;
  if (data.size() >= 4 && data.compare(0, 4, "OLPC") == 0) {
    if (data.size() < 8) throw Error(ErrorCode::kParse, path + ": truncated cloud");
    std::uint32_t count;
    std::memcpy(&count, data.data() + 4, 4);
    if (data.size() != 8 + static_cast<size_t>(count) * 12) {
      throw Error(ErrorCode::kParse, path + ": cloud size does not match its count");
    }
    pts.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      float xyz[3];
      std::memcpy(xyz, data.data() + 8 + static_cast<size_t>(i) * 12, 12);
      pts.emplace_back(xyz[0], xyz[1], xyz[2]);
    }
    return pts;
  }
  std::istringstream in(data);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      throw Error(ErrorCode::kParse, parse_error(path, lineno, "expected x y z"));
    }
    pts.emplace_back(x, y, z);
  }
  return pts;
}

void write_cloud_xyz(const std::string& path, const std::vector<Vec3>& points) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const auto& p : points) out << p.x() << " " << p.y() << " " << p.z() << "\n";
  write_text_file(path, out.str());
}

void write_cloud_binary(const std::string& path, const std::vector<Vec3>& points) {
  auto out = open_out(path);
  out.write("OLPC", 4);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(points.size()));
  for (const auto& p : points) {
    for (int i = 0; i < 3; ++i) write_pod<float>(out, static_cast<float>(p(i)));
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);
}

}  // namespace omniloc
