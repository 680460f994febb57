#include "splatview/splat_ply.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "splatview/error.h"

namespace splatview {
namespace {

static_assert(std::endian::native == std::endian::little,
              "splat PLY reader assumes a little-endian host");

struct Property {
  std::string name;
  std::string type;
  size_t size = 0;
  size_t offset = 0;
};

std::optional<size_t> ScalarTypeSize(const std::string& type) {
  static const std::map<std::string, size_t> kSizes = {
      {"char", 1},   {"uchar", 1},   {"int8", 1},    {"uint8", 1},
      {"short", 2},  {"ushort", 2},  {"int16", 2},   {"uint16", 2},
      {"int", 4},    {"uint", 4},    {"int32", 4},   {"uint32", 4},
      {"float", 4},  {"float32", 4}, {"double", 8},  {"float64", 8}};
  const auto it = kSizes.find(type);
  if (it == kSizes.end()) {
    return std::nullopt;
  }
  return it->second;
}

bool IsFloat32(const std::string& type) { return type == "float" || type == "float32"; }

bool IsNormal(const std::string& name) { return name == "nx" || name == "ny" || name == "nz"; }

bool IsFixedRequired(const std::string& name) {
  static const char* kNames[] = {"x",       "y",       "z",       "f_dc_0", "f_dc_1",
                                 "f_dc_2",  "opacity", "scale_0", "scale_1", "scale_2",
                                 "rot_0",   "rot_1",   "rot_2",   "rot_3"};
  for (const char* n : kNames) {
    if (name == n) return true;
  }
  return false;
}

std::optional<int> FRestIndex(const std::string& name) {
  constexpr std::string_view kPrefix = "f_rest_";
  if (name.rfind(kPrefix, 0) != 0 || name.size() == kPrefix.size()) {
    return std::nullopt;
  }
  int index = 0;
  for (size_t i = kPrefix.size(); i < name.size(); ++i) {
    if (name[i] < '0' || name[i] > '9') return std::nullopt;
    index = index * 10 + (name[i] - '0');
  }
  return index;
}

int InferShDegree(int rest_count) {
  for (int d = 0; d <= kMaxShDegree; ++d) {
    if (3 * (NumShCoeffs(d) - 1) == rest_count) {
      return d;
    }
  }
  throw DegreeInferenceError(fmt::format(
      "{} f_rest properties do not match any SH degree in [0, {}]", rest_count, kMaxShDegree));
}

struct Header {
  size_t vertex_count = 0;
  size_t stride = 0;
  std::vector<Property> properties;
  size_t body_offset = 0;
};

Header ParseHeader(const std::string& data, const std::string& label) {
  Header header;
  size_t pos = 0;
  int line_no = 0;
  bool saw_format = false;
  bool saw_vertex = false;
  auto next_line = [&]() -> std::optional<std::string> {
    if (pos >= data.size()) return std::nullopt;
    const size_t end = data.find('\n', pos);
    if (end == std::string::npos) return std::nullopt;
    std::string line = data.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    ++line_no;
    return line;
  };

  const auto magic = next_line();
  if (!magic || *magic != "ply") {
    throw FormatError(fmt::format("{}: missing 'ply' magic line", label));
  }
  while (true) {
    const auto line = next_line();
    if (!line) {
      throw FormatError(fmt::format("{}: header is not terminated by end_header", label));
    }
    std::istringstream ss(*line);
    std::string keyword;
    ss >> keyword;
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") {
      continue;
    }
    if (keyword == "end_header") {
      break;
    }
    if (keyword == "format") {
      std::string fmt_name, version;
      ss >> fmt_name >> version;
      if (fmt_name != "binary_little_endian" || version != "1.0") {
        throw FormatError(fmt::format(
            "{}: unsupported PLY format '{} {}', expected 'binary_little_endian 1.0'", label,
            fmt_name, version));
      }
      saw_format = true;
    } else if (keyword == "element") {
      std::string name;
      long long count = -1;
      ss >> name >> count;
      if (name != "vertex") {
        throw FormatError(fmt::format("{}:{}: unexpected element '{}'", label, line_no, name));
      }
      if (saw_vertex || count < 0) {
        throw FormatError(fmt::format("{}:{}: invalid vertex element", label, line_no));
      }
      saw_vertex = true;
      header.vertex_count = static_cast<size_t>(count);
    } else if (keyword == "property") {
      if (!saw_vertex) {
        throw FormatError(fmt::format("{}:{}: property before element", label, line_no));
      }
      Property prop;
      ss >> prop.type >> prop.name;
      if (prop.type == "list") {
        throw FormatError(fmt::format("{}:{}: list properties are not supported", label, line_no));
      }
      const auto size = ScalarTypeSize(prop.type);
      if (!size || prop.name.empty()) {
        throw FormatError(fmt::format("{}:{}: malformed property line '{}'", label, line_no, *line));
      }
      prop.size = *size;
      prop.offset = header.stride;
      header.stride += prop.size;
      header.properties.push_back(prop);
    } else {
      throw FormatError(fmt::format("{}:{}: unexpected header keyword '{}'", label, line_no, keyword));
    }
  }
  if (!saw_format) {
    throw FormatError(fmt::format("{}: header has no format line", label));
  }
  if (!saw_vertex) {
    throw FormatError(fmt::format("{}: header has no vertex element", label));
  }
  header.body_offset = pos;
  return header;
}

}  // namespace

SplatCloud LoadSplatPly(const std::filesystem::path& path) {
  const std::string label = path.string();
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw IoError(fmt::format("cannot open splat file {}", label));
  }
  const std::string data{std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};

  const Header header = ParseHeader(data, label);

  std::map<std::string, const Property*> by_name;
  int rest_count = 0;
  for (const Property& p : header.properties) {
    if (by_name.count(p.name)) {
      throw FormatError(fmt::format("{}: duplicate property '{}'", label, p.name));
    }
    by_name[p.name] = &p;
    if (IsNormal(p.name)) {
      continue;
    }
    const bool is_rest = FRestIndex(p.name).has_value();
    if (!is_rest && !IsFixedRequired(p.name)) {
      throw FormatError(fmt::format("{}: unexpected property '{}'", label, p.name));
    }
    if (!IsFloat32(p.type)) {
      throw FormatError(fmt::format("{}: property '{}' must be float32, got '{}'", label, p.name, p.type));
    }
    rest_count += is_rest ? 1 : 0;
  }

  auto require = [&](const std::string& name) -> size_t {
    const auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw FormatError(fmt::format("{}: missing required property '{}'", label, name));
    }
    return it->second->offset;
  };

  const size_t off_pos[3] = {require("x"), require("y"), require("z")};
  const size_t off_dc[3] = {require("f_dc_0"), require("f_dc_1"), require("f_dc_2")};
  const size_t off_opacity = require("opacity");
  const size_t off_scale[3] = {require("scale_0"), require("scale_1"), require("scale_2")};
  const size_t off_rot[4] = {require("rot_0"), require("rot_1"), require("rot_2"), require("rot_3")};
  std::vector<size_t> off_rest(rest_count);
  for (int i = 0; i < rest_count; ++i) {
    off_rest[i] = require(fmt::format("f_rest_{}", i));
  }
  const int degree = InferShDegree(rest_count);
  const int rest_per_channel = NumShCoeffs(degree) - 1;

  const size_t body_size = data.size() - header.body_offset;
  if (body_size < header.vertex_count * header.stride) {
    const size_t complete = header.stride == 0 ? 0 : body_size / header.stride;
    throw IoError(fmt::format(
        "{}: truncated body at byte offset {} (vertex {} of {} incomplete, file size {})", label,
        header.body_offset + complete * header.stride, complete, header.vertex_count, data.size()));
  }

  SplatCloud cloud;
  cloud.sh_degree = degree;
  cloud.gaussians.resize(header.vertex_count);
  const char* body = data.data() + header.body_offset;
  for (size_t v = 0; v < header.vertex_count; ++v) {
    const char* rec = body + v * header.stride;
    auto read = [rec](size_t offset) {
      float value;
      std::memcpy(&value, rec + offset, sizeof(float));
      return static_cast<double>(value);
    };
    Gaussian& g = cloud.gaussians[v];
    g.position = Vec3(read(off_pos[0]), read(off_pos[1]), read(off_pos[2]));
    const ActivatedParams act = ActivateGaussian(
        read(off_opacity), Vec3(read(off_scale[0]), read(off_scale[1]), read(off_scale[2])),
        Eigen::Vector4d(read(off_rot[0]), read(off_rot[1]), read(off_rot[2]), read(off_rot[3])));
    g.opacity = act.opacity;
    g.scale = act.scale;
    g.rotation = act.rotation;
    for (int c = 0; c < 3; ++c) {
      auto& channel = g.sh[c];
      channel.resize(NumShCoeffs(degree));
      channel[0] = read(off_dc[c]);
      for (int k = 0; k < rest_per_channel; ++k) {
        channel[k + 1] = read(off_rest[c * rest_per_channel + k]);
      }
    }
  }
  ValidateSplatCloud(cloud);
  return cloud;
}

}  // namespace splatview
