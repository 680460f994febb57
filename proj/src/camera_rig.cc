#include "splatview/camera_rig.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>

#include <fmt/format.h>

#include "splatview/error.h"

namespace splatview {

void ValidateRigSpec(const RigSpec& spec) {
  if (!(spec.radius > 0.0) || !std::isfinite(spec.radius)) {
    throw ValidationError(fmt::format("rig radius must be positive, got {}", spec.radius));
  }
  if (spec.rings.empty()) {
    throw ValidationError("rig has no rings");
  }
  for (size_t i = 0; i < spec.rings.size(); ++i) {
    const RingSpec& ring = spec.rings[i];
    if (ring.count < 1) {
      throw ValidationError(fmt::format("ring {} has camera count {}", i, ring.count));
    }
    if (!(std::abs(ring.elevation_deg) < 90.0)) {
      throw ValidationError(
          fmt::format("ring {} elevation {} outside (-90, 90)", i, ring.elevation_deg));
    }
  }
  if (!(spec.up_hint.norm() > 0.0)) {
    throw ValidationError("rig up hint is the zero vector");
  }
  ValidateCamera(spec.intrinsics);
  ValidateImageName(spec.name_prefix + "_0_0000.png");
}

Pose LookAtPose(const Vec3& eye, const Vec3& target, const Vec3& up_hint) {
  const Vec3 to_target = target - eye;
  if (!(to_target.norm() > 0.0)) {
    throw ValidationError("look-at eye and target coincide");
  }
  if (!(up_hint.norm() > 0.0)) {
    throw ValidationError("look-at up hint is the zero vector");
  }
  const Vec3 forward = to_target.normalized();
  const Vec3 side = forward.cross(up_hint.normalized());
  if (side.norm() < 1e-8) {
    throw DegenerateUpError("viewing direction is parallel to the up hint");
  }
  const Vec3 right = side.normalized();
  const Vec3 down = forward.cross(right);

  // Columns of the camera-to-world rotation are the camera axes in world.
  Mat3 c2w;
  c2w.col(0) = right;
  c2w.col(1) = down;
  c2w.col(2) = forward;

  Pose pose;
  pose.q = RotmatToQuat(c2w.transpose());
  pose.t = -(pose.R() * eye);
  return pose;
}

std::vector<ImageRecord> GenerateRig(const RigSpec& spec) {
  ValidateRigSpec(spec);
  std::vector<ImageRecord> records;
  uint32_t next_id = 1;
  for (size_t r = 0; r < spec.rings.size(); ++r) {
    const RingSpec& ring = spec.rings[r];
    const double theta = ring.elevation_deg * std::numbers::pi / 180.0;
    for (int k = 0; k < ring.count; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / ring.count;
      const Vec3 dir(std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi),
                     std::sin(theta));
      const Vec3 eye = spec.center + spec.radius * dir;
      ImageRecord rec;
      rec.image_id = next_id++;
      rec.pose = LookAtPose(eye, spec.center, spec.up_hint);
      rec.camera_id = spec.intrinsics.camera_id;
      rec.name = fmt::format("{}_{}_{:04d}.png", spec.name_prefix, r, k);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

Pose ConvertConvention(const Pose& pose, Convention from, Convention to) {
  if (from == to) {
    return pose;
  }
  // F * R_w2c is a half turn about the camera x axis, i.e. (0, 1, 0, 0) * q.
  const Quat& q = pose.q;
  Pose out;
  out.q = CanonicalQuat(Quat(-q.x(), q.w(), -q.z(), q.y()));
  out.t = Vec3(pose.t.x(), -pose.t.y(), -pose.t.z());
  return out;
}

std::vector<ImageRecord> GenerateOffsetPoses(std::span<const ImageRecord> records, double offset) {
  if (records.empty()) {
    throw ValidationError("offset pose generation needs at least one record");
  }
  if (!(offset > 0.0) || !std::isfinite(offset)) {
    throw ValidationError(fmt::format("offset must be positive, got {}", offset));
  }
  struct Shift {
    int axis;
    double sign;
    const char* tag;
  };
  static constexpr Shift kShifts[] = {{0, 1.0, "xp"}, {0, -1.0, "xn"}, {1, 1.0, "yp"}, {1, -1.0, "yn"}};

  std::vector<ImageRecord> out;
  out.reserve(records.size() * 4);
  uint32_t next_id = 1;
  for (const ImageRecord& src : records) {
    const Mat3 R = src.pose.R();
    const Vec3 center = CameraCenter(src.pose);
    const std::filesystem::path name(src.name);
    const std::string stem = name.stem().string();
    const std::string ext = name.has_extension() ? name.extension().string() : ".png";
    for (const Shift& s : kShifts) {
      // Row i of R is camera axis i expressed in world coordinates.
      const Vec3 axis = R.row(s.axis).transpose();
      const Vec3 moved = center + s.sign * offset * axis;
      ImageRecord rec;
      rec.image_id = next_id++;
      rec.pose.q = src.pose.q;
      rec.pose.t = -(R * moved);
      rec.camera_id = src.camera_id;
      rec.name = fmt::format("{}_{}{}", stem, s.tag, ext);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

namespace {

std::string_view TrimView(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<double> ParseNumberList(std::string_view value, size_t expected,
                                    const std::string& where) {
  std::vector<double> numbers;
  size_t start = 0;
  while (start <= value.size()) {
    size_t end = value.find(',', start);
    if (end == std::string_view::npos) end = value.size();
    const std::string_view token = TrimView(value.substr(start, end - start));
    double v = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
      throw FormatError(fmt::format("{}: cannot parse '{}' as a number", where, token));
    }
    numbers.push_back(v);
    start = end + 1;
  }
  if (numbers.size() != expected) {
    throw FormatError(fmt::format("{}: expected {} comma-separated values, got {}", where,
                                  expected, numbers.size()));
  }
  return numbers;
}

}  // namespace

RigSpec ReadRigSpec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot open rig spec {}", path.string()));
  }
  RigSpec spec;
  std::map<std::string, double> scalars;
  std::optional<double> f;
  bool saw_center = false, saw_radius = false;
  std::string model_name = "PINHOLE";

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = fmt::format("{}:{}", path.string(), line_no);
    const std::string_view trimmed = TrimView(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const size_t eq = trimmed.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError(fmt::format("{}: expected 'key = value'", where));
    }
    const std::string key(TrimView(trimmed.substr(0, eq)));
    const std::string_view value = TrimView(trimmed.substr(eq + 1));

    if (key == "center") {
      const auto v = ParseNumberList(value, 3, where);
      spec.center = Vec3(v[0], v[1], v[2]);
      saw_center = true;
    } else if (key == "up") {
      const auto v = ParseNumberList(value, 3, where);
      spec.up_hint = Vec3(v[0], v[1], v[2]);
    } else if (key == "ring") {
      const auto v = ParseNumberList(value, 2, where);
      if (v[1] != std::floor(v[1])) {
        throw FormatError(fmt::format("{}: ring count must be an integer", where));
      }
      spec.rings.push_back({v[0], static_cast<int>(v[1])});
    } else if (key == "prefix") {
      spec.name_prefix = std::string(value);
    } else if (key == "model") {
      model_name = std::string(value);
    } else if (key == "radius") {
      spec.radius = ParseNumberList(value, 1, where)[0];
      saw_radius = true;
    } else if (key == "f") {
      f = ParseNumberList(value, 1, where)[0];
    } else if (key == "camera_id" || key == "width" || key == "height" || key == "fx" ||
               key == "fy" || key == "cx" || key == "cy") {
      scalars[key] = ParseNumberList(value, 1, where)[0];
    } else {
      throw FormatError(fmt::format("{}: unknown key '{}'", where, key));
    }
  }

  const auto need = [&](const char* key) {
    const auto it = scalars.find(key);
    if (it == scalars.end()) {
      throw FormatError(fmt::format("{}: missing required key '{}'", path.string(), key));
    }
    return it->second;
  };
  if (!saw_center) throw FormatError(fmt::format("{}: missing required key 'center'", path.string()));
  if (!saw_radius) throw FormatError(fmt::format("{}: missing required key 'radius'", path.string()));

  CameraIntrinsics& cam = spec.intrinsics;
  if (model_name == "PINHOLE") {
    cam.model = CameraModel::kPinhole;
  } else if (model_name == "SIMPLE_PINHOLE") {
    cam.model = CameraModel::kSimplePinhole;
  } else {
    throw UnsupportedModelError(
        fmt::format("{}: unsupported camera model '{}'", path.string(), model_name));
  }
  const auto need_count = [&](const char* key) {
    const double v = need(key);
    if (!(v >= 1.0) || v != std::floor(v) || v > 4294967295.0) {
      throw FormatError(fmt::format("{}: '{}' must be a positive integer", path.string(), key));
    }
    return static_cast<uint32_t>(v);
  };
  cam.camera_id = scalars.count("camera_id") ? need_count("camera_id") : 1;
  cam.width = need_count("width");
  cam.height = need_count("height");
  if (f) {
    cam.fx = cam.fy = *f;
  } else {
    cam.fx = need("fx");
    cam.fy = cam.model == CameraModel::kSimplePinhole && !scalars.count("fy") ? cam.fx : need("fy");
  }
  cam.cx = need("cx");
  cam.cy = need("cy");
  ValidateRigSpec(spec);
  return spec;
}

}  // namespace splatview
