#include "splatview/colmap.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "splatview/error.h"

namespace splatview {
namespace {

namespace fs = std::filesystem;

constexpr uint64_t kInvalidPoint3dId = std::numeric_limits<uint64_t>::max();

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> tokens;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool IsSkippable(std::string_view line) {
  const std::string_view t = Trim(line);
  return t.empty() || t.front() == '#';
}

template <typename T>
T ParseNumber(std::string_view token, const std::string& where) {
  T value{};
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw FormatError(fmt::format("{}: cannot parse '{}' as a number", where, token));
  }
  return value;
}

CameraModel ModelFromName(std::string_view name, const std::string& where) {
  if (name == "SIMPLE_PINHOLE") return CameraModel::kSimplePinhole;
  if (name == "PINHOLE") return CameraModel::kPinhole;
  throw UnsupportedModelError(fmt::format("{}: unsupported camera model '{}'", where, name));
}

size_t NumParams(CameraModel model) { return model == CameraModel::kSimplePinhole ? 3 : 4; }

void AssignParams(CameraIntrinsics& cam, const std::vector<double>& params) {
  if (cam.model == CameraModel::kSimplePinhole) {
    cam.fx = cam.fy = params[0];
    cam.cx = params[1];
    cam.cy = params[2];
  } else {
    cam.fx = params[0];
    cam.fy = params[1];
    cam.cx = params[2];
    cam.cy = params[3];
  }
}

// Unit-norm within 1e-9 is kept as is; up to 1e-3 off is renormalized.
Quat CheckedQuat(double w, double x, double y, double z, const std::string& where) {
  Quat q(w, x, y, z);
  const double norm = q.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-3) {
    throw ValidationError(fmt::format("{}: quaternion norm {:.9g} is not unit", where, norm));
  }
  if (std::abs(norm - 1.0) > 1e-9) {
    q.coeffs() /= norm;
  }
  return q;
}

std::string FormatDouble(double v) { return fmt::format("{:.17g}", v); }

std::ofstream OpenForWrite(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError(fmt::format("cannot open {} for writing", path.string()));
  }
  return out;
}

std::ifstream OpenForRead(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) {
    throw IoError(fmt::format("cannot open {}", path.string()));
  }
  return in;
}

// Bounds-checked little-endian cursor over an in-memory file.
class BinaryReader {
 public:
  BinaryReader(std::string data, std::string label)
      : data_(std::move(data)), label_(std::move(label)) {}

  template <typename T>
  T Read(const char* what) {
    if (data_.size() - pos_ < sizeof(T)) {
      throw FormatError(fmt::format("{}: truncated at byte offset {} while reading {}", label_,
                                    pos_, what));
    }
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string ReadCString(const char* what) {
    const size_t end = data_.find('\0', pos_);
    if (end == std::string::npos) {
      throw FormatError(fmt::format("{}: truncated at byte offset {} while reading {}", label_,
                                    pos_, what));
    }
    std::string s = data_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return s;
  }

  void ExpectEnd() const {
    if (pos_ != data_.size()) {
      throw FormatError(fmt::format("{}: {} trailing bytes at byte offset {}", label_,
                                    data_.size() - pos_, pos_));
    }
  }

  size_t offset() const { return pos_; }
  const std::string& label() const { return label_; }

 private:
  std::string data_;
  std::string label_;
  size_t pos_ = 0;
};

BinaryReader LoadBinary(const fs::path& path) {
  std::ifstream in = OpenForRead(path, std::ios::binary);
  std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return BinaryReader(std::move(data), path.string());
}

}  // namespace

const char* CameraModelName(CameraModel model) {
  return model == CameraModel::kSimplePinhole ? "SIMPLE_PINHOLE" : "PINHOLE";
}

Mat3 Pose::R() const { return QuatToRotmat(q); }

bool operator==(const Pose& a, const Pose& b) {
  return a.q.coeffs() == b.q.coeffs() && a.t == b.t;
}

bool operator==(const ImageRecord& a, const ImageRecord& b) {
  return a.image_id == b.image_id && a.pose == b.pose && a.camera_id == b.camera_id &&
         a.name == b.name && a.points2d == b.points2d;
}

Vec3 CameraCenter(const Pose& pose) { return -(pose.R().transpose() * pose.t); }

void ValidateCamera(const CameraIntrinsics& cam) {
  const auto fail = [&](const char* what) {
    throw ValidationError(fmt::format("camera {}: {}", cam.camera_id, what));
  };
  if (cam.camera_id == 0) fail("camera_id must be positive");
  if (cam.width == 0 || cam.height == 0) fail("width and height must be positive");
  if (!(cam.fx > 0) || !(cam.fy > 0)) fail("focal lengths must be positive");
  if (!(cam.cx > 0 && cam.cx < static_cast<double>(cam.width))) fail("cx outside (0, width)");
  if (!(cam.cy > 0 && cam.cy < static_cast<double>(cam.height))) fail("cy outside (0, height)");
  if (cam.model == CameraModel::kSimplePinhole && cam.fx != cam.fy) {
    fail("SIMPLE_PINHOLE requires fx == fy");
  }
}

void ValidateImageName(const std::string& name) {
  if (name.empty()) {
    throw ValidationError("image name is empty");
  }
  if (name.find('/') != std::string::npos || name.find('\\') != std::string::npos) {
    throw ValidationError(fmt::format("image name '{}' contains a path separator", name));
  }
}

void ValidateModel(std::span<const CameraIntrinsics> cameras, std::span<const ImageRecord> images) {
  std::set<uint32_t> camera_ids;
  for (const auto& cam : cameras) {
    if (!camera_ids.insert(cam.camera_id).second) {
      throw IntegrityError(fmt::format("duplicate camera_id {}", cam.camera_id));
    }
  }
  std::set<uint32_t> image_ids;
  std::set<std::string> names;
  for (const auto& img : images) {
    if (!image_ids.insert(img.image_id).second) {
      throw IntegrityError(fmt::format("duplicate image_id {}", img.image_id));
    }
    if (!names.insert(img.name).second) {
      throw IntegrityError(fmt::format("duplicate image name '{}'", img.name));
    }
    if (!camera_ids.count(img.camera_id)) {
      throw IntegrityError(fmt::format("image {} ('{}') references unknown camera_id {}",
                                       img.image_id, img.name, img.camera_id));
    }
  }
}

std::vector<CameraIntrinsics> ReadCamerasText(const fs::path& path) {
  std::ifstream in = OpenForRead(path);
  std::vector<CameraIntrinsics> cameras;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsSkippable(line)) continue;
    const std::string where = fmt::format("{}:{}", path.string(), line_no);
    const auto tokens = SplitWhitespace(line);
    if (tokens.size() < 4) {
      throw FormatError(fmt::format("{}: expected CAMERA_ID MODEL WIDTH HEIGHT PARAMS...", where));
    }
    CameraIntrinsics cam;
    cam.camera_id = ParseNumber<uint32_t>(tokens[0], where);
    cam.model = ModelFromName(tokens[1], where);
    cam.width = ParseNumber<uint64_t>(tokens[2], where);
    cam.height = ParseNumber<uint64_t>(tokens[3], where);
    const size_t expected = NumParams(cam.model);
    if (tokens.size() - 4 != expected) {
      throw FormatError(fmt::format("{}: {} expects {} params, got {}", where,
                                    CameraModelName(cam.model), expected, tokens.size() - 4));
    }
    std::vector<double> params;
    for (size_t i = 4; i < tokens.size(); ++i) params.push_back(ParseNumber<double>(tokens[i], where));
    AssignParams(cam, params);
    ValidateCamera(cam);
    cameras.push_back(cam);
  }
  return cameras;
}

std::vector<ImageRecord> ReadImagesText(const fs::path& path) {
  std::ifstream in = OpenForRead(path);
  std::vector<ImageRecord> images;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsSkippable(line)) continue;
    const std::string where = fmt::format("{}:{}", path.string(), line_no);
    const auto tokens = SplitWhitespace(line);
    if (tokens.size() != 10) {
      throw FormatError(fmt::format(
          "{}: expected IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME, got {} fields", where,
          tokens.size()));
    }
    ImageRecord rec;
    rec.image_id = ParseNumber<uint32_t>(tokens[0], where);
    double v[7];
    for (int i = 0; i < 7; ++i) v[i] = ParseNumber<double>(tokens[1 + i], where);
    rec.pose.q = CheckedQuat(v[0], v[1], v[2], v[3], where);
    rec.pose.t = Vec3(v[4], v[5], v[6]);
    rec.camera_id = ParseNumber<uint32_t>(tokens[8], where);
    rec.name = std::string(tokens[9]);
    ValidateImageName(rec.name);

    if (!std::getline(in, line)) {
      throw FormatError(fmt::format("{}:{}: record for image {} is missing its POINTS2D line",
                                    path.string(), line_no + 1, rec.image_id));
    }
    ++line_no;
    const std::string points_where = fmt::format("{}:{}", path.string(), line_no);
    const auto pts = SplitWhitespace(line);
    if (pts.size() % 3 != 0) {
      throw FormatError(fmt::format("{}: POINTS2D line has {} fields, not a multiple of 3",
                                    points_where, pts.size()));
    }
    rec.points2d.reserve(pts.size() / 3);
    for (size_t i = 0; i < pts.size(); i += 3) {
      Point2D p;
      p.x = ParseNumber<double>(pts[i], points_where);
      p.y = ParseNumber<double>(pts[i + 1], points_where);
      p.point3d_id = ParseNumber<int64_t>(pts[i + 2], points_where);
      if (p.point3d_id < -1) {
        throw FormatError(fmt::format("{}: invalid POINT3D_ID {}", points_where, p.point3d_id));
      }
      rec.points2d.push_back(p);
    }
    images.push_back(std::move(rec));
  }
  return images;
}

std::vector<CameraIntrinsics> ReadCamerasBinary(const fs::path& path) {
  BinaryReader reader = LoadBinary(path);
  const uint64_t count = reader.Read<uint64_t>("camera count");
  std::vector<CameraIntrinsics> cameras;
  for (uint64_t i = 0; i < count; ++i) {
    const size_t record_offset = reader.offset();
    CameraIntrinsics cam;
    cam.camera_id = reader.Read<uint32_t>("camera_id");
    const int32_t model_id = reader.Read<int32_t>("model_id");
    if (model_id != 0 && model_id != 1) {
      throw UnsupportedModelError(fmt::format("{}: unsupported camera model id {} at byte offset {}",
                                              reader.label(), model_id, record_offset));
    }
    cam.model = static_cast<CameraModel>(model_id);
    cam.width = reader.Read<uint64_t>("width");
    cam.height = reader.Read<uint64_t>("height");
    std::vector<double> params(NumParams(cam.model));
    for (double& p : params) p = reader.Read<double>("camera params");
    AssignParams(cam, params);
    ValidateCamera(cam);
    cameras.push_back(cam);
  }
  reader.ExpectEnd();
  return cameras;
}

std::vector<ImageRecord> ReadImagesBinary(const fs::path& path) {
  BinaryReader reader = LoadBinary(path);
  const uint64_t count = reader.Read<uint64_t>("image count");
  std::vector<ImageRecord> images;
  for (uint64_t i = 0; i < count; ++i) {
    const std::string where = fmt::format("{} (byte offset {})", reader.label(), reader.offset());
    ImageRecord rec;
    rec.image_id = reader.Read<uint32_t>("image_id");
    double v[7];
    for (double& x : v) x = reader.Read<double>("pose");
    rec.pose.q = CheckedQuat(v[0], v[1], v[2], v[3], where);
    rec.pose.t = Vec3(v[4], v[5], v[6]);
    rec.camera_id = reader.Read<uint32_t>("camera_id");
    rec.name = reader.ReadCString("image name");
    ValidateImageName(rec.name);
    const uint64_t num_points = reader.Read<uint64_t>("num_points2d");
    for (uint64_t k = 0; k < num_points; ++k) {
      Point2D p;
      p.x = reader.Read<double>("point x");
      p.y = reader.Read<double>("point y");
      const uint64_t id = reader.Read<uint64_t>("point3d_id");
      p.point3d_id = id == kInvalidPoint3dId ? -1 : static_cast<int64_t>(id);
      rec.points2d.push_back(p);
    }
    images.push_back(std::move(rec));
  }
  reader.ExpectEnd();
  return images;
}

void WriteCamerasText(const fs::path& path, std::span<const CameraIntrinsics> cameras) {
  std::ofstream out = OpenForWrite(path);
  out << "# Camera list with one line of data per camera:\n";
  out << "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n";
  out << "# Number of cameras: " << cameras.size() << "\n";
  for (const auto& cam : cameras) {
    out << cam.camera_id << ' ' << CameraModelName(cam.model) << ' ' << cam.width << ' '
        << cam.height << ' ';
    if (cam.model == CameraModel::kSimplePinhole) {
      out << FormatDouble(cam.fx);
    } else {
      out << FormatDouble(cam.fx) << ' ' << FormatDouble(cam.fy);
    }
    out << ' ' << FormatDouble(cam.cx) << ' ' << FormatDouble(cam.cy) << '\n';
  }
  if (!out) {
    throw IoError(fmt::format("failed writing {}", path.string()));
  }
}

void WriteImagesText(const fs::path& path, std::span<const ImageRecord> images,
                     bool include_points) {
  size_t total_points = 0;
  for (const auto& img : images) total_points += include_points ? img.points2d.size() : 0;
  const double mean_obs =
      images.empty() ? 0.0 : static_cast<double>(total_points) / static_cast<double>(images.size());

  std::ofstream out = OpenForWrite(path);
  out << "# Image list with two lines of data per image:\n";
  out << "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n";
  out << "#   POINTS2D[] as (X, Y, POINT3D_ID)\n";
  out << "# Number of images: " << images.size()
      << ", mean observations per image: " << fmt::format("{:.17g}", mean_obs) << "\n";
  for (const auto& img : images) {
    const Quat& q = img.pose.q;
    const Vec3& t = img.pose.t;
    out << img.image_id << ' ' << FormatDouble(q.w()) << ' ' << FormatDouble(q.x()) << ' '
        << FormatDouble(q.y()) << ' ' << FormatDouble(q.z()) << ' ' << FormatDouble(t.x()) << ' '
        << FormatDouble(t.y()) << ' ' << FormatDouble(t.z()) << ' ' << img.camera_id << ' '
        << img.name << '\n';
    if (include_points) {
      bool first = true;
      for (const auto& p : img.points2d) {
        if (!first) out << ' ';
        first = false;
        out << FormatDouble(p.x) << ' ' << FormatDouble(p.y) << ' ' << p.point3d_id;
      }
    }
    out << '\n';
  }
  if (!out) {
    throw IoError(fmt::format("failed writing {}", path.string()));
  }
}

void WriteImagesText(const fs::path& path, std::span<const ImageRecord> images,
                     std::span<const CameraIntrinsics> cameras, bool include_points) {
  std::set<uint32_t> ids;
  for (const auto& cam : cameras) ids.insert(cam.camera_id);
  for (const auto& img : images) {
    if (!ids.count(img.camera_id)) {
      throw IntegrityError(fmt::format("image {} ('{}') references unknown camera_id {}",
                                       img.image_id, img.name, img.camera_id));
    }
  }
  WriteImagesText(path, images, include_points);
}

ColmapModel ReadModel(const fs::path& dir) {
  ColmapModel model;
  if (fs::exists(dir / "cameras.txt")) {
    model.cameras = ReadCamerasText(dir / "cameras.txt");
  } else if (fs::exists(dir / "cameras.bin")) {
    model.cameras = ReadCamerasBinary(dir / "cameras.bin");
  } else {
    throw IoError(fmt::format("no cameras.txt or cameras.bin in {}", dir.string()));
  }
  if (fs::exists(dir / "images.txt")) {
    model.images = ReadImagesText(dir / "images.txt");
  } else if (fs::exists(dir / "images.bin")) {
    model.images = ReadImagesBinary(dir / "images.bin");
  } else {
    throw IoError(fmt::format("no images.txt or images.bin in {}", dir.string()));
  }
  ValidateModel(model.cameras, model.images);
  return model;
}

void WriteModelText(const fs::path& dir, const ColmapModel& model, bool include_points) {
  ValidateModel(model.cameras, model.images);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError(fmt::format("cannot create directory {}: {}", dir.string(), ec.message()));
  }
  WriteCamerasText(dir / "cameras.txt", model.cameras);
  WriteImagesText(dir / "images.txt", model.images, model.cameras, include_points);
}

}  // namespace splatview
