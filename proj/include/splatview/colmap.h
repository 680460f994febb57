#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "splatview/rotation.h"

namespace splatview {

enum class CameraModel {
  kSimplePinhole = 0,
  kPinhole = 1,
};

const char* CameraModelName(CameraModel model);

struct CameraIntrinsics {
  uint32_t camera_id = 1;
  CameraModel model = CameraModel::kPinhole;
  uint64_t width = 0;
  uint64_t height = 0;
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;

  bool operator==(const CameraIntrinsics&) const = default;
};

// World-to-camera rigid transform, x_cam = R(q) * x_world + t.
struct Pose {
  Quat q = Quat::Identity();
  Vec3 t = Vec3::Zero();

  Mat3 R() const;
};

struct Point2D {
  double x = 0;
  double y = 0;
  int64_t point3d_id = -1;  // -1 when the observation has no 3D point

  bool operator==(const Point2D&) const = default;
};

struct ImageRecord {
  uint32_t image_id = 0;
  Pose pose;
  uint32_t camera_id = 0;
  std::string name;
  std::vector<Point2D> points2d;
};

bool operator==(const Pose& a, const Pose& b);
bool operator==(const ImageRecord& a, const ImageRecord& b);

// C = -R^T t.
Vec3 CameraCenter(const Pose& pose);

// Throws ValidationError on a broken intrinsics invariant.
void ValidateCamera(const CameraIntrinsics& camera);

// Throws ValidationError for an empty name or one containing a path separator.
void ValidateImageName(const std::string& name);

// Checks camera and image id uniqueness and that every image's camera_id
// resolves. Throws IntegrityError.
void ValidateModel(std::span<const CameraIntrinsics> cameras, std::span<const ImageRecord> images);

// Readers. Text files use the standard COLMAP layout; binary files use the
// little-endian layout of cameras.bin / images.bin. Only SIMPLE_PINHOLE and
// PINHOLE cameras are accepted.
std::vector<CameraIntrinsics> ReadCamerasText(const std::filesystem::path& path);
std::vector<ImageRecord> ReadImagesText(const std::filesystem::path& path);
std::vector<CameraIntrinsics> ReadCamerasBinary(const std::filesystem::path& path);
std::vector<ImageRecord> ReadImagesBinary(const std::filesystem::path& path);

// Writers emit floats with 17 significant digits. With include_points false
// every record's second line is left empty.
void WriteCamerasText(const std::filesystem::path& path, std::span<const CameraIntrinsics> cameras);
void WriteImagesText(const std::filesystem::path& path, std::span<const ImageRecord> images,
                     bool include_points);
// Same, after checking that each record's camera_id is in `cameras`.
void WriteImagesText(const std::filesystem::path& path, std::span<const ImageRecord> images,
                     std::span<const CameraIntrinsics> cameras, bool include_points);

// A cameras/images pair.
struct ColmapModel {
  std::vector<CameraIntrinsics> cameras;
  std::vector<ImageRecord> images;
};

// Reads cameras.{txt,bin} and images.{txt,bin} from `dir`, preferring text.
ColmapModel ReadModel(const std::filesystem::path& dir);

// Validates and writes cameras.txt and images.txt into `dir`.
void WriteModelText(const std::filesystem::path& dir, const ColmapModel& model, bool include_points);

}  // namespace splatview
