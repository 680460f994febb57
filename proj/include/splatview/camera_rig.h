#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "splatview/colmap.h"

namespace splatview {

// Camera frame conventions. VISION is the COLMAP/OpenCV frame (+z forward,
// +y down); GRAPHICS is the Blender/OpenGL frame (-z forward, +y up). They
// differ by F = diag(1, -1, -1) applied on the camera side.
enum class Convention {
  kVision,
  kGraphics,
};

struct RingSpec {
  double elevation_deg = 0.0;  // in (-90, 90)
  int count = 1;
};

struct RigSpec {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  std::vector<RingSpec> rings;
  CameraIntrinsics intrinsics;
  Vec3 up_hint = Vec3::UnitZ();
  std::string name_prefix = "novel";
};

// Throws ValidationError for a non-positive radius, an empty ring count or an
// elevation outside (-90, 90).
void ValidateRigSpec(const RigSpec& spec);

// VISION-convention world-to-camera pose at `eye` whose +z axis points at
// `target` and whose +x axis is perpendicular to `up_hint`. Throws
// DegenerateUpError when the viewing direction is parallel to up_hint.
Pose LookAtPose(const Vec3& eye, const Vec3& target, const Vec3& up_hint);

// Rings of cameras on a sphere around spec.center, all looking at the
// center. Records are named {prefix}_{ring}_{k:04}.png with ids from 1.
std::vector<ImageRecord> GenerateRig(const RigSpec& spec);

// Re-expresses a pose between camera conventions; the camera center is kept.
Pose ConvertConvention(const Pose& pose, Convention from, Convention to);

// Four new poses per input, displaced by +/- offset along the source camera's
// x and y axes with unchanged orientation. Ids restart at 1.
std::vector<ImageRecord> GenerateOffsetPoses(std::span<const ImageRecord> records, double offset);

// Reads a `key = value` rig description. Keys: center, radius, ring
// (repeatable, "elevation_deg, count"), up, prefix, camera_id, model, width,
// height, fx, fy (or f), cx, cy. Lines starting with '#' are comments.
RigSpec ReadRigSpec(const std::filesystem::path& path);

}  // namespace splatview
