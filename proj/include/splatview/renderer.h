#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "splatview/colmap.h"
#include "splatview/gaussian.h"
#include "splatview/image.h"

namespace splatview {

struct RenderSettings {
  Vec3 background = Vec3::Zero();
  double near_plane = 0.1;
  int tile_size = 16;
  double alpha_cutoff = 1.0 / 255.0;
  double transmittance_floor = 1e-4;
  double lowpass = 0.3;  // added to the 2D covariance diagonal, pixels^2
  double sigma_extent = 3.0;
  int num_threads = 0;  // 0 picks std::thread::hardware_concurrency()
};

// Throws ValidationError for non-positive settings or alpha_cutoff >= 1.
void ValidateRenderSettings(const RenderSettings& s);

// A Gaussian after projection into one view. Pixel coordinates follow the
// COLMAP convention: pixel (i, j) covers [i, i+1) x [j, j+1), so its center is
// at (i + 0.5, j + 0.5).
struct Splat2D {
  Vec2 mean2d = Vec2::Zero();
  Mat2 cov2d = Mat2::Identity();  // includes the low-pass term
  Mat2 conic = Mat2::Identity();  // cov2d^-1
  double depth = 0.0;
  Vec3 color = Vec3::Zero();
  double opacity = 0.0;
  uint32_t source_index = 0;  // position in the input cloud
};

// Projects one Gaussian with the local affine (EWA) approximation. Returns
// nullopt when the splat is at or behind the near plane or when its 2D
// covariance is numerically degenerate (condition number above 1e12 before
// the low-pass term).
std::optional<Splat2D> ProjectGaussian(const Gaussian& g, const Pose& pose,
                                       const CameraIntrinsics& K, const RenderSettings& s);

// Real SH basis values for degrees 0..degree, in the usual 3DGS ordering.
// Entries beyond (degree + 1)^2 are zero.
std::array<double, 16> ShBasis(const Vec3& dir, int degree);

// View-dependent color for a unit direction from the camera to the splat,
// clamp(sum_k sh_k * Y_k(dir) + 0.5, 0, 1) per channel.
Vec3 EvaluateSh(const Gaussian& g, const Vec3& dir);

// Projects every Gaussian and returns the survivors ordered by depth, ties
// kept in input order.
std::vector<Splat2D> ProjectAndSort(const SplatCloud& cloud, const Pose& pose,
                                    const CameraIntrinsics& K, const RenderSettings& s);

// Optional per-pixel outputs: sum of compositing weights alpha_i * T_i and the
// transmittance left for the background. Row-major, one entry per pixel.
struct RenderDiagnostics {
  std::vector<double> weight_sum;
  std::vector<double> final_transmittance;
};

// Tiled front-to-back rasterizer.
ImageBuffer RenderView(const SplatCloud& cloud, const Pose& pose, const CameraIntrinsics& K,
                       const RenderSettings& s, RenderDiagnostics* diagnostics = nullptr);

// Reference renderer: every pixel walks the full depth-sorted list. Meant for
// small scenes and as an oracle for RenderView.
ImageBuffer BruteForceRender(const SplatCloud& cloud, const Pose& pose, const CameraIntrinsics& K,
                             const RenderSettings& s, RenderDiagnostics* diagnostics = nullptr);

// Renders every record into out_dir/<record.name> as 8-bit PNG and returns
// the written paths in record order. All camera ids and names are checked
// before anything is rendered.
std::vector<std::filesystem::path> RenderBatch(const SplatCloud& cloud,
                                               std::span<const ImageRecord> records,
                                               std::span<const CameraIntrinsics> cameras,
                                               const RenderSettings& s,
                                               const std::filesystem::path& out_dir);

}  // namespace splatview
