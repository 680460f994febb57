#include "splatview/renderer.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "splatview/error.h"

namespace splatview {
namespace {

namespace fs = std::filesystem;

constexpr double kSh0 = 0.28209479177387814;
constexpr double kSh1 = 0.4886025119029199;
constexpr double kSh2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr double kSh3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                           0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};
constexpr double kMaxAlpha = 0.99;
constexpr double kMaxCondition = 1e12;

// Flat copy of the fields the per-pixel loop touches.
struct RasterSplat {
  double mx, my;
  double ca, cb, cc;  // conic entries (0,0), (0,1), (1,1)
  double opacity;
  double r, g, b;
};

RasterSplat Flatten(const Splat2D& s) {
  return {s.mean2d.x(), s.mean2d.y(), s.conic(0, 0), s.conic(0, 1), s.conic(1, 1),
          s.opacity,    s.color.x(),  s.color.y(),   s.color.z()};
}

void CheckImageSize(const CameraIntrinsics& K) {
  if (K.width == 0 || K.height == 0) {
    throw ValidationError(fmt::format("cannot render a {}x{} image", K.width, K.height));
  }
}

int ThreadCount(const RenderSettings& s, size_t work_items) {
  int n = s.num_threads > 0 ? s.num_threads : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(n, 1);
  return static_cast<int>(std::min<size_t>(n, std::max<size_t>(work_items, 1)));
}

// Runs fn(i) for i in [0, count) over a few worker threads.
template <typename Fn>
void ParallelFor(size_t count, int threads, Fn&& fn) {
  if (threads <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (size_t i = next++; i < count; i = next++) fn(i);
    });
  }
}

// Largest eigenvalue of a symmetric 2x2 matrix.
double MaxEigenvalue(const Mat2& m) {
  const double mid = 0.5 * (m(0, 0) + m(1, 1));
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return mid + std::sqrt(std::max(0.0, mid * mid - det));
}

// Half-width in pixels beyond which the splat's alpha is guaranteed below the
// cutoff; at least sigma_extent standard deviations. Returns nullopt for
// splats that never reach the cutoff.
std::optional<double> SplatRadius(const Splat2D& s, const RenderSettings& settings) {
  if (std::min(s.opacity, kMaxAlpha) < settings.alpha_cutoff) {
    return std::nullopt;
  }
  const double support = std::sqrt(2.0 * std::log(s.opacity / settings.alpha_cutoff));
  const double extent = std::max(settings.sigma_extent, support);
  return std::ceil(extent * std::sqrt(MaxEigenvalue(s.cov2d)));
}

}  // namespace

void ValidateRenderSettings(const RenderSettings& s) {
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(s.near_plane) || !positive(s.alpha_cutoff) || !positive(s.transmittance_floor) ||
      !positive(s.lowpass) || !positive(s.sigma_extent) || s.tile_size <= 0) {
    throw ValidationError("render settings must all be positive");
  }
  if (!(s.alpha_cutoff < 1.0)) {
    throw ValidationError("alpha cutoff must be below 1");
  }
  if ((s.background.array() < 0.0).any() || (s.background.array() > 1.0).any()) {
    throw ValidationError("background color must lie in [0, 1]");
  }
}

std::array<double, 16> ShBasis(const Vec3& dir, int degree) {
  std::array<double, 16> y{};
  y[0] = kSh0;
  if (degree < 1) return y;
  const double x = dir.x(), yy = dir.y(), z = dir.z();
  y[1] = -kSh1 * yy;
  y[2] = kSh1 * z;
  y[3] = -kSh1 * x;
  if (degree < 2) return y;
  const double xx = x * x, y2 = yy * yy, zz = z * z;
  const double xy = x * yy, yz = yy * z, xz = x * z;
  y[4] = kSh2[0] * xy;
  y[5] = kSh2[1] * yz;
  y[6] = kSh2[2] * (2.0 * zz - xx - y2);
  y[7] = kSh2[3] * xz;
  y[8] = kSh2[4] * (xx - y2);
  if (degree < 3) return y;
  y[9] = kSh3[0] * yy * (3.0 * xx - y2);
  y[10] = kSh3[1] * xy * z;
  y[11] = kSh3[2] * yy * (4.0 * zz - xx - y2);
  y[12] = kSh3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * y2);
  y[13] = kSh3[4] * x * (4.0 * zz - xx - y2);
  y[14] = kSh3[5] * z * (xx - y2);
  y[15] = kSh3[6] * x * (xx - 3.0 * y2);
  return y;
}

Vec3 EvaluateSh(const Gaussian& g, const Vec3& dir) {
  const int n = g.NumCoeffs();
  int degree = 0;
  while (degree < kMaxShDegree && NumShCoeffs(degree) < n) ++degree;
  const auto basis = ShBasis(dir, degree);
  Vec3 color;
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += g.sh[c][k] * basis[k];
    color[c] = std::clamp(sum + 0.5, 0.0, 1.0);
  }
  return color;
}

std::optional<Splat2D> ProjectGaussian(const Gaussian& g, const Pose& pose,
                                       const CameraIntrinsics& K, const RenderSettings& s) {
  const Mat3 W = pose.R();
  const Vec3 p = W * g.position + pose.t;
  if (!(p.z() > s.near_plane)) {
    return std::nullopt;
  }
  const double inv_z = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> J;
  J << K.fx * inv_z, 0.0, -K.fx * p.x() * inv_z * inv_z,
       0.0, K.fy * inv_z, -K.fy * p.y() * inv_z * inv_z;
  const Eigen::Matrix<double, 2, 3> T = J * W;
  Mat2 cov = T * Covariance3d(g) * T.transpose();
  cov(1, 0) = cov(0, 1);

  const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
  const double disc = std::sqrt(std::max(0.0, mid * mid - det));
  const double lmax = mid + disc;
  const double lmin = mid - disc;
  if (!(lmin > 0.0) || !(lmax <= kMaxCondition * lmin)) {
    return std::nullopt;
  }

  Splat2D out;
  out.mean2d = Vec2(K.fx * p.x() * inv_z + K.cx, K.fy * p.y() * inv_z + K.cy);
  out.cov2d = cov + s.lowpass * Mat2::Identity();
  out.conic = out.cov2d.inverse();
  out.conic(1, 0) = out.conic(0, 1);
  out.depth = p.z();
  out.opacity = g.opacity;
  const Vec3 view_dir = (g.position - CameraCenter(pose)).normalized();
  out.color = EvaluateSh(g, view_dir);
  return out;
}

std::vector<Splat2D> ProjectAndSort(const SplatCloud& cloud, const Pose& pose,
                                    const CameraIntrinsics& K, const RenderSettings& s) {
  std::vector<Splat2D> splats;
  splats.reserve(cloud.gaussians.size());
  for (size_t i = 0; i < cloud.gaussians.size(); ++i) {
    if (auto splat = ProjectGaussian(cloud.gaussians[i], pose, K, s)) {
      splat->source_index = static_cast<uint32_t>(i);
      splats.push_back(*splat);
    }
  }
  std::stable_sort(splats.begin(), splats.end(),
                   [](const Splat2D& a, const Splat2D& b) { return a.depth < b.depth; });
  return splats;
}

ImageBuffer RenderView(const SplatCloud& cloud, const Pose& pose, const CameraIntrinsics& K,
                       const RenderSettings& s, RenderDiagnostics* diagnostics) {
  ValidateRenderSettings(s);
  CheckImageSize(K);
  const size_t width = K.width, height = K.height;
  const size_t tile = static_cast<size_t>(s.tile_size);
  const size_t tiles_x = (width + tile - 1) / tile;
  const size_t tiles_y = (height + tile - 1) / tile;

  const std::vector<Splat2D> sorted = ProjectAndSort(cloud, pose, K, s);

  // Bin in depth order so every tile list is already sorted.
  std::vector<RasterSplat> flat;
  flat.reserve(sorted.size());
  std::vector<std::vector<uint32_t>> tile_lists(tiles_x * tiles_y);
  for (const Splat2D& splat : sorted) {
    const auto radius = SplatRadius(splat, s);
    if (!radius) continue;
    // Pixel i is inside when |i + 0.5 - mean| <= radius; one pixel of slack.
    const double x0 = std::floor(splat.mean2d.x() - *radius - 0.5) - 1.0;
    const double x1 = std::ceil(splat.mean2d.x() + *radius - 0.5) + 1.0;
    const double y0 = std::floor(splat.mean2d.y() - *radius - 0.5) - 1.0;
    const double y1 = std::ceil(splat.mean2d.y() + *radius - 0.5) + 1.0;
    if (x1 < 0.0 || y1 < 0.0 || x0 >= static_cast<double>(width) ||
        y0 >= static_cast<double>(height)) {
      continue;
    }
    const size_t px0 = static_cast<size_t>(std::max(x0, 0.0));
    const size_t py0 = static_cast<size_t>(std::max(y0, 0.0));
    const size_t px1 = static_cast<size_t>(std::min(x1, static_cast<double>(width - 1)));
    const size_t py1 = static_cast<size_t>(std::min(y1, static_cast<double>(height - 1)));
    const uint32_t id = static_cast<uint32_t>(flat.size());
    flat.push_back(Flatten(splat));
    for (size_t ty = py0 / tile; ty <= py1 / tile; ++ty) {
      for (size_t tx = px0 / tile; tx <= px1 / tile; ++tx) {
        tile_lists[ty * tiles_x + tx].push_back(id);
      }
    }
  }

  ImageBuffer image(width, height);
  if (diagnostics) {
    diagnostics->weight_sum.assign(width * height, 0.0);
    diagnostics->final_transmittance.assign(width * height, 1.0);
  }
  const double bg[3] = {s.background.x(), s.background.y(), s.background.z()};

  ParallelFor(tile_lists.size(), ThreadCount(s, tile_lists.size()), [&](size_t t) {
    const std::vector<uint32_t>& list = tile_lists[t];
    const size_t tx = t % tiles_x, ty = t / tiles_x;
    const size_t xe = std::min(width, (tx + 1) * tile);
    const size_t ye = std::min(height, (ty + 1) * tile);
    for (size_t y = ty * tile; y < ye; ++y) {
      for (size_t x = tx * tile; x < xe; ++x) {
        const double px = static_cast<double>(x) + 0.5;
        const double py = static_cast<double>(y) + 0.5;
        double T = 1.0, weight = 0.0;
        double c[3] = {0.0, 0.0, 0.0};
        for (const uint32_t id : list) {
          const RasterSplat& sp = flat[id];
          const double dx = px - sp.mx, dy = py - sp.my;
          const double power = -0.5 * (sp.ca * dx * dx + 2.0 * sp.cb * dx * dy + sp.cc * dy * dy);
          const double alpha = std::min(kMaxAlpha, sp.opacity * std::exp(power));
          if (alpha < s.alpha_cutoff) continue;
          const double w = alpha * T;
          c[0] += sp.r * w;
          c[1] += sp.g * w;
          c[2] += sp.b * w;
          weight += w;
          T *= 1.0 - alpha;
          if (T < s.transmittance_floor) break;
        }
        for (int ch = 0; ch < 3; ++ch) {
          image.at(x, y, ch) = static_cast<float>(std::clamp(c[ch] + T * bg[ch], 0.0, 1.0));
        }
        if (diagnostics) {
          diagnostics->weight_sum[y * width + x] = weight;
          diagnostics->final_transmittance[y * width + x] = T;
        }
      }
    }
  });
  return image;
}

ImageBuffer BruteForceRender(const SplatCloud& cloud, const Pose& pose, const CameraIntrinsics& K,
                             const RenderSettings& s, RenderDiagnostics* diagnostics) {
  ValidateRenderSettings(s);
  CheckImageSize(K);
  const size_t width = K.width, height = K.height;
  const std::vector<Splat2D> sorted = ProjectAndSort(cloud, pose, K, s);

  ImageBuffer image(width, height);
  if (diagnostics) {
    diagnostics->weight_sum.assign(width * height, 0.0);
    diagnostics->final_transmittance.assign(width * height, 1.0);
  }
  for (size_t y = 0; y < height; ++y) {
    for (size_t x = 0; x < width; ++x) {
      const Vec2 pixel(static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5);
      double T = 1.0, weight = 0.0;
      Vec3 color = Vec3::Zero();
      for (const Splat2D& sp : sorted) {
        const Vec2 d = pixel - sp.mean2d;
        const double mahalanobis = d.dot(sp.conic * d);
        const double alpha = std::min(kMaxAlpha, sp.opacity * std::exp(-0.5 * mahalanobis));
        if (alpha < s.alpha_cutoff) continue;
        color += sp.color * (alpha * T);
        weight += alpha * T;
        T *= 1.0 - alpha;
        if (T < s.transmittance_floor) break;
      }
      color += T * s.background;
      for (int ch = 0; ch < 3; ++ch) {
        image.at(x, y, ch) = static_cast<float>(std::clamp(color[ch], 0.0, 1.0));
      }
      if (diagnostics) {
        diagnostics->weight_sum[y * width + x] = weight;
        diagnostics->final_transmittance[y * width + x] = T;
      }
    }
  }
  return image;
}

std::vector<fs::path> RenderBatch(const SplatCloud& cloud, std::span<const ImageRecord> records,
                                  std::span<const CameraIntrinsics> cameras,
                                  const RenderSettings& s, const fs::path& out_dir) {
  ValidateRenderSettings(s);
  std::vector<const CameraIntrinsics*> resolved;
  resolved.reserve(records.size());
  std::set<std::string> names;
  for (const ImageRecord& rec : records) {
    ValidateImageName(rec.name);
    if (!names.insert(rec.name).second) {
      throw IntegrityError(fmt::format("duplicate image name '{}'", rec.name));
    }
    const auto it = std::find_if(cameras.begin(), cameras.end(), [&](const CameraIntrinsics& c) {
      return c.camera_id == rec.camera_id;
    });
    if (it == cameras.end()) {
      throw IntegrityError(fmt::format("image {} ('{}') references unknown camera_id {}",
                                       rec.image_id, rec.name, rec.camera_id));
    }
    resolved.push_back(&*it);
  }
  if (records.empty()) {
    return {};
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError(fmt::format("cannot create output directory {}", out_dir.string()));
  }

  std::vector<fs::path> written;
  written.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    const ImageBuffer image = RenderView(cloud, records[i].pose, *resolved[i], s);
    const fs::path path = out_dir / records[i].name;
    WritePng(image, path);
    written.push_back(path);
  }
  return written;
}

}  // namespace splatview
