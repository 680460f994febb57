#pragma once

#include <array>
#include <vector>

#include "splatview/rotation.h"

namespace splatview {

constexpr int kMaxShDegree = 3;

// Number of SH coefficients per color channel for a given degree.
constexpr int NumShCoeffs(int degree) { return (degree + 1) * (degree + 1); }

// One trained splat with activations already applied.
struct Gaussian {
  Vec3 position = Vec3::Zero();
  Quat rotation = Quat::Identity();  // unit norm
  Vec3 scale = Vec3::Ones();         // per-axis standard deviation, > 0
  double opacity = 1.0;              // in [0, 1]
  // sh[c][k]: channel c in {R,G,B}, basis function k in [0, (D+1)^2).
  std::array<std::vector<double>, 3> sh;

  int NumCoeffs() const { return static_cast<int>(sh[0].size()); }
};

struct SplatCloud {
  std::vector<Gaussian> gaussians;
  int sh_degree = 0;
};

struct ActivatedParams {
  double opacity;
  Vec3 scale;
  Quat rotation;
};

// Logistic opacity, exponential scale and normalized rotation, as stored in
// trained splat files. raw_rotation is (w, x, y, z). Throws ValidationError on
// a zero-norm rotation.
ActivatedParams ActivateGaussian(double raw_opacity, const Vec3& raw_scale,
                                 const Eigen::Vector4d& raw_rotation);

// R * diag(scale)^2 * R^T.
Mat3 Covariance3d(const Gaussian& g);

// Throws ValidationError if the cloud is empty, has an out-of-range degree or
// mixes coefficient counts.
void ValidateSplatCloud(const SplatCloud& cloud);

}  // namespace splatview
