#include "splatview/gaussian.h"

#include <cmath>

#include <fmt/format.h>

#include "splatview/error.h"

namespace splatview {

ActivatedParams ActivateGaussian(double raw_opacity, const Vec3& raw_scale,
                                 const Eigen::Vector4d& raw_rotation) {
  const double norm = raw_rotation.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw ValidationError("gaussian rotation has zero or non-finite norm");
  }
  ActivatedParams out;
  out.opacity = 1.0 / (1.0 + std::exp(-raw_opacity));
  out.scale = raw_scale.array().exp();
  const Eigen::Vector4d q = raw_rotation / norm;
  out.rotation = Quat(q[0], q[1], q[2], q[3]);
  return out;
}

Mat3 Covariance3d(const Gaussian& g) {
  const Mat3 R = QuatToRotmat(g.rotation);
  const Mat3 M = R * g.scale.asDiagonal();
  const Mat3 cov = M * M.transpose();
  return 0.5 * (cov + cov.transpose());
}

void ValidateSplatCloud(const SplatCloud& cloud) {
  if (cloud.gaussians.empty()) {
    throw ValidationError("splat cloud is empty");
  }
  if (cloud.sh_degree < 0 || cloud.sh_degree > kMaxShDegree) {
    throw ValidationError(fmt::format("unsupported SH degree {}", cloud.sh_degree));
  }
  const size_t expected = NumShCoeffs(cloud.sh_degree);
  for (size_t i = 0; i < cloud.gaussians.size(); ++i) {
    const Gaussian& g = cloud.gaussians[i];
    for (const auto& channel : g.sh) {
      if (channel.size() != expected) {
        throw ValidationError(fmt::format(
            "gaussian {} has {} SH coefficients per channel, expected {}", i,
            channel.size(), expected));
      }
    }
    if (std::abs(g.rotation.norm() - 1.0) > 1e-6) {
      throw ValidationError(fmt::format("gaussian {} rotation is not unit norm", i));
    }
    if (!(g.scale.minCoeff() > 0.0)) {
      throw ValidationError(fmt::format("gaussian {} has non-positive scale", i));
    }
    if (!(g.opacity >= 0.0 && g.opacity <= 1.0)) {
      throw ValidationError(fmt::format("gaussian {} opacity outside [0, 1]", i));
    }
  }
}

}  // namespace splatview
