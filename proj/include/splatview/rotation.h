#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace splatview {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Hamilton quaternion; constructed as Quat(w, x, y, z).
using Quat = Eigen::Quaterniond;

// Rotation matrix of a unit quaternion. The input is not renormalized.
Mat3 QuatToRotmat(const Quat& q);

// Inverse of QuatToRotmat, returned with w >= 0. Throws ValidationError when
// R is not orthonormal with det +1 within 1e-6.
Quat RotmatToQuat(const Mat3& R);

// Flips the sign of all components when w < 0.
Quat CanonicalQuat(const Quat& q);

}  // namespace splatview
