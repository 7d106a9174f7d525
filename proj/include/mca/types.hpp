#pragma once

#include <Eigen/Dense>

namespace mca {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Joint angles of the six revolute axes (rad).
using JointVector = Vec6;

/// Magnitude of gravity (m/s^2). World z points up, so g^W = (0, 0, -kGravity).
inline constexpr double kGravity = 9.81;

/// Control period of the cueing loop (s).
inline constexpr double kControlPeriod = 0.012;

inline Vec3 gravity_world() { return Vec3(0.0, 0.0, -kGravity); }

}  // namespace mca
