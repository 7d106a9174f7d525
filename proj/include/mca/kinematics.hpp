#pragma once

#include <array>

#include "mca/types.hpp"

namespace mca {

/**
 * @brief One row of a classic (distal) Denavit-Hartenberg table.
 *
 * The joint transform is Rot_z(theta_offset + q) * Trans_z(d) * Trans_x(a) * Rot_x(alpha).
 */
struct DhRow {
  double a = 0.0;             ///< link length (m)
  double alpha = 0.0;         ///< link twist (rad)
  double d = 0.0;             ///< link offset (m)
  double theta_offset = 0.0;  ///< joint-angle offset (rad)
};

using DhTable = std::array<DhRow, 6>;

/**
 * @brief End-effector (cockpit) pose.
 *
 * `rotation` is T^W: it maps world-frame vectors into cockpit-frame coordinates.
 * Its transpose is the usual orientation matrix whose columns are the cockpit
 * axes expressed in the world frame.
 */
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();

  /// Cockpit axes in world coordinates (T^W transposed).
  Mat3 orientation() const { return rotation.transpose(); }

  static Pose from_orientation(const Mat3& orientation, const Vec3& position) {
    return Pose{orientation.transpose(), position};
  }

  /// Homogeneous matrix [T^W r^W; 0 1].
  Mat4 homogeneous() const;
};

Mat4 dh_transform(const DhRow& row, double q);

/// Product of the six joint transforms in joint order.
Pose forward_kinematics(const DhTable& dh, const JointVector& q);

/// Rows 0-2 map joint rates to linear velocity, rows 3-5 to angular velocity (world frame).
Mat6 geometric_jacobian(const DhTable& dh, const JointVector& q);

struct IkOptions {
  double tolerance = 1e-12;
  int max_iterations = 50;
  double damping = 1e-6;
  // Damping grows towards max_damping as |det J| falls below this threshold.
  double manipulability_threshold = 1e-3;
  double max_damping = 0.05;
  // Per-iteration cap on the joint update norm (rad).
  double max_step = 0.5;
};

enum class IkStatus { Converged, NoConvergence };

struct IkResult {
  JointVector q;
  IkStatus status = IkStatus::NoConvergence;
  int iterations = 0;
  double error = 0.0;

  bool converged() const { return status == IkStatus::Converged; }
};

/// Translation-norm plus rotation-log-norm distance between two poses.
double pose_error(const Pose& a, const Pose& b);

/**
 * Damped least-squares Newton refinement of q_prev towards `target`.
 *
 * Returns NoConvergence together with the best iterate when the error is still
 * above tolerance after max_iterations (unreachable or near-singular target).
 */
IkResult inverse_kinematics(const DhTable& dh, const Pose& target, const JointVector& q_prev,
                            const IkOptions& options = {});

struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  bool gimbal_lock = false;
};

/// Intrinsic x-y-z decomposition R = Rx(roll) * Ry(pitch) * Rz(yaw).
EulerAngles rotation_to_euler(const Mat3& rotation);
Mat3 euler_to_rotation(double roll, double pitch, double yaw);

Mat3 skew(const Vec3& v);
Mat3 exp_so3(const Vec3& rotation_vector);
Vec3 log_so3(const Mat3& rotation);
Mat3 orthonormalize(const Mat3& m);

}  // namespace mca
