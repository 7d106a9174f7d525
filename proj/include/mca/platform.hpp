#pragma once

#include <string>

#include "mca/kinematics.hpp"
#include "mca/robot.hpp"

namespace mca {

struct JointState {
  JointVector q = JointVector::Zero();
  JointVector qd = JointVector::Zero();
  JointVector qdd = JointVector::Zero();

  /// True when all 18 inequalities of `limits` hold.
  bool within(const JointLimits& limits) const;
};

/// Agent command in the cockpit frame.
struct Action {
  Vec3 jerk = Vec3::Zero();                  ///< m/s^3
  Vec3 angular_acceleration = Vec3::Zero();  ///< rad/s^2
};

/// Action rotated into the world frame.
struct WorldCommand {
  Vec3 jerk = Vec3::Zero();
  Vec3 angular_acceleration = Vec3::Zero();
};

struct StepFlags {
  bool ik_failed = false;  ///< IK did not converge; the previous joint position was held
  bool limited = false;    ///< at least one joint bound or the braking check engaged
};

/**
 * @brief Full kinematic state of the cockpit.
 *
 * World-frame quantities carry a `_w` suffix, cockpit-frame ones `_c`.
 * f_c is the specific force a^C - T^W g^W.
 */
struct PlatformState {
  Pose pose;
  Vec3 v_w = Vec3::Zero();
  Vec3 a_w = Vec3::Zero();
  Vec3 omega_w = Vec3::Zero();
  Vec3 euler_w = Vec3::Zero();  ///< roll, pitch, yaw of the cockpit orientation
  Vec3 v_c = Vec3::Zero();
  Vec3 a_c = Vec3::Zero();
  Vec3 omega_c = Vec3::Zero();
  Vec3 f_c = Vec3::Zero();
  JointState joints;
  double t = 0.0;
  Vec3 r0 = Vec3::Zero();
  StepFlags flags;
};

/// Cue felt by the occupant: specific force relative to the static 1 g level, and angular velocity.
struct CueSample {
  Vec3 specific_force = Vec3::Zero();
  Vec3 angular_velocity = Vec3::Zero();
};

/// f^C - (0, 0, g) and omega^C. Zero for a level platform at rest.
CueSample perceived_cue(const PlatformState& state);

WorldCommand rotate_action(const Action& action, const Mat3& world_to_cockpit);

/// Pose and rates suggested by integrating a world-frame command over one period.
struct SuggestedMotion {
  Pose pose;
  Vec3 a_w = Vec3::Zero();
  Vec3 v_w = Vec3::Zero();
  Vec3 omega_w = Vec3::Zero();
};

SuggestedMotion integrate_command(const PlatformState& state, const WorldCommand& command, double dt);

struct LimitedJoints {
  JointState joints;
  bool engaged = false;
};

/**
 * Makes a suggested joint position feasible. Per joint, in order: clamp the implied
 * acceleration, clamp the velocity, reduce the velocity so the joint can still brake
 * to rest before its position limit, clamp the position.
 */
LimitedJoints limit_joints(const JointVector& q_suggested, const JointState& previous,
                           const JointLimits& limits, double dt);

/**
 * @brief Constraint model of the motion platform.
 *
 * Stateless with respect to the trajectory: every call maps a state to its successor,
 * so one instance can drive any number of independent state sequences.
 */
class Platform {
 public:
  explicit Platform(RobotModel robot, double dt = kControlPeriod, IkOptions ik = {});

  const RobotModel& robot() const { return robot_; }
  double dt() const { return dt_; }

  /// State at rest at FK(home); records r0. Throws InvalidHome when home violates the limits.
  PlatformState reset(const JointVector& home) const;
  PlatformState reset() const { return reset(robot_.home); }

  /// Agent action -> rotate -> integrate -> track().
  PlatformState step(const PlatformState& state, const Action& action) const;

  /// IK towards `target` seeded at the current joints, joint limiting, FK, and
  /// Euler differentiation against `state`.
  PlatformState track(const PlatformState& state, const Pose& target) const;

 private:
  PlatformState finalize(const PlatformState& previous, const JointState& joints, StepFlags flags) const;

  RobotModel robot_;
  double dt_;
  IkOptions ik_;
};

/// Column names of `state_csv_row`, in order.
std::string state_csv_header();
std::string state_csv_row(const PlatformState& state);

}  // namespace mca
