#pragma once

#include <filesystem>
#include <string>

#include "mca/kinematics.hpp"

namespace mca {

/// Per-joint position (rad), velocity (rad/s) and acceleration (rad/s^2) bounds.
struct JointLimits {
  JointVector q_min, q_max;
  JointVector qd_min, qd_max;
  JointVector qdd_min, qdd_max;

  /// Throws ConfigError unless min < max everywhere and zero lies strictly
  /// inside the velocity and acceleration ranges (needed to come to rest).
  void validate() const;
};

/// Kinematic description of the motion platform: geometry, limits and home configuration.
struct RobotModel {
  std::string name;
  DhTable dh;
  JointLimits limits;
  JointVector home;

  void validate() const;
};

/// Built-in 6R reference robot with a spherical wrist (reach about 3.5 m).
/// The home configuration holds the cockpit level, axes aligned with the world frame.
RobotModel reference_robot();

RobotModel load_robot(const std::filesystem::path& path);
void save_robot(const RobotModel& robot, const std::filesystem::path& path);

}  // namespace mca
