#include "mca/platform.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mca/errors.hpp"

namespace mca {

namespace {

// Acceptance threshold for an IK result that stopped short of the (much tighter)
// iteration tolerance, e.g. close to a singularity where damping slows convergence.
constexpr double kIkAcceptance = 1e-7;

// Largest velocity towards a position bound at distance `room` from which the joint
// can still stop using deceleration `brake` after this step's Euler update.
double braking_velocity(double room, double brake, double dt) {
  const double ad = brake * dt;
  return std::sqrt(ad * ad + 2.0 * brake * std::max(room, 0.0)) - ad;
}

}  // namespace

bool JointState::within(const JointLimits& l) const {
  for (int i = 0; i < 6; ++i) {
    if (q(i) < l.q_min(i) || q(i) > l.q_max(i)) return false;
    if (qd(i) < l.qd_min(i) || qd(i) > l.qd_max(i)) return false;
    if (qdd(i) < l.qdd_min(i) || qdd(i) > l.qdd_max(i)) return false;
  }
  return true;
}

CueSample perceived_cue(const PlatformState& s) {
  return {s.f_c - Vec3(0.0, 0.0, kGravity), s.omega_c};
}

WorldCommand rotate_action(const Action& action, const Mat3& world_to_cockpit) {
  // (T^W)^-1 = (T^W)^T for a rotation.
  return {world_to_cockpit.transpose() * action.jerk,
          world_to_cockpit.transpose() * action.angular_acceleration};
}

SuggestedMotion integrate_command(const PlatformState& s, const WorldCommand& c, double dt) {
  SuggestedMotion m;
  m.a_w = s.a_w + c.jerk * dt;
  m.v_w = s.v_w + m.a_w * dt;
  m.omega_w = s.omega_w + c.angular_acceleration * dt;
  const Vec3 position = s.pose.position + m.v_w * dt;
  const Mat3 orientation = orthonormalize(exp_so3(m.omega_w * dt) * s.pose.orientation());
  m.pose = Pose::from_orientation(orientation, position);
  return m;
}

LimitedJoints limit_joints(const JointVector& q_suggested, const JointState& prev,
                           const JointLimits& l, double dt) {
  LimitedJoints out;
  for (int i = 0; i < 6; ++i) {
    const double qp = prev.q(i);
    const double vp = prev.qd(i);
    double q = q_suggested(i);
    double v = (q - qp) / dt;
    double acc = (v - vp) / dt;
    bool engaged = false;

    if (acc > l.qdd_max(i) || acc < l.qdd_min(i)) {
      acc = std::clamp(acc, l.qdd_min(i), l.qdd_max(i));
      v = vp + acc * dt;
      q = qp + v * dt;
      engaged = true;
    }
    if (v > l.qd_max(i) || v < l.qd_min(i)) {
      v = std::clamp(v, l.qd_min(i), l.qd_max(i));
      q = qp + v * dt;
      acc = (v - vp) / dt;
      engaged = true;
    }
    if (v > 0.0) {
      const double vb = braking_velocity(l.q_max(i) - qp, -l.qdd_min(i), dt);
      if (v > vb) {
        v = vb;
        q = qp + v * dt;
        acc = (v - vp) / dt;
        engaged = true;
      }
    } else if (v < 0.0) {
      const double vb = -braking_velocity(qp - l.q_min(i), l.qdd_max(i), dt);
      if (v < vb) {
        v = vb;
        q = qp + v * dt;
        acc = (v - vp) / dt;
        engaged = true;
      }
    }
    if (q > l.q_max(i) || q < l.q_min(i)) {
      q = std::clamp(q, l.q_min(i), l.q_max(i));
      v = (q - qp) / dt;
      acc = (v - vp) / dt;
      engaged = true;
    }

    // Recomputed rates can land an ulp outside their bounds.
    out.joints.q(i) = q;
    out.joints.qd(i) = std::clamp(v, l.qd_min(i), l.qd_max(i));
    out.joints.qdd(i) = std::clamp(acc, l.qdd_min(i), l.qdd_max(i));
    out.engaged = out.engaged || engaged;
  }
  return out;
}

Platform::Platform(RobotModel robot, double dt, IkOptions ik)
    : robot_(std::move(robot)), dt_(dt), ik_(ik) {
  if (!(dt_ > 0.0)) throw ConfigError("platform: dt must be positive");
  robot_.limits.validate();
}

PlatformState Platform::reset(const JointVector& home) const {
  for (int i = 0; i < 6; ++i) {
    if (!std::isfinite(home(i)) || home(i) < robot_.limits.q_min(i) || home(i) > robot_.limits.q_max(i))
      throw InvalidHome("home joint " + std::to_string(i + 1) + " outside its position limits");
  }
  PlatformState s;
  s.joints.q = home;
  s.pose = forward_kinematics(robot_.dh, home);
  const EulerAngles e = rotation_to_euler(s.pose.orientation());
  s.euler_w = Vec3(e.roll, e.pitch, e.yaw);
  s.f_c = -(s.pose.rotation * gravity_world());
  s.r0 = s.pose.position;
  return s;
}

PlatformState Platform::step(const PlatformState& state, const Action& action) const {
  const WorldCommand command = rotate_action(action, state.pose.rotation);
  const SuggestedMotion suggested = integrate_command(state, command, dt_);
  return track(state, suggested.pose);
}

PlatformState Platform::track(const PlatformState& state, const Pose& target) const {
  StepFlags flags;
  const IkResult ik = inverse_kinematics(robot_.dh, target, state.joints.q, ik_);
  JointVector q_suggested = ik.q;
  if (!ik.converged() && !(ik.error < kIkAcceptance)) {
    q_suggested = state.joints.q;
    flags.ik_failed = true;
  }
  const LimitedJoints limited = limit_joints(q_suggested, state.joints, robot_.limits, dt_);
  flags.limited = limited.engaged;
  return finalize(state, limited.joints, flags);
}

PlatformState Platform::finalize(const PlatformState& prev, const JointState& joints, StepFlags flags) const {
  PlatformState s;
  s.joints = joints;
  s.pose = forward_kinematics(robot_.dh, joints.q);
  const Mat3 orientation = s.pose.orientation();
  s.v_w = (s.pose.position - prev.pose.position) / dt_;
  s.a_w = (s.v_w - prev.v_w) / dt_;
  s.omega_w = log_so3(orientation * prev.pose.orientation().transpose()) / dt_;
  const EulerAngles e = rotation_to_euler(orientation);
  s.euler_w = Vec3(e.roll, e.pitch, e.yaw);

  const Mat3& to_cockpit = s.pose.rotation;
  s.v_c = to_cockpit * s.v_w;
  s.a_c = to_cockpit * s.a_w;
  s.omega_c = to_cockpit * s.omega_w;
  s.f_c = s.a_c - to_cockpit * gravity_world();
  s.t = prev.t + dt_;
  s.r0 = prev.r0;
  s.flags = flags;
  return s;
}

std::string state_csv_header() {
  return "t,x,y,z,roll,pitch,yaw,vx,vy,vz,ax,ay,az,wx,wy,wz,"
         "vcx,vcy,vcz,acx,acy,acz,wcx,wcy,wcz,fcx,fcy,fcz,"
         "q1,q2,q3,q4,q5,q6,qd1,qd2,qd3,qd4,qd5,qd6,qdd1,qdd2,qdd3,qdd4,qdd5,qdd6,ik_failed,limited";
}

std::string state_csv_row(const PlatformState& s) {
  std::string row;
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    if (!row.empty()) row += ',';
    row += buf;
  };
  auto put3 = [&](const Vec3& v) {
    for (int i = 0; i < 3; ++i) put(v(i));
  };
  put(s.t);
  put3(s.pose.position);
  put3(s.euler_w);
  put3(s.v_w);
  put3(s.a_w);
  put3(s.omega_w);
  put3(s.v_c);
  put3(s.a_c);
  put3(s.omega_c);
  put3(s.f_c);
  for (int i = 0; i < 6; ++i) put(s.joints.q(i));
  for (int i = 0; i < 6; ++i) put(s.joints.qd(i));
  for (int i = 0; i < 6; ++i) put(s.joints.qdd(i));
  row += s.flags.ik_failed ? ",1" : ",0";
  row += s.flags.limited ? ",1" : ",0";
  return row;
}

}  // namespace mca
