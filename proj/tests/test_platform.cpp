#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "mca/errors.hpp"
#include "mca/platform.hpp"
#include "test_support.hpp"

using namespace mca;

namespace {

constexpr double kDt = 0.012;

bool bit_equal(const PlatformState& a, const PlatformState& b) {
  return a.pose.rotation == b.pose.rotation && a.pose.position == b.pose.position && a.v_w == b.v_w &&
         a.a_w == b.a_w && a.omega_w == b.omega_w && a.f_c == b.f_c && a.joints.q == b.joints.q &&
         a.joints.qd == b.joints.qd && a.joints.qdd == b.joints.qdd && a.t == b.t;
}

void check_invariants(const Platform& platform, const PlatformState& s) {
  REQUIRE(s.joints.within(platform.robot().limits));
  const Pose fk = forward_kinematics(platform.robot().dh, s.joints.q);
  CHECK((fk.position - s.pose.position).norm() < 1e-9);
  CHECK((fk.rotation - s.pose.rotation).norm() < 1e-9);
  CHECK((s.f_c - (s.a_c - s.pose.rotation * gravity_world())).norm() < 1e-12);
}

}  // namespace

TEST_CASE("rotate_action") {
  Action a;
  a.jerk = Vec3(1.0, -2.0, 0.5);
  a.angular_acceleration = Vec3(0.1, 0.2, -0.3);
  const WorldCommand same = rotate_action(a, Mat3::Identity());
  CHECK(same.jerk == a.jerk);
  CHECK(same.angular_acceleration == a.angular_acceleration);

  // Cockpit yawed by 90 degrees: its x axis points along world y.
  const Mat3 yawed = Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitZ()).toRotationMatrix();
  Action forward;
  forward.jerk = Vec3(1.0, 0.0, 0.0);
  const WorldCommand w = rotate_action(forward, yawed.transpose());
  CHECK((w.jerk - Vec3(0.0, 1.0, 0.0)).norm() < 1e-15);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    const Mat3 r = exp_so3(Vec3(n(rng), n(rng), n(rng)) / 3.0);
    Action b;
    b.jerk = Vec3(n(rng), n(rng), n(rng));
    b.angular_acceleration = Vec3(n(rng), n(rng), n(rng));
    const WorldCommand c = rotate_action(b, r);
    CHECK(std::abs(c.jerk.norm() - b.jerk.norm()) < 1e-12);
    CHECK(std::abs(c.angular_acceleration.norm() - b.angular_acceleration.norm()) < 1e-12);
  }
}

TEST_CASE("integrate_command hand-stepped Euler chain") {
  const Platform platform(reference_robot());
  const PlatformState rest = platform.reset();

  const SuggestedMotion idle = integrate_command(rest, WorldCommand{}, kDt);
  CHECK(idle.pose.position == rest.pose.position);
  CHECK((idle.pose.rotation - rest.pose.rotation).norm() < 1e-15);

  WorldCommand jerk;
  jerk.jerk = Vec3(6.0, 0.0, 0.0);
  const SuggestedMotion m = integrate_command(rest, jerk, kDt);
  CHECK(m.a_w.x() == doctest::Approx(0.072).epsilon(1e-14));
  CHECK(m.v_w.x() == doctest::Approx(8.64e-4).epsilon(1e-14));
  CHECK(m.pose.position.x() - rest.pose.position.x() == doctest::Approx(1.0368e-5).epsilon(1e-9));

  WorldCommand spin;
  spin.angular_acceleration = Vec3(0.0, 0.0, 1.0);
  const SuggestedMotion s = integrate_command(rest, spin, kDt);
  CHECK(s.omega_w.z() == doctest::Approx(0.012).epsilon(1e-14));
  const Vec3 increment = log_so3(s.pose.orientation() * rest.pose.orientation().transpose());
  CHECK((increment - Vec3(0.0, 0.0, 1.44e-4)).norm() < 1e-15);
}

TEST_CASE("limit_joints passes feasible motion through unchanged") {
  const RobotModel robot = reference_robot();
  JointState prev;
  prev.q = robot.home;
  JointVector q = robot.home;
  q(0) += 1e-5;
  const LimitedJoints out = limit_joints(q, prev, robot.limits, kDt);
  CHECK_FALSE(out.engaged);
  CHECK(out.joints.q == q);
}

TEST_CASE("limit_joints clamps an excessive velocity demand") {
  const RobotModel robot = reference_robot();
  JointState prev;
  prev.q = robot.home;
  prev.qd(0) = robot.limits.qd_max(0);
  JointVector q = prev.q;
  q(0) += 2.0 * robot.limits.qd_max(0) * kDt;
  const LimitedJoints out = limit_joints(q, prev, robot.limits, kDt);
  CHECK(out.engaged);
  CHECK(out.joints.qd(0) == robot.limits.qd_max(0));
  CHECK(out.joints.q(0) == doctest::Approx(prev.q(0) + robot.limits.qd_max(0) * kDt).epsilon(1e-15));
  CHECK(out.joints.within(robot.limits));
}

TEST_CASE("braking check against a scalar simulation") {
  const RobotModel robot = reference_robot();
  const JointLimits& l = robot.limits;
  JointState s;
  s.q = robot.home;
  s.q(0) = l.q_max(0) - 0.3;
  s.qd(0) = l.qd_max(0);

  // Scalar re-statement of the clamp order for joint 1 only.
  double q = s.q(0), v = s.qd(0);
  const double brake = -l.qdd_min(0);
  double previous_v = v;
  for (int k = 0; k < 400; ++k) {
    JointVector target = s.q;
    target(0) = l.q_max(0) + 1.0;  // keeps demanding motion past the limit
    s = limit_joints(target, s, l, kDt).joints;

    double vn = (target(0) - q) / kDt;
    vn = std::clamp(vn, v + l.qdd_min(0) * kDt, v + l.qdd_max(0) * kDt);
    vn = std::clamp(vn, l.qd_min(0), l.qd_max(0));
    const double ad = brake * kDt;
    const double vb = std::sqrt(ad * ad + 2.0 * brake * std::max(l.q_max(0) - q, 0.0)) - ad;
    if (vn > vb) vn = vb;
    double qn = std::min(q + vn * kDt, l.q_max(0));
    vn = (qn - q) / kDt;
    q = qn;
    v = vn;

    CHECK(s.q(0) == doctest::Approx(q).epsilon(1e-12));
    CHECK(s.q(0) <= l.q_max(0));
    if (k > 0) CHECK(s.qd(0) <= previous_v + 1e-12);
    previous_v = s.qd(0);
  }
  CHECK(s.q(0) <= l.q_max(0));
  CHECK(std::abs(s.qd(0)) < 1e-3);
}

TEST_CASE("zero action at rest is static equilibrium") {
  const Platform platform(reference_robot());
  const PlatformState rest = platform.reset();
  CHECK(rest.v_w == Vec3::Zero());
  CHECK(rest.a_w == Vec3::Zero());
  CHECK(rest.joints.qd == JointVector::Zero());
  CHECK(rest.joints.qdd == JointVector::Zero());
  CHECK(rest.r0 == rest.pose.position);

  PlatformState s = rest;
  for (int k = 0; k < 100; ++k) {
    s = platform.step(s, Action{});
    CHECK(s.pose.position == rest.pose.position);
    CHECK(s.joints.q == rest.joints.q);
  }
  CHECK(s.t == doctest::Approx(100 * kDt));
  CHECK((s.f_c - Vec3(0.0, 0.0, kGravity)).norm() < 1e-12);
  const CueSample cue = perceived_cue(s);
  CHECK(cue.specific_force.norm() < 1e-12);
  CHECK(cue.angular_velocity.norm() < 1e-12);
}

TEST_CASE("reset rejects a home outside the limits") {
  const Platform platform(reference_robot());
  JointVector home = platform.robot().home;
  home(1) = 5.0;
  CHECK_THROWS_AS(platform.reset(home), InvalidHome);
}

TEST_CASE("constant jerk deep inside the workspace follows the integration chain") {
  const Platform platform(reference_robot());
  PlatformState s = platform.reset();
  Action a;
  a.jerk = Vec3(1.0, -0.5, 0.25);
  const int n = 50;
  for (int k = 0; k < n; ++k) {
    s = platform.step(s, a);
    REQUIRE_FALSE(s.flags.limited);
    REQUIRE_FALSE(s.flags.ik_failed);
  }
  // Level cockpit: cockpit and world frames coincide, a = j t.
  const Vec3 expected = a.jerk * (n * kDt);
  CHECK((s.a_c - expected).norm() < 1e-6 * expected.norm());
  const double travel = kDt * kDt * kDt * n * (n + 1) * (n + 2) / 6.0;
  CHECK((s.pose.position - s.r0 - a.jerk * travel).norm() < 1e-6);
}

TEST_CASE("adversarial bang-bang actions never violate a joint limit") {
  const Platform platform(reference_robot());
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> hold(1, 80), sign(0, 1);
  PlatformState s = platform.reset();
  Action a;
  int remaining = 0;
  int limited = 0;
  for (int k = 0; k < 10000; ++k) {
    if (remaining-- <= 0) {
      remaining = hold(rng);
      for (int i = 0; i < 3; ++i) {
        a.jerk(i) = sign(rng) ? 50.0 : -50.0;
        a.angular_acceleration(i) = sign(rng) ? 5.0 : -5.0;
      }
    }
    s = platform.step(s, a);
    limited += s.flags.limited ? 1 : 0;
    check_invariants(platform, s);
  }
  CHECK(limited > 0);
}

TEST_CASE("bang-bang joint targets keep every joint inside its position limits") {
  const Platform platform(reference_robot());
  const JointLimits& l = platform.robot().limits;
  JointState s;
  s.q = platform.robot().home;
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> hold(5, 200), sign(0, 1);
  JointVector target = s.q;
  int remaining = 0;
  for (int k = 0; k < 20000; ++k) {
    if (remaining-- <= 0) {
      remaining = hold(rng);
      for (int i = 0; i < 6; ++i) target(i) = sign(rng) ? l.q_max(i) + 10.0 : l.q_min(i) - 10.0;
    }
    s = limit_joints(target, s, l, kDt).joints;
    REQUIRE(s.within(l));
  }
}

TEST_CASE("step is deterministic") {
  const Platform platform(reference_robot());
  Action a;
  a.jerk = Vec3(3.0, 1.0, -2.0);
  a.angular_acceleration = Vec3(0.5, -0.2, 0.1);
  PlatformState s = platform.reset();
  for (int k = 0; k < 20; ++k) s = platform.step(s, a);
  CHECK(bit_equal(platform.step(s, a), platform.step(s, a)));
}

TEST_CASE("state CSV row matches its header") {
  const Platform platform(reference_robot());
  const std::string header = state_csv_header();
  const std::string row = state_csv_row(platform.reset());
  CHECK(std::count(header.begin(), header.end(), ',') == std::count(row.begin(), row.end(), ','));
}
