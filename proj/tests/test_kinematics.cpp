#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/SVD>

#include "mca/errors.hpp"
#include "mca/kinematics.hpp"
#include "mca/robot.hpp"
#include "test_support.hpp"

using namespace mca;
using std::numbers::pi;

namespace {

// Classic DH matrix written out element by element.
Mat4 dh_oracle(double a, double alpha, double d, double theta) {
  const double ct = std::cos(theta), st = std::sin(theta), ca = std::cos(alpha), sa = std::sin(alpha);
  Mat4 m;
  m << ct, -st * ca, st * sa, a * ct,
       st, ct * ca, -ct * sa, a * st,
       0, sa, ca, d,
       0, 0, 0, 1;
  return m;
}

Mat4 chain_oracle(const DhTable& dh, const JointVector& q) {
  Mat4 m = Mat4::Identity();
  for (int i = 0; i < 6; ++i) m = m * dh_oracle(dh[i].a, dh[i].alpha, dh[i].d, dh[i].theta_offset + q(i));
  return m;
}

Vec3 vee(const Mat3& s) { return Vec3(s(2, 1) - s(1, 2), s(0, 2) - s(2, 0), s(1, 0) - s(0, 1)) / 2.0; }

}  // namespace

TEST_CASE("dh_transform of a zero row is exactly the identity") {
  CHECK(dh_transform(DhRow{}, 0.0) == Mat4::Identity());
}

TEST_CASE("dh_transform with a quarter twist exchanges y and z") {
  const Mat4 g = dh_transform(DhRow{0.0, pi / 2, 0.0, 0.0}, 0.0);
  Mat4 expected;
  expected << 1, 0, 0, 0,
              0, 0, -1, 0,
              0, 1, 0, 0,
              0, 0, 0, 1;
  CHECK((g - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("dh_transform with link length and offset at a quarter turn") {
  const Mat4 g = dh_transform(DhRow{1.0, 0.0, 0.5, 0.0}, pi / 2);
  CHECK(g.block<3, 1>(0, 3).isApprox(Vec3(0.0, 1.0, 0.5), 1e-15));
  Mat3 rz;
  rz << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((g.block<3, 3>(0, 0) - rz).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("forward kinematics matches an independent chain product") {
  const RobotModel robot = reference_robot();
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const JointVector q = k == 0 ? JointVector::Zero() : test::random_joints(rng, robot);
    const Mat4 h = chain_oracle(robot.dh, q);
    const Pose p = forward_kinematics(robot.dh, q);
    CHECK((p.position - h.block<3, 1>(0, 3)).norm() < 1e-12);
    CHECK((p.orientation() - h.block<3, 3>(0, 0)).norm() < 1e-12);
    CHECK((p.homogeneous() - Pose::from_orientation(h.block<3, 3>(0, 0), h.block<3, 1>(0, 3)).homogeneous()).norm() <
          1e-12);
  }
}

TEST_CASE("forward kinematics rotations are orthonormal and periodic in the last joint") {
  const RobotModel robot = reference_robot();
  std::mt19937_64 rng(5);
  for (int k = 0; k < 500; ++k) {
    const JointVector q = test::random_joints(rng, robot);
    const Pose p = forward_kinematics(robot.dh, q);
    CHECK(test::orthonormality_residual(p.rotation) < 1e-9);
    CHECK(p.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    JointVector q2 = q;
    q2(5) += 2 * pi;
    CHECK(pose_error(p, forward_kinematics(robot.dh, q2)) < 1e-9);
  }
}

TEST_CASE("reference robot home holds the cockpit level with world-aligned axes") {
  const RobotModel robot = reference_robot();
  const Pose home = forward_kinematics(robot.dh, robot.home);
  CHECK((home.rotation - Mat3::Identity()).norm() < 1e-12);
  CHECK(home.position.norm() > 1.0);
  CHECK(home.position.norm() < 3.5);
}

TEST_CASE("geometric Jacobian agrees with central finite differences") {
  const RobotModel robot = reference_robot();
  std::mt19937_64 rng(11);
  const double h = 1e-6;
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const JointVector q = test::random_joints(rng, robot);
    const Mat6 j = geometric_jacobian(robot.dh, q);
    const Mat3 r0 = forward_kinematics(robot.dh, q).orientation();
    for (int c = 0; c < 6; ++c) {
      JointVector qp = q, qm = q;
      qp(c) += h;
      qm(c) -= h;
      const Pose pp = forward_kinematics(robot.dh, qp), pm = forward_kinematics(robot.dh, qm);
      Eigen::Matrix<double, 6, 1> fd;
      fd.head<3>() = (pp.position - pm.position) / (2 * h);
      fd.tail<3>() = vee((pp.orientation() - pm.orientation()) / (2 * h) * r0.transpose());
      for (int r = 0; r < 6; ++r) worst = std::max(worst, std::abs(j(r, c) - fd(r)) / std::max(std::abs(j(r, c)), 1e-3));
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("Jacobian loses rank with the wrist axes aligned") {
  const RobotModel robot = reference_robot();
  JointVector q = robot.home;
  q(4) = 0.0;
  const Eigen::JacobiSVD<Mat6> svd(geometric_jacobian(robot.dh, q));
  CHECK(svd.singularValues()(5) < 1e-9 * svd.singularValues()(0));
}

TEST_CASE("Jacobian is periodic in every joint") {
  const RobotModel robot = reference_robot();
  std::mt19937_64 rng(13);
  const JointVector q = test::random_joints(rng, robot);
  const Mat6 j = geometric_jacobian(robot.dh, q);
  for (int i = 0; i < 6; ++i) {
    JointVector q2 = q;
    q2(i) += 2 * pi;
    CHECK((geometric_jacobian(robot.dh, q2) - j).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("inverse kinematics at its own forward pose is a fixed point") {
  const RobotModel robot = reference_robot();
  const IkResult r = inverse_kinematics(robot.dh, forward_kinematics(robot.dh, robot.home), robot.home);
  CHECK(r.converged());
  CHECK(r.iterations == 0);
  CHECK(r.q == robot.home);
}

TEST_CASE("inverse kinematics recovers small perturbation targets") {
  const RobotModel robot = reference_robot();
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    const JointVector q = test::random_joints(rng, robot, 0.1);
    JointVector delta;
    for (int i = 0; i < 6; ++i) delta(i) = n(rng);
    delta *= 1e-3 / delta.norm();
    const Pose target = forward_kinematics(robot.dh, q + delta);
    const IkResult r = inverse_kinematics(robot.dh, target, q);
    CHECK(pose_error(forward_kinematics(robot.dh, r.q), target) < 1e-8);
    CHECK((r.q - q).norm() < 1e-2);
  }
}

TEST_CASE("inverse kinematics reports unreachable targets") {
  const RobotModel robot = reference_robot();
  Pose target = forward_kinematics(robot.dh, robot.home);
  target.position = Vec3(100.0, 0.0, 0.0);
  CHECK_FALSE(inverse_kinematics(robot.dh, target, robot.home).converged());
}

TEST_CASE("Euler decomposition") {
  const EulerAngles zero = rotation_to_euler(Mat3::Identity());
  CHECK(zero.roll == 0.0);
  CHECK(zero.pitch == 0.0);
  CHECK(zero.yaw == 0.0);

  const EulerAngles yaw = rotation_to_euler(Eigen::AngleAxisd(0.3, Vec3::UnitZ()).toRotationMatrix());
  CHECK(yaw.roll == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(yaw.pitch == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(yaw.yaw == doctest::Approx(0.3).epsilon(1e-15));

  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-3.0, 3.0), p(-1.5, 1.5);
  for (int k = 0; k < 1000; ++k) {
    const Mat3 r = Eigen::AngleAxisd(u(rng), Vec3::UnitX()).toRotationMatrix() *
                   Eigen::AngleAxisd(p(rng), Vec3::UnitY()).toRotationMatrix() *
                   Eigen::AngleAxisd(u(rng), Vec3::UnitZ()).toRotationMatrix();
    const EulerAngles e = rotation_to_euler(r);
    CHECK((euler_to_rotation(e.roll, e.pitch, e.yaw) - r).cwiseAbs().maxCoeff() < 1e-9);
  }

  const EulerAngles lock = rotation_to_euler(euler_to_rotation(0.4, pi / 2, 0.2));
  CHECK(lock.gimbal_lock);
  CHECK(lock.roll == 0.0);
}

TEST_CASE("exponential and logarithm maps are inverse") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    Vec3 w(n(rng), n(rng), n(rng));
    w *= std::min(3.0, w.norm()) / w.norm();
    const Mat3 r = exp_so3(w);
    CHECK(test::orthonormality_residual(r) < 1e-12);
    CHECK((log_so3(r) - w).norm() < 1e-9);
  }
}

TEST_CASE("shipped robot description matches the built-in reference robot") {
  const RobotModel file = load_robot(test::source_path("config/reference_robot.json"));
  const RobotModel ref = reference_robot();
  for (int i = 0; i < 6; ++i) {
    CHECK(file.dh[i].a == ref.dh[i].a);
    CHECK(file.dh[i].alpha == ref.dh[i].alpha);
    CHECK(file.dh[i].d == ref.dh[i].d);
    CHECK(file.dh[i].theta_offset == ref.dh[i].theta_offset);
  }
  CHECK(file.limits.q_min == ref.limits.q_min);
  CHECK(file.limits.qdd_max == ref.limits.qdd_max);
  CHECK(file.home == ref.home);
}

TEST_CASE("robot description round trip and validation") {
  const auto dir = test::scratch_dir("robot");
  RobotModel r = reference_robot();
  save_robot(r, dir / "r.json");
  const RobotModel back = load_robot(dir / "r.json");
  CHECK(back.home == r.home);
  CHECK(back.limits.qd_max == r.limits.qd_max);

  r.home(4) = 0.0;  // below position_min
  save_robot(r, dir / "bad.json");
  CHECK_THROWS_AS(load_robot(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_robot(dir / "missing.json"), IoError);
}
