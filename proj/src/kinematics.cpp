#include "mca/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mca {

namespace {

struct ChainFrames {
  // Joint axes z_{i-1} and origins o_{i-1} for i = 1..6, plus the end pose.
  std::array<Vec3, 6> axes;
  std::array<Vec3, 6> origins;
  Mat3 orientation;
  Vec3 position;
};

ChainFrames chain_frames(const DhTable& dh, const JointVector& q) {
  ChainFrames f;
  Mat4 t = Mat4::Identity();
  for (int i = 0; i < 6; ++i) {
    f.axes[i] = t.block<3, 1>(0, 2);
    f.origins[i] = t.block<3, 1>(0, 3);
    t = t * dh_transform(dh[i], q(i));
  }
  f.orientation = t.block<3, 3>(0, 0);
  f.position = t.block<3, 1>(0, 3);
  return f;
}

Mat6 jacobian_from_frames(const ChainFrames& f) {
  Mat6 j;
  for (int i = 0; i < 6; ++i) {
    j.block<3, 1>(0, i) = f.axes[i].cross(f.position - f.origins[i]);
    j.block<3, 1>(3, i) = f.axes[i];
  }
  return j;
}

Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

}  // namespace

Mat4 Pose::homogeneous() const {
  Mat4 h = Mat4::Identity();
  h.block<3, 3>(0, 0) = rotation;
  h.block<3, 1>(0, 3) = position;
  return h;
}

Mat4 dh_transform(const DhRow& row, double q) {
  const double theta = row.theta_offset + q;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Mat4 g;
  g << ct, -st * ca, st * sa, row.a * ct,
       st, ct * ca, -ct * sa, row.a * st,
       0.0, sa, ca, row.d,
       0.0, 0.0, 0.0, 1.0;
  return g;
}

Pose forward_kinematics(const DhTable& dh, const JointVector& q) {
  Mat4 t = Mat4::Identity();
  for (int i = 0; i < 6; ++i) t = t * dh_transform(dh[i], q(i));
  return Pose::from_orientation(t.block<3, 3>(0, 0), t.block<3, 1>(0, 3));
}

Mat6 geometric_jacobian(const DhTable& dh, const JointVector& q) {
  return jacobian_from_frames(chain_frames(dh, q));
}

double pose_error(const Pose& a, const Pose& b) {
  const Vec3 dp = a.position - b.position;
  const Vec3 dr = log_so3(a.orientation() * b.orientation().transpose());
  return dp.norm() + dr.norm();
}

IkResult inverse_kinematics(const DhTable& dh, const Pose& target, const JointVector& q_prev,
                            const IkOptions& options) {
  const Mat3 target_orientation = target.orientation();
  IkResult best;
  best.q = q_prev;
  best.error = std::numeric_limits<double>::infinity();

  JointVector q = q_prev;
  for (int it = 0;; ++it) {
    const ChainFrames frames = chain_frames(dh, q);
    Vec6 e;
    e.head<3>() = target.position - frames.position;
    e.tail<3>() = log_so3(target_orientation * frames.orientation.transpose());
    const double err = e.head<3>().norm() + e.tail<3>().norm();
    if (err < best.error) {
      best.q = q;
      best.error = err;
      best.iterations = it;
    }
    if (err < options.tolerance) {
      best.status = IkStatus::Converged;
      return best;
    }
    if (it >= options.max_iterations || !std::isfinite(err)) break;

    const Mat6 j = jacobian_from_frames(frames);
    const double manipulability = std::abs(j.determinant());
    double lambda2 = options.damping * options.damping;
    if (manipulability < options.manipulability_threshold) {
      const double s = 1.0 - manipulability / options.manipulability_threshold;
      lambda2 += options.max_damping * options.max_damping * s * s;
    }
    const Mat6 jjt = j * j.transpose() + lambda2 * Mat6::Identity();
    Vec6 dq = j.transpose() * jjt.llt().solve(e);
    const double step = dq.norm();
    if (step > options.max_step) dq *= options.max_step / step;
    q += dq;
  }
  best.status = IkStatus::NoConvergence;
  return best;
}

EulerAngles rotation_to_euler(const Mat3& r) {
  EulerAngles e;
  const double s = std::clamp(r(0, 2), -1.0, 1.0);
  e.pitch = std::asin(s);
  // |pitch| within 1e-6 of pi/2
  if (std::abs(s) >= std::cos(1e-6)) {
    e.gimbal_lock = true;
    e.roll = 0.0;
    e.yaw = std::atan2(r(1, 0), r(1, 1));
    return e;
  }
  e.roll = std::atan2(-r(1, 2), r(2, 2));
  e.yaw = std::atan2(-r(0, 1), r(0, 0));
  return e;
}

Mat3 euler_to_rotation(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(roll, Vec3::UnitX()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(yaw, Vec3::UnitZ()))
      .toRotationMatrix();
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 exp_so3(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 k = skew(w);
  double a, b;
  if (theta2 < 1e-12) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 log_so3(const Mat3& r) {
  const Vec3 v = 0.5 * vee(r - r.transpose());  // sin(theta) * axis
  const double c = 0.5 * (r.trace() - 1.0);     // cos(theta)
  const double s = v.norm();
  const double theta = std::atan2(s, c);
  if (theta < 1e-6) return (1.0 + theta * theta / 6.0) * v;
  if (c > -0.9) return (theta / s) * v;

  // Near pi the antisymmetric part vanishes; recover the axis from (R + R^T)/2 - cI = (1-c) a a^T.
  const Mat3 aat = (0.5 * (r + r.transpose()) - c * Mat3::Identity()) / (1.0 - c);
  int k = 0;
  aat.diagonal().maxCoeff(&k);
  Vec3 axis = aat.col(k) / std::sqrt(std::max(aat(k, k), 1e-300));
  axis.normalize();
  if (axis.dot(v) < 0.0) axis = -axis;
  return theta * axis;
}

Mat3 orthonormalize(const Mat3& m) {
  // One Newton step towards the polar factor; enough for matrices already within ~1e-8 of SO(3).
  Mat3 r = 1.5 * m - 0.5 * m * m.transpose() * m;
  if ((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-12) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
      Mat3 u = svd.matrixU();
      u.col(2) = -u.col(2);
      r = u * svd.matrixV().transpose();
    }
  }
  return r;
}

}  // namespace mca
