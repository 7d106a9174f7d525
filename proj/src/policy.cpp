#include "mca/policy.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mca/errors.hpp"

namespace mca {

namespace {

void apply(Activation a, MatX& x) {
  if (a == Activation::Tanh) x = x.array().tanh();
}

void apply(Activation a, VecX& x) {
  if (a == Activation::Tanh) x = x.array().tanh();
}

}  // namespace

void NormalizationSpec::validate() const {
  if (obs_offset.size() != kObservationSize || obs_scale.size() != kObservationSize ||
      action_scale.size() != kActionSize)
    throw ConfigError("normalization spec: wrong vector sizes");
  if (!(obs_scale.array() > 0.0).all() || !(action_scale.array() > 0.0).all())
    throw ConfigError("normalization spec: scales must be positive");
}

bool NormalizationSpec::operator==(const NormalizationSpec& o) const {
  return layout_version == o.layout_version && obs_offset == o.obs_offset && obs_scale == o.obs_scale &&
         action_scale == o.action_scale;
}

NormalizationSpec default_normalization(const RobotModel& robot, const ActionBounds& bounds) {
  NormalizationSpec s;
  const auto& l = robot.limits;
  s.obs_scale.segment<3>(0).setConstant(5.0);   // f_ref
  s.obs_scale.segment<3>(3).setConstant(0.5);   // omega_ref
  s.obs_scale.segment<3>(6).setConstant(5.0);   // f^C
  s.obs_offset(8) = kGravity;
  s.obs_scale.segment<3>(9).setConstant(0.5);   // omega^C
  s.obs_scale.segment<3>(12).setConstant(0.5);  // r - r0
  s.obs_scale.segment<3>(15).setConstant(1.0);  // v
  s.obs_scale.segment<3>(18).setConstant(0.3);  // euler
  s.obs_offset.segment<6>(21) = robot.home;
  s.obs_scale.segment<6>(21) = 0.5 * (l.q_max - l.q_min);
  s.obs_scale.segment<6>(27) = l.qd_max.cwiseMax(-l.qd_min);
  s.action_scale.head<3>().setConstant(bounds.jerk);
  s.action_scale.tail<3>().setConstant(bounds.angular);
  s.validate();
  return s;
}

VecX build_observation(const PlatformState& st, const ReferenceSample& ref, const NormalizationSpec& spec) {
  if (spec.layout_version != kObservationLayoutVersion || spec.obs_offset.size() != kObservationSize ||
      spec.obs_scale.size() != kObservationSize)
    throw LayoutMismatch("normalization spec does not match observation layout " +
                         std::to_string(kObservationLayoutVersion));
  VecX x(kObservationSize);
  x << ref.f_ref, ref.omega_ref, st.f_c, st.omega_c, st.pose.position - st.r0, st.v_w, st.euler_w, st.joints.q,
      st.joints.qd;
  return ((x - spec.obs_offset).array() / spec.obs_scale.array()).cwiseMax(-kObservationClip).cwiseMin(kObservationClip);
}

MlpNetwork::MlpNetwork(const std::vector<int>& sizes, Activation hidden_act, Activation output_act)
    : hidden(hidden_act), output(output_act) {
  if (sizes.size() < 2) throw ShapeMismatch("network needs at least an input and an output size");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    if (sizes[i] <= 0 || sizes[i + 1] <= 0) throw ShapeMismatch("layer sizes must be positive");
    layers.push_back({MatX::Zero(sizes[i + 1], sizes[i]), VecX::Zero(sizes[i + 1])});
  }
}

int MlpNetwork::input_size() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
int MlpNetwork::output_size() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }

std::vector<int> MlpNetwork::sizes() const {
  std::vector<int> s;
  if (layers.empty()) return s;
  s.push_back(input_size());
  for (const auto& l : layers) s.push_back(static_cast<int>(l.weight.rows()));
  return s;
}

VecX MlpNetwork::forward(const VecX& x) const {
  if (layers.empty() || x.size() != input_size())
    throw ShapeMismatch("input of size " + std::to_string(x.size()) + " for network input " +
                        std::to_string(input_size()));
  VecX h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    VecX z = layers[i].bias;
    z.noalias() += layers[i].weight * h;
    apply(i + 1 == layers.size() ? output : hidden, z);
    h.swap(z);
  }
  return h;
}

MatX MlpNetwork::forward_batch(const MatX& x) const {
  if (layers.empty() || x.rows() != input_size()) throw ShapeMismatch("batch input size mismatch");
  MatX h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    MatX z = layers[i].weight * h;
    z.colwise() += layers[i].bias;
    apply(i + 1 == layers.size() ? output : hidden, z);
    h.swap(z);
  }
  return h;
}

std::size_t MlpNetwork::parameter_count() const {
  std::size_t n = static_cast<std::size_t>(log_std.size());
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<double> MlpNetwork::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) p.push_back(l.weight(r, c));
    p.insert(p.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  p.insert(p.end(), log_std.data(), log_std.data() + log_std.size());
  return p;
}

void MlpNetwork::set_parameters(const std::vector<double>& p) {
  if (p.size() != parameter_count()) throw ShapeMismatch("parameter vector size mismatch");
  std::size_t k = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = p[k++];
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = p[k++];
  }
  for (Eigen::Index i = 0; i < log_std.size(); ++i) log_std(i) = p[k++];
}

bool MlpNetwork::operator==(const MlpNetwork& o) const {
  if (hidden != o.hidden || output != o.output || layers.size() != o.layers.size() || log_std.size() != o.log_std.size())
    return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = o.layers[i];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() || a.weight != b.weight ||
        a.bias != b.bias)
      return false;
  }
  return log_std == o.log_std;
}

MlpNetwork make_actor(const std::vector<int>& hidden, double log_std) {
  std::vector<int> sizes{kObservationSize};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(kActionSize);
  MlpNetwork net(sizes, Activation::Tanh, Activation::Tanh);
  net.log_std = VecX::Constant(kActionSize, log_std);
  return net;
}

MlpNetwork make_critic(const std::vector<int>& hidden) {
  std::vector<int> sizes{kObservationSize};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return MlpNetwork(sizes, Activation::Tanh, Activation::Identity);
}

void orthogonal_init(MlpNetwork& net, double hidden_gain, double output_gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto& w = net.layers[i].weight;
    const Eigen::Index rows = w.rows(), cols = w.cols();
    const Eigen::Index big = std::max(rows, cols), small = std::min(rows, cols);
    MatX g(big, small);
    for (Eigen::Index c = 0; c < small; ++c)
      for (Eigen::Index r = 0; r < big; ++r) g(r, c) = normal(rng);
    Eigen::HouseholderQR<MatX> qr(g);
    MatX q = qr.householderQ() * MatX::Identity(big, small);
    const MatX r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < small; ++c) {
      if (r(c, c) < 0.0) q.col(c) = -q.col(c);
    }
    const double gain = i + 1 == net.layers.size() ? output_gain : hidden_gain;
    w = gain * (rows >= cols ? q : MatX(q.transpose()));
    net.layers[i].bias.setZero();
  }
}

Action scale_action(const VecX& normalized, const NormalizationSpec& spec) {
  Action a;
  a.jerk = normalized.head<3>().cwiseProduct(spec.action_scale.head<3>());
  a.angular_acceleration = normalized.tail<3>().cwiseProduct(spec.action_scale.tail<3>());
  return a;
}

double gaussian_log_prob(const VecX& x, const VecX& mean, const VecX& log_std) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double z = (x(i) - mean(i)) * std::exp(-log_std(i));
    lp += -0.5 * z * z - log_std(i) - half_log_2pi;
  }
  return lp;
}

SampledAction sample_action(const VecX& mean, const VecX& log_std, const NormalizationSpec& spec,
                            std::mt19937_64& rng) {
  if (mean.size() != kActionSize || log_std.size() != kActionSize) throw ShapeMismatch("action dimension mismatch");
  std::normal_distribution<double> normal(0.0, 1.0);
  SampledAction s;
  s.raw = mean;
  bool deterministic = false;
  for (int i = 0; i < kActionSize; ++i) {
    const double sigma = std::exp(log_std(i));
    if (sigma == 0.0) {
      deterministic = true;
      continue;
    }
    s.raw(i) += sigma * normal(rng);
  }
  s.clipped = s.raw.cwiseMax(-1.0).cwiseMin(1.0);
  s.action = scale_action(s.clipped, spec);
  s.log_prob = deterministic ? std::numeric_limits<double>::infinity() : gaussian_log_prob(s.raw, mean, log_std);
  return s;
}

}  // namespace mca
