#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mca/platform.hpp"
#include "mca/robot.hpp"
#include "mca/trajectory.hpp"

namespace mca {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Version of the observation composition below; stored in every weight file.
inline constexpr std::uint32_t kObservationLayoutVersion = 1;

/// f_ref, omega_ref, f^C, omega^C, r^W - r0, v^W, euler^W, q, qd.
inline constexpr int kObservationSize = 33;
inline constexpr int kActionSize = 6;
inline constexpr double kObservationClip = 5.0;

/**
 * @brief Fixed affine observation normalization and action scaling.
 *
 * Observation entry i becomes clip((x_i - offset_i) / scale_i, +-5). Actor outputs in
 * [-1, 1] map to physical jerk (first three) and angular acceleration (last three).
 */
struct NormalizationSpec {
  std::uint32_t layout_version = kObservationLayoutVersion;
  VecX obs_offset = VecX::Zero(kObservationSize);
  VecX obs_scale = VecX::Ones(kObservationSize);
  VecX action_scale = VecX::Ones(kActionSize);

  /// Throws ConfigError on non-positive scales or wrong sizes.
  void validate() const;
  bool operator==(const NormalizationSpec& other) const;
};

/// Physical action bounds: |jerk| <= jerk_bound (m/s^3), |angular acceleration| <= angular_bound (rad/s^2).
struct ActionBounds {
  double jerk = 50.0;
  double angular = 5.0;
};

NormalizationSpec default_normalization(const RobotModel& robot, const ActionBounds& bounds = {});

/// Throws LayoutMismatch when the spec was built for another layout.
VecX build_observation(const PlatformState& state, const ReferenceSample& reference, const NormalizationSpec& spec);

enum class Activation : std::uint8_t { Identity = 0, Tanh = 1 };

struct DenseLayer {
  MatX weight;  ///< out x in
  VecX bias;
};

/**
 * @brief Fully connected network.
 *
 * Hidden layers use `hidden`, the last layer `output`. Actors carry a per-dimension
 * log standard deviation; critics leave it empty.
 */
class MlpNetwork {
 public:
  MlpNetwork() = default;
  MlpNetwork(const std::vector<int>& sizes, Activation hidden, Activation output);

  std::vector<DenseLayer> layers;
  Activation hidden = Activation::Tanh;
  Activation output = Activation::Identity;
  VecX log_std;

  int input_size() const;
  int output_size() const;
  std::vector<int> sizes() const;

  /// Throws ShapeMismatch.
  VecX forward(const VecX& x) const;
  /// Column-wise batch forward.
  MatX forward_batch(const MatX& x) const;

  std::size_t parameter_count() const;
  /// Layer weights (row-major), biases, then log_std.
  std::vector<double> parameters() const;
  void set_parameters(const std::vector<double>& p);

  bool operator==(const MlpNetwork& other) const;
};

/// Actor: tanh hidden layers, tanh output, log_std initialized to `log_std`.
MlpNetwork make_actor(const std::vector<int>& hidden, double log_std = 0.0);
/// Critic: tanh hidden layers, identity scalar output.
MlpNetwork make_critic(const std::vector<int>& hidden);

/// Orthogonal initialization per layer; the last layer uses `output_gain`, biases zero.
void orthogonal_init(MlpNetwork& net, double hidden_gain, double output_gain, std::mt19937_64& rng);

struct SampledAction {
  VecX raw;              ///< Gaussian sample before clipping
  VecX clipped;          ///< raw clipped to [-1, 1]
  Action action;         ///< physical units
  double log_prob = 0.0; ///< Gaussian density of raw; +inf in deterministic mode
};

/// Physical action of a normalized vector in [-1, 1].
Action scale_action(const VecX& normalized, const NormalizationSpec& spec);

/// Draws raw = mean + exp(log_std) * N(0, 1) per dimension; log_std = -inf yields the mean exactly.
SampledAction sample_action(const VecX& mean, const VecX& log_std, const NormalizationSpec& spec,
                            std::mt19937_64& rng);

double gaussian_log_prob(const VecX& x, const VecX& mean, const VecX& log_std);

struct WeightFile {
  MlpNetwork network;
  NormalizationSpec normalization;
};

/// Byte layout documented in docs/weight_format.md. Bit-exact round trip.
void save_weights(const MlpNetwork& net, const NormalizationSpec& spec, const std::filesystem::path& path);
/// Throws IoError, CorruptFile or VersionMismatch.
WeightFile load_weights(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_weights(const MlpNetwork& net, const NormalizationSpec& spec);
WeightFile deserialize_weights(const std::vector<std::uint8_t>& bytes);

}  // namespace mca
