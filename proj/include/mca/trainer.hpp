#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mca/platform.hpp"
#include "mca/policy.hpp"
#include "mca/trajectory.hpp"

namespace mca {

/// Per-unit penalty weights: force error (per m/s^2), angular-rate error (per rad/s), displacement (per m).
struct RewardWeights {
  double force = 1.0;
  double angular = 5.73;
  double position = 1.5;

  void validate() const;
};

/// Negated weighted L1 distance of the perceived cue to the reference plus the displacement from r0.
double compute_reward(const PlatformState& state, const ReferenceSample& reference, const RewardWeights& w);

struct PpoConfig {
  int n_steps = 1 << 13;  ///< transitions per rollout, summed over environments
  int batch_size = 1 << 8;
  double learning_rate = 0.000528;
  double gamma = 0.996273;
  int n_epochs = 5;
  double clip_range = 0.2;
  double gae_lambda = 0.95;
  double ent_coef = 0.0;
  double vf_coef = 0.5;
  double max_grad_norm = 0.5;  ///< applied to each network separately
  double adam_eps = 1e-5;
  bool normalize_advantage = true;
  long long total_steps = 2'000'000;
  int n_envs = 8;
  std::vector<int> hidden{128, 128};
  double log_std_init = -1.0;
  double reward_scale = 0.005;  ///< rewards are multiplied by this for learning only
  int eval_interval = 10;      ///< iterations between test-split evaluations
  ActionBounds action_bounds{20.0, 2.0};
  /// Applied to the reference the reward compares against; the observation sees the same scale.
  PreprocessSpec reference_preprocess = PreprocessSpec::scaled(0.5);
  int threads = 1;

  static PpoConfig desk();
  static PpoConfig paper();
  void validate() const;
  int steps_per_env() const { return n_steps / n_envs; }
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/**
 * Generalized advantage estimation over one environment's transitions.
 *
 * dones[t] marks the last transition of an episode (empty means none). The value
 * after the final transition is `bootstrap_value` unless that transition is done.
 */
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap_value, double gamma, double lambda);

struct RolloutBatch {
  MatX observations;  ///< kObservationSize x N
  MatX actions;       ///< raw Gaussian samples, kActionSize x N
  VecX log_probs;
  VecX rewards;       ///< scaled as used for learning
  VecX values;
  VecX advantages;
  VecX returns;
  std::vector<std::uint8_t> dones;
  double mean_reward = 0.0;  ///< unscaled per-step reward

  std::size_t size() const { return static_cast<std::size_t>(log_probs.size()); }
};

/// One environment: one reference trace per episode, reset at trace end.
class CueingEnv {
 public:
  CueingEnv(const Platform& platform, const std::vector<ReferenceTrace>& traces, const NormalizationSpec& spec,
            const RewardWeights& weights, std::uint64_t seed);
  /// `targets` parallels `traces` and holds the reference the reward compares against.
  CueingEnv(const Platform& platform, const std::vector<ReferenceTrace>& traces,
            const std::vector<ReferenceTrace>& targets, const NormalizationSpec& spec, const RewardWeights& weights,
            std::uint64_t seed);

  VecX observation() const;

  struct Step {
    double reward = 0.0;
    bool done = false;
    VecX terminal_observation;  ///< set when done
  };
  /// Applies an actor output in [-1, 1], scaled to physical units by the normalization spec.
  Step step(const VecX& normalized_action);

  std::mt19937_64& rng() { return rng_; }
  const PlatformState& state() const { return state_; }

 private:
  void begin_episode();

  const Platform* platform_;
  const std::vector<ReferenceTrace>* traces_;
  const std::vector<ReferenceTrace>* targets_;
  NormalizationSpec spec_;
  RewardWeights weights_;
  std::mt19937_64 rng_;
  std::size_t trace_ = 0;
  std::size_t index_ = 0;
  PlatformState state_;
};

RolloutBatch collect_rollout(std::vector<CueingEnv>& envs, const MlpNetwork& actor, const MlpNetwork& critic,
                             int steps_per_env, const PpoConfig& cfg);

struct Minibatch {
  MatX observations;
  MatX actions;
  VecX old_log_probs;
  VecX advantages;
  VecX returns;
};

struct LossGradient {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  std::vector<double> actor_grad;   ///< ordered as MlpNetwork::parameters()
  std::vector<double> critic_grad;
};

/// Clipped surrogate + value regression - entropy bonus, with its analytic gradient.
/// Advantages are used as given.
LossGradient ppo_loss_and_gradient(const MlpNetwork& actor, const MlpNetwork& critic, const Minibatch& batch,
                                   const PpoConfig& cfg);

class Adam {
 public:
  Adam(std::size_t n, double lr, double eps) : m_(n, 0.0), v_(n, 0.0), lr_(lr), eps_(eps) {}
  void step(std::vector<double>& params, const std::vector<double>& grad);

 private:
  std::vector<double> m_, v_;
  double lr_, eps_;
  double beta1_ = 0.9, beta2_ = 0.999;
  long long t_ = 0;
};

struct PpoDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  int gradient_steps = 0;
  bool aborted = false;  ///< non-finite loss; weights restored
};

class PpoLearner {
 public:
  PpoLearner(MlpNetwork actor, MlpNetwork critic, const PpoConfig& cfg);

  PpoDiagnostics update(const RolloutBatch& batch, std::mt19937_64& rng);

  const MlpNetwork& actor() const { return actor_; }
  const MlpNetwork& critic() const { return critic_; }

 private:
  MlpNetwork actor_, critic_;
  PpoConfig cfg_;
  Adam actor_opt_, critic_opt_;
};

/// Mean objective over the traces when driving the platform with the actor mean.
double evaluate_policy(const MlpNetwork& actor, const NormalizationSpec& spec, const std::vector<ReferenceTrace>& traces,
                       const Platform& platform);

struct TrainLogRow {
  int iteration = 0;
  long long steps = 0;
  double mean_reward = 0.0;
  double test_objective = 0.0;  ///< NaN when not evaluated this iteration
  double wall_time = 0.0;       ///< s since training start
};

struct TrainResult {
  MlpNetwork actor, critic;            ///< final
  MlpNetwork best_actor, best_critic;  ///< best by test objective, untrained included
  NormalizationSpec normalization;
  double initial_test_objective = 0.0;
  double best_test_objective = 0.0;
  std::vector<TrainLogRow> log;
};

struct TrainOptions {
  std::function<void(const TrainLogRow&)> on_iteration;
};

TrainResult train(const PpoConfig& cfg, const std::vector<ReferenceTrace>& train_traces,
                  const std::vector<ReferenceTrace>& test_traces, const Platform& platform,
                  const RewardWeights& weights, std::uint64_t seed, const TrainOptions& options = {});

std::string train_log_header();
std::string train_log_row(const TrainLogRow& row);

}  // namespace mca
