#include "mca/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>

#include "mca/channels.hpp"
#include "mca/cueing.hpp"
#include "mca/errors.hpp"
#include "mca/metrics.hpp"
#include "mca/util.hpp"

namespace mca {

namespace {

// Post-activation outputs of every layer; acts[0] is the input.
std::vector<MatX> forward_cached(const MlpNetwork& net, const MatX& x) {
  std::vector<MatX> acts{x};
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    MatX z = net.layers[i].weight * acts.back();
    z.colwise() += net.layers[i].bias;
    if ((i + 1 == net.layers.size() ? net.output : net.hidden) == Activation::Tanh) z = z.array().tanh();
    acts.push_back(std::move(z));
  }
  return acts;
}

// Gradient of the loss w.r.t. every weight and bias given dL/d(output) in `grad_out`.
std::vector<double> backward(const MlpNetwork& net, const std::vector<MatX>& acts, MatX grad_out) {
  std::vector<MatX> dw(net.layers.size());
  std::vector<VecX> db(net.layers.size());
  for (std::size_t i = net.layers.size(); i-- > 0;) {
    if ((i + 1 == net.layers.size() ? net.output : net.hidden) == Activation::Tanh)
      grad_out.array() *= 1.0 - acts[i + 1].array().square();
    dw[i] = grad_out * acts[i].transpose();
    db[i] = grad_out.rowwise().sum();
    if (i > 0) grad_out = net.layers[i].weight.transpose() * grad_out;
  }
  std::vector<double> g;
  g.reserve(net.parameter_count());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    for (Eigen::Index r = 0; r < dw[i].rows(); ++r)
      for (Eigen::Index c = 0; c < dw[i].cols(); ++c) g.push_back(dw[i](r, c));
    g.insert(g.end(), db[i].data(), db[i].data() + db[i].size());
  }
  return g;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void clip_norm(std::vector<double>& g, double max_norm) {
  const double n = norm(g);
  if (n > max_norm) {
    const double s = max_norm / (n + 1e-6);
    for (double& x : g) x *= s;
  }
}

template <class F>
void parallel_for(int count, int threads, F&& f) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += threads) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

void RewardWeights::validate() const {
  if (!(force >= 0.0) || !(angular >= 0.0) || !(position >= 0.0))
    throw ConfigError("reward weights must be non-negative");
}

double compute_reward(const PlatformState& state, const ReferenceSample& ref, const RewardWeights& w) {
  const CueSample cue = perceived_cue(state);
  return -(w.force * (ref.f_ref - cue.specific_force).lpNorm<1>() +
           w.angular * (ref.omega_ref - cue.angular_velocity).lpNorm<1>() +
           w.position * (state.pose.position - state.r0).lpNorm<1>());
}

PpoConfig PpoConfig::desk() { return PpoConfig{}; }

PpoConfig PpoConfig::paper() {
  PpoConfig c;
  c.n_steps = 1 << 17;
  c.batch_size = 1 << 10;
  c.total_steps = 100'000'000;
  c.n_envs = 64;
  c.hidden = {1024, 1024};
  return c;
}

void PpoConfig::validate() const {
  if (n_steps <= 0 || batch_size <= 0 || n_steps % batch_size != 0)
    throw ConfigError("ppo: n_steps must be a positive multiple of batch_size");
  if (n_envs <= 0 || n_steps % n_envs != 0) throw ConfigError("ppo: n_steps must be divisible by n_envs");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo: gamma must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("ppo: gae_lambda must lie in [0, 1]");
  if (!(learning_rate > 0.0) || n_epochs < 0 || !(clip_range > 0.0) || !(reward_scale > 0.0))
    throw ConfigError("ppo: learning_rate, clip_range and reward_scale must be positive");
  if (!(action_bounds.jerk > 0.0) || !(action_bounds.angular > 0.0))
    throw ConfigError("ppo: action bounds must be positive");
  if (total_steps < 0 || eval_interval <= 0 || threads <= 0) throw ConfigError("ppo: invalid step or thread counts");
  if (hidden.empty()) throw ConfigError("ppo: at least one hidden layer");
  for (int i = 0; i < 6; ++i) {
    if (!(reference_preprocess.scale[i] > 0.0) || !(reference_preprocess.clip[i] > 0.0))
      throw ConfigError("ppo: reference scale and clip must be positive");
  }
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || (!dones.empty() && dones.size() != n))
    throw ConfigError("compute_gae: sequence lengths differ");
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next_value = bootstrap_value;
  double next_adv = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double live = (!dones.empty() && dones[t]) ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    next_adv = delta + gamma * lambda * live * next_adv;
    r.advantages[t] = next_adv;
    r.returns[t] = next_adv + values[t];
    next_value = values[t];
  }
  return r;
}

CueingEnv::CueingEnv(const Platform& platform, const std::vector<ReferenceTrace>& traces, const NormalizationSpec& spec,
                     const RewardWeights& weights, std::uint64_t seed)
    : CueingEnv(platform, traces, traces, spec, weights, seed) {}

CueingEnv::CueingEnv(const Platform& platform, const std::vector<ReferenceTrace>& traces,
                     const std::vector<ReferenceTrace>& targets, const NormalizationSpec& spec,
                     const RewardWeights& weights, std::uint64_t seed)
    : platform_(&platform), traces_(&traces), targets_(&targets), spec_(spec), weights_(weights), rng_(seed) {
  if (traces.empty()) throw EmptyInput("environment needs at least one trace");
  if (targets.size() != traces.size()) throw ShapeMismatch("environment targets do not match its traces");
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (traces[i].samples.empty()) throw EmptyInput("environment trace '" + traces[i].label + "' is empty");
    if (targets[i].size() != traces[i].size()) throw ShapeMismatch("environment target '" + targets[i].label + "' has the wrong length");
  }
  begin_episode();
}

void CueingEnv::begin_episode() {
  trace_ = std::uniform_int_distribution<std::size_t>(0, traces_->size() - 1)(rng_);
  index_ = 0;
  state_ = platform_->reset();
}

VecX CueingEnv::observation() const {
  return build_observation(state_, (*traces_)[trace_].samples[index_], spec_);
}

CueingEnv::Step CueingEnv::step(const VecX& normalized_action) {
  const auto& trace = (*traces_)[trace_];
  const ReferenceSample& ref = trace.samples[index_];
  state_ = platform_->step(state_, scale_action(normalized_action, spec_));
  Step s;
  s.reward = compute_reward(state_, (*targets_)[trace_].samples[index_], weights_);
  if (++index_ == trace.size()) {
    s.done = true;
    s.terminal_observation = build_observation(state_, ref, spec_);
    begin_episode();
  }
  return s;
}

RolloutBatch collect_rollout(std::vector<CueingEnv>& envs, const MlpNetwork& actor, const MlpNetwork& critic,
                             int steps_per_env, const PpoConfig& cfg) {
  const int n_envs = static_cast<int>(envs.size());
  steps_per_env = std::max(steps_per_env, 0);
  const Eigen::Index total = static_cast<Eigen::Index>(n_envs) * steps_per_env;
  RolloutBatch b;
  b.observations.resize(kObservationSize, total);
  b.actions.resize(kActionSize, total);
  b.log_probs.resize(total);
  b.rewards.resize(total);
  b.values.resize(total);
  b.advantages.resize(total);
  b.returns.resize(total);
  b.dones.assign(total, 0);
  if (total == 0) return b;

  NormalizationSpec unit;
  std::vector<double> raw_reward_sum(n_envs, 0.0);

  // Environments are independent and own their random streams, so the batch does not
  // depend on the thread count.
  parallel_for(n_envs, cfg.threads, [&](int e) {
    CueingEnv& env = envs[e];
    const Eigen::Index base = static_cast<Eigen::Index>(e) * steps_per_env;
    std::vector<double> rewards(steps_per_env), values(steps_per_env);
    std::vector<std::uint8_t> dones(steps_per_env, 0);
    for (int t = 0; t < steps_per_env; ++t) {
      const Eigen::Index col = base + t;
      const VecX obs = env.observation();
      const SampledAction a = sample_action(actor.forward(obs), actor.log_std, unit, env.rng());
      values[t] = critic.forward(obs)(0);
      const CueingEnv::Step s = env.step(a.clipped);
      raw_reward_sum[e] += s.reward;
      rewards[t] = cfg.reward_scale * s.reward;
      if (s.done) {
        // Trace end is a time limit, not a terminal state: bootstrap from the final state.
        rewards[t] += cfg.gamma * critic.forward(s.terminal_observation)(0);
        dones[t] = 1;
      }
      b.observations.col(col) = obs;
      b.actions.col(col) = a.raw;
      b.log_probs(col) = a.log_prob;
    }
    const double bootstrap = critic.forward(env.observation())(0);
    const GaeResult g = compute_gae(rewards, values, dones, bootstrap, cfg.gamma, cfg.gae_lambda);
    for (int t = 0; t < steps_per_env; ++t) {
      b.rewards(base + t) = rewards[t];
      b.values(base + t) = values[t];
      b.advantages(base + t) = g.advantages[t];
      b.returns(base + t) = g.returns[t];
      b.dones[base + t] = dones[t];
    }
  });
  b.mean_reward = std::accumulate(raw_reward_sum.begin(), raw_reward_sum.end(), 0.0) / static_cast<double>(total);
  return b;
}

LossGradient ppo_loss_and_gradient(const MlpNetwork& actor, const MlpNetwork& critic, const Minibatch& mb,
                                   const PpoConfig& cfg) {
  const Eigen::Index n = mb.old_log_probs.size();
  if (n == 0) throw EmptyInput("empty minibatch");
  const double inv_n = 1.0 / static_cast<double>(n);
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const int dims = static_cast<int>(actor.log_std.size());
  const VecX inv_var = (-2.0 * actor.log_std).array().exp();

  LossGradient out;
  const auto actor_acts = forward_cached(actor, mb.observations);
  const MatX& mean = actor_acts.back();
  const MatX diff = mb.actions - mean;

  MatX grad_mean(dims, n);
  VecX grad_log_std = VecX::Zero(dims);
  double surrogate = 0.0, kl = 0.0;
  int clipped = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double lp = 0.0;
    for (int i = 0; i < dims; ++i)
      lp += -0.5 * diff(i, j) * diff(i, j) * inv_var(i) - actor.log_std(i) - half_log_2pi;
    const double log_ratio = lp - mb.old_log_probs(j);
    const double ratio = std::exp(log_ratio);
    const double adv = mb.advantages(j);
    const double s1 = ratio * adv;
    const double s2 = std::clamp(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range) * adv;
    surrogate += std::min(s1, s2);
    kl += (ratio - 1.0) - log_ratio;
    if (std::abs(ratio - 1.0) > cfg.clip_range) ++clipped;

    // d(-mean(min(s1, s2)))/d(log_prob); zero when the clipped branch is active.
    const double g_lp = s1 <= s2 ? -inv_n * s1 : 0.0;
    for (int i = 0; i < dims; ++i) {
      const double z2 = diff(i, j) * diff(i, j) * inv_var(i);
      grad_mean(i, j) = g_lp * diff(i, j) * inv_var(i);
      grad_log_std(i) += g_lp * (z2 - 1.0);
    }
  }
  out.policy_loss = -surrogate * inv_n;
  out.approx_kl = kl * inv_n;
  out.clip_fraction = static_cast<double>(clipped) * inv_n;
  out.entropy = actor.log_std.sum() + dims * (0.5 + half_log_2pi);
  grad_log_std.array() -= cfg.ent_coef;

  const auto critic_acts = forward_cached(critic, mb.observations);
  const VecX v = critic_acts.back().row(0).transpose();
  const VecX err = v - mb.returns;
  out.value_loss = err.squaredNorm() * inv_n;
  const MatX grad_v = (cfg.vf_coef * 2.0 * inv_n * err).transpose();

  out.loss = out.policy_loss + cfg.vf_coef * out.value_loss - cfg.ent_coef * out.entropy;
  out.actor_grad = backward(actor, actor_acts, grad_mean);
  out.actor_grad.insert(out.actor_grad.end(), grad_log_std.data(), grad_log_std.data() + dims);
  out.critic_grad = backward(critic, critic_acts, grad_v);
  return out;
}

void Adam::step(std::vector<double>& p, const std::vector<double>& g) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g[i] * g[i];
    p[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

PpoLearner::PpoLearner(MlpNetwork actor, MlpNetwork critic, const PpoConfig& cfg)
    : actor_(std::move(actor)),
      critic_(std::move(critic)),
      cfg_(cfg),
      actor_opt_(actor_.parameter_count(), cfg.learning_rate, cfg.adam_eps),
      critic_opt_(critic_.parameter_count(), cfg.learning_rate, cfg.adam_eps) {}

PpoDiagnostics PpoLearner::update(const RolloutBatch& batch, std::mt19937_64& rng) {
  PpoDiagnostics d;
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  if (n == 0 || cfg_.n_epochs == 0) return d;
  const MlpNetwork actor_backup = actor_, critic_backup = critic_;
  const Adam actor_opt_backup = actor_opt_, critic_opt_backup = critic_opt_;
  const Eigen::Index bs = std::min<Eigen::Index>(cfg_.batch_size, n);

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  Minibatch mb;
  for (int epoch = 0; epoch < cfg_.n_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += bs) {
      const Eigen::Index m = std::min(bs, n - start);
      mb.observations.resize(kObservationSize, m);
      mb.actions.resize(kActionSize, m);
      mb.old_log_probs.resize(m);
      mb.advantages.resize(m);
      mb.returns.resize(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index src = order[start + k];
        mb.observations.col(k) = batch.observations.col(src);
        mb.actions.col(k) = batch.actions.col(src);
        mb.old_log_probs(k) = batch.log_probs(src);
        mb.advantages(k) = batch.advantages(src);
        mb.returns(k) = batch.returns(src);
      }
      if (cfg_.normalize_advantage && m > 1) {
        const double mu = mb.advantages.mean();
        const double sd = std::sqrt((mb.advantages.array() - mu).square().sum() / static_cast<double>(m - 1));
        mb.advantages = (mb.advantages.array() - mu) / (sd + 1e-8);
      }
      LossGradient lg = ppo_loss_and_gradient(actor_, critic_, mb, cfg_);
      if (!std::isfinite(lg.loss) || !finite(lg.actor_grad) || !finite(lg.critic_grad)) {
        actor_ = actor_backup;
        critic_ = critic_backup;
        actor_opt_ = actor_opt_backup;
        critic_opt_ = critic_opt_backup;
        d.aborted = true;
        return d;
      }
      clip_norm(lg.actor_grad, cfg_.max_grad_norm);
      clip_norm(lg.critic_grad, cfg_.max_grad_norm);
      std::vector<double> pa = actor_.parameters(), pc = critic_.parameters();
      actor_opt_.step(pa, lg.actor_grad);
      critic_opt_.step(pc, lg.critic_grad);
      actor_.set_parameters(pa);
      critic_.set_parameters(pc);

      ++d.gradient_steps;
      d.policy_loss += lg.policy_loss;
      d.value_loss += lg.value_loss;
      d.entropy += lg.entropy;
      d.approx_kl += lg.approx_kl;
      d.clip_fraction += lg.clip_fraction;
    }
  }
  const double k = 1.0 / d.gradient_steps;
  d.policy_loss *= k;
  d.value_loss *= k;
  d.entropy *= k;
  d.approx_kl *= k;
  d.clip_fraction *= k;
  return d;
}

double evaluate_policy(const MlpNetwork& actor, const NormalizationSpec& spec, const std::vector<ReferenceTrace>& traces,
                       const Platform& platform) {
  if (traces.empty()) throw EmptyInput("evaluate_policy: no traces");
  DrlCueing mca(actor, spec, platform);
  double total = 0.0;
  for (const auto& trace : traces) {
    const TraceRecord r = run_trace(mca, trace);
    total += objective(achieved_channels(r), reference_channels(trace));
  }
  return total / static_cast<double>(traces.size());
}

TrainResult train(const PpoConfig& cfg, const std::vector<ReferenceTrace>& train_traces,
                  const std::vector<ReferenceTrace>& test_traces, const Platform& platform,
                  const RewardWeights& weights, std::uint64_t seed, const TrainOptions& options) {
  cfg.validate();
  weights.validate();
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();

  std::mt19937_64 init_rng(derive_seed(seed, 1));
  MlpNetwork actor = make_actor(cfg.hidden, cfg.log_std_init);
  MlpNetwork critic = make_critic(cfg.hidden);
  orthogonal_init(actor, std::sqrt(2.0), 0.01, init_rng);
  orthogonal_init(critic, std::sqrt(2.0), 1.0, init_rng);

  TrainResult result;
  result.normalization = default_normalization(platform.robot(), cfg.action_bounds);
  // The policy sees the reference at the scale it is rewarded for reproducing.
  for (int i = 0; i < 6; ++i) result.normalization.obs_scale(i) /= cfg.reference_preprocess.scale[i];
  std::vector<ReferenceTrace> targets;
  targets.reserve(train_traces.size());
  for (const auto& t : train_traces) targets.push_back(preprocess(t, cfg.reference_preprocess));
  std::vector<CueingEnv> envs;
  for (int e = 0; e < cfg.n_envs; ++e)
    envs.emplace_back(platform, train_traces, targets, result.normalization, weights, derive_seed(seed, 2, e));

  result.initial_test_objective = evaluate_policy(actor, result.normalization, test_traces, platform);
  result.best_test_objective = result.initial_test_objective;
  result.best_actor = actor;
  result.best_critic = critic;

  PpoLearner learner(std::move(actor), std::move(critic), cfg);
  std::mt19937_64 update_rng(derive_seed(seed, 3));
  const long long iterations = (cfg.total_steps + cfg.n_steps - 1) / cfg.n_steps;
  long long steps = 0;
  for (long long it = 1; it <= iterations; ++it) {
    const RolloutBatch batch = collect_rollout(envs, learner.actor(), learner.critic(), cfg.steps_per_env(), cfg);
    learner.update(batch, update_rng);
    steps += cfg.n_steps;

    TrainLogRow row;
    row.iteration = static_cast<int>(it);
    row.steps = steps;
    row.mean_reward = batch.mean_reward;
    row.test_objective = std::numeric_limits<double>::quiet_NaN();
    if (it % cfg.eval_interval == 0 || it == iterations) {
      row.test_objective = evaluate_policy(learner.actor(), result.normalization, test_traces, platform);
      if (row.test_objective < result.best_test_objective) {
        result.best_test_objective = row.test_objective;
        result.best_actor = learner.actor();
        result.best_critic = learner.critic();
      }
    }
    row.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
    result.log.push_back(row);
    if (options.on_iteration) options.on_iteration(row);
  }
  result.actor = learner.actor();
  result.critic = learner.critic();
  return result;
}

std::string train_log_header() { return "iteration,steps,mean_reward,test_objective,wall_time"; }

std::string train_log_row(const TrainLogRow& r) {
  return std::to_string(r.iteration) + "," + std::to_string(r.steps) + "," + format_double(r.mean_reward) + "," +
         (std::isnan(r.test_objective) ? std::string() : format_double(r.test_objective)) + "," +
         format_double(r.wall_time);
}

}  // namespace mca
