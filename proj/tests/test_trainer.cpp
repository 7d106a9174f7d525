#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mca/errors.hpp"
#include "mca/reward_search.hpp"
#include "mca/trainer.hpp"
#include "test_support.hpp"

using namespace mca;

namespace {

constexpr double kDt = 0.012;

PpoConfig tiny_config() {
  PpoConfig c;
  c.hidden = {8, 8};
  c.n_steps = 256;
  c.batch_size = 64;
  c.n_envs = 2;
  c.n_epochs = 2;
  c.total_steps = 512;
  c.eval_interval = 1;
  return c;
}

MlpNetwork small_net(const std::vector<int>& sizes, Activation out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MlpNetwork net(sizes, Activation::Tanh, out);
  orthogonal_init(net, 1.0, 1.0, rng);
  std::normal_distribution<double> n(0.0, 0.2);
  for (auto& l : net.layers)
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = n(rng);
  return net;
}

double relative_gap(double a, double b) { return std::abs(a - b) / (std::max(std::abs(a), std::abs(b)) + 1e-9); }

}  // namespace

TEST_CASE("reward is zero at rest and matches a hand sum") {
  const Platform platform(reference_robot());
  const PlatformState rest = platform.reset();
  CHECK(std::abs(compute_reward(rest, ReferenceSample{}, RewardWeights{})) < 1e-12);

  PlatformState moved = rest;
  moved.pose.position += Vec3(0.1, 0.0, 0.0);
  ReferenceSample ref;
  ref.f_ref = Vec3(0.5, 0.0, 0.0);
  ref.omega_ref = Vec3(0.0, 0.2, 0.0);
  CHECK(compute_reward(moved, ref, RewardWeights{1.0, 1.0, 1.0}) == doctest::Approx(-0.8).epsilon(1e-12));
}

TEST_CASE("reward is never positive") {
  const Platform platform(reference_robot());
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 3.0);
  PlatformState s = platform.reset();
  for (int k = 0; k < 2000; ++k) {
    Action a;
    a.jerk = Vec3(n(rng), n(rng), n(rng));
    a.angular_acceleration = Vec3(n(rng), n(rng), n(rng)) / 5.0;
    s = platform.step(s, a);
    ReferenceSample ref;
    ref.f_ref = Vec3(n(rng), n(rng), n(rng));
    ref.omega_ref = Vec3(n(rng), n(rng), n(rng)) / 10.0;
    CHECK(compute_reward(s, ref, RewardWeights{}) <= 0.0);
  }
  RewardWeights bad;
  bad.angular = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("advantage estimation hand cases") {
  const std::vector<double> zeros(4, 0.0);
  GaeResult g = compute_gae(zeros, zeros, {}, 0.0, 0.99, 0.95);
  CHECK(g.advantages == zeros);

  const std::vector<double> ones{1.0, 1.0, 1.0}, none(3, 0.0);
  g = compute_gae(ones, none, {}, 0.0, 1.0, 1.0);
  CHECK(g.returns == std::vector<double>{3.0, 2.0, 1.0});

  const std::vector<double> r{0.5, -1.0, 2.0}, v{0.3, 0.7, -0.2};
  const double gamma = 0.9, boot = 0.4;
  g = compute_gae(r, v, {}, boot, gamma, 0.0);
  CHECK(g.advantages[0] == doctest::Approx(r[0] + gamma * v[1] - v[0]).epsilon(1e-15));
  CHECK(g.advantages[1] == doctest::Approx(r[1] + gamma * v[2] - v[1]).epsilon(1e-15));
  CHECK(g.advantages[2] == doctest::Approx(r[2] + gamma * boot - v[2]).epsilon(1e-15));

  // Episode end stops the recursion.
  const std::vector<std::uint8_t> done{0, 1, 0};
  g = compute_gae(ones, none, done, 5.0, 1.0, 1.0);
  CHECK(g.returns == std::vector<double>{2.0, 1.0, 6.0});
}

TEST_CASE("lambda one reproduces discounted returns over ten steps") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> r(10);
  for (double& x : r) x = n(rng);
  const double gamma = 0.996273;
  const GaeResult g = compute_gae(r, std::vector<double>(10, 0.0), {}, 0.0, gamma, 1.0);
  for (int t = 0; t < 10; ++t) {
    double sum = 0.0;
    for (int k = t; k < 10; ++k) sum += std::pow(gamma, k - t) * r[k];
    CHECK(g.returns[t] == doctest::Approx(sum).epsilon(1e-13));
    CHECK(g.advantages[t] == g.returns[t]);
  }
}

TEST_CASE("configuration profiles and validation") {
  const PpoConfig paper = PpoConfig::paper();
  CHECK(paper.n_steps == 131072);
  CHECK(paper.batch_size == 1024);
  CHECK(paper.learning_rate == 0.000528);
  CHECK(paper.gamma == 0.996273);
  CHECK(paper.n_epochs == 5);
  CHECK(paper.hidden == std::vector<int>{1024, 1024});
  CHECK(paper.total_steps == 100'000'000);
  const PpoConfig desk = PpoConfig::desk();
  CHECK(desk.hidden == std::vector<int>{128, 128});
  CHECK(desk.total_steps == 2'000'000);
  CHECK(desk.n_steps % desk.batch_size == 0);
  CHECK(desk.reference_preprocess.scale[2] == 0.5);
  CHECK(std::isinf(desk.reference_preprocess.clip[2]));

  PpoConfig bad = desk;
  bad.batch_size = 300;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = desk;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.gamma = 1.0;
  CHECK_NOTHROW(bad.validate());
}

TEST_CASE("rollouts: empty, deterministic and silent on an idle trace") {
  const RobotModel robot = reference_robot();
  const Platform platform(robot);
  const NormalizationSpec spec = default_normalization(robot);
  const std::vector<ReferenceTrace> idle{synthesize_scenario(ScenarioKind::Idle, 3.0, kDt, 1)};
  PpoConfig cfg = tiny_config();

  MlpNetwork still = make_actor({8, 8}, -std::numeric_limits<double>::infinity());
  const MlpNetwork critic = make_critic({8, 8});
  std::vector<CueingEnv> envs{CueingEnv(platform, idle, spec, RewardWeights{}, 1)};
  CHECK(collect_rollout(envs, still, critic, 0, cfg).size() == 0);

  const RolloutBatch quiet = collect_rollout(envs, still, critic, 400, cfg);
  CHECK(quiet.size() == 400);
  CHECK(quiet.rewards.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(std::abs(quiet.mean_reward) < 1e-12);
  CHECK(std::count(quiet.dones.begin(), quiet.dones.end(), 1) == 1);

  const MlpNetwork actor = small_net({kObservationSize, 8, 8, kActionSize}, Activation::Tanh, 3);
  MlpNetwork noisy = actor;
  noisy.log_std = VecX::Constant(kActionSize, -0.5);
  const std::vector<ReferenceTrace> mixed{synthesize_scenario(ScenarioKind::Mixed, 5.0, kDt, 2)};
  auto batch = [&] {
    std::vector<CueingEnv> e;
    for (int i = 0; i < 2; ++i) e.emplace_back(platform, mixed, spec, RewardWeights{}, 10 + i);
    return collect_rollout(e, noisy, critic, 128, cfg);
  };
  const RolloutBatch a = batch(), b = batch();
  CHECK(a.observations == b.observations);
  CHECK(a.actions == b.actions);
  CHECK(a.rewards == b.rewards);
  CHECK(a.advantages.allFinite());
  CHECK(a.rewards.maxCoeff() <= 0.0);

  cfg.threads = 2;
  std::vector<CueingEnv> e;
  for (int i = 0; i < 2; ++i) e.emplace_back(platform, mixed, spec, RewardWeights{}, 10 + i);
  CHECK(collect_rollout(e, noisy, critic, 128, cfg).actions == a.actions);
}

TEST_CASE("reward compares against the target trace while the observation sees the raw one") {
  const RobotModel robot = reference_robot();
  const Platform platform(robot);
  const NormalizationSpec spec = default_normalization(robot);
  const std::vector<ReferenceTrace> raw{synthesize_scenario(ScenarioKind::Mixed, 3.0, kDt, 4)};
  PreprocessSpec pp = PreprocessSpec::identity();
  pp.scale.fill(0.5);
  const std::vector<ReferenceTrace> half{preprocess(raw[0], pp)};
  const VecX zero = VecX::Zero(kActionSize);

  CueingEnv plain(platform, raw, spec, RewardWeights{}, 1);
  CueingEnv scaled(platform, raw, half, spec, RewardWeights{}, 1);
  CHECK(plain.observation() == scaled.observation());
  double sum_plain = 0.0, sum_scaled = 0.0;
  for (int k = 0; k < 100; ++k) {
    sum_plain += plain.step(zero).reward;
    sum_scaled += scaled.step(zero).reward;
    CHECK(plain.observation() == scaled.observation());
  }
  CHECK(sum_plain < 0.0);
  CHECK(sum_scaled == doctest::Approx(0.5 * sum_plain).epsilon(1e-9));

  const std::vector<ReferenceTrace> short_target{synthesize_scenario(ScenarioKind::Idle, 1.0, kDt, 1)};
  CHECK_THROWS_AS(CueingEnv(platform, raw, short_target, spec, RewardWeights{}, 1), ShapeMismatch);
  const std::vector<ReferenceTrace> two{raw[0], raw[0]};
  CHECK_THROWS_AS(CueingEnv(platform, two, raw, spec, RewardWeights{}, 1), ShapeMismatch);

  PpoConfig cfg = PpoConfig::desk();
  cfg.reference_preprocess.scale[2] = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = PpoConfig::desk();
  cfg.reference_preprocess.clip[0] = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("policy ratio is one for a freshly collected batch") {
  const RobotModel robot = reference_robot();
  const Platform platform(robot);
  const NormalizationSpec spec = default_normalization(robot);
  const std::vector<ReferenceTrace> traces{synthesize_scenario(ScenarioKind::Slalom, 5.0, kDt, 3)};
  MlpNetwork actor = small_net({kObservationSize, 8, 8, kActionSize}, Activation::Tanh, 5);
  actor.log_std = VecX::Constant(kActionSize, -0.7);
  const MlpNetwork critic = small_net({kObservationSize, 8, 8, 1}, Activation::Identity, 6);
  const PpoConfig cfg = tiny_config();
  std::vector<CueingEnv> envs{CueingEnv(platform, traces, spec, RewardWeights{}, 4)};
  const RolloutBatch b = collect_rollout(envs, actor, critic, 200, cfg);
  Minibatch mb{b.observations, b.actions, b.log_probs, b.advantages, b.returns};
  const LossGradient lg = ppo_loss_and_gradient(actor, critic, mb, cfg);
  CHECK(lg.clip_fraction == 0.0);
  CHECK(std::abs(lg.approx_kl) < 1e-12);
  CHECK(lg.policy_loss == doctest::Approx(-b.advantages.mean()).epsilon(1e-9));
}

TEST_CASE("clipped-surrogate gradient matches central finite differences") {
  const int in = 2, dims = 2, n = 40;
  MlpNetwork actor = small_net({in, 8, 8, dims}, Activation::Tanh, 21);
  actor.log_std = VecX::Constant(dims, -0.4);
  actor.log_std(1) = 0.1;
  MlpNetwork critic = small_net({in, 8, 8, 1}, Activation::Identity, 22);

  std::mt19937_64 rng(23);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-0.35, 0.35);
  Minibatch mb;
  mb.observations.resize(in, n);
  mb.actions.resize(dims, n);
  mb.old_log_probs.resize(n);
  mb.advantages.resize(n);
  mb.returns.resize(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < in; ++i) mb.observations(i, j) = z(rng);
    const VecX mean = actor.forward(mb.observations.col(j));
    for (int i = 0; i < dims; ++i) mb.actions(i, j) = mean(i) + std::exp(actor.log_std(i)) * z(rng);
    // Ratios spread across both sides of the clip window.
    mb.old_log_probs(j) = gaussian_log_prob(mb.actions.col(j), mean, actor.log_std) + shift(rng);
    mb.advantages(j) = z(rng);
    mb.returns(j) = z(rng);
  }
  PpoConfig cfg;
  cfg.ent_coef = 0.01;
  const LossGradient lg = ppo_loss_and_gradient(actor, critic, mb, cfg);
  CHECK(lg.clip_fraction > 0.0);
  CHECK(lg.clip_fraction < 1.0);

  const double h = 1e-6;
  auto check_net = [&](MlpNetwork& net, const std::vector<double>& grad, bool is_actor) {
    const std::vector<double> base = net.parameters();
    REQUIRE(grad.size() == base.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < base.size(); ++k) {
      std::vector<double> p = base;
      p[k] = base[k] + h;
      net.set_parameters(p);
      const double up = is_actor ? ppo_loss_and_gradient(net, critic, mb, cfg).loss
                                 : ppo_loss_and_gradient(actor, net, mb, cfg).loss;
      p[k] = base[k] - h;
      net.set_parameters(p);
      const double down = is_actor ? ppo_loss_and_gradient(net, critic, mb, cfg).loss
                                   : ppo_loss_and_gradient(actor, net, mb, cfg).loss;
      worst = std::max(worst, relative_gap(grad[k], (up - down) / (2 * h)));
    }
    net.set_parameters(base);
    return worst;
  };
  MlpNetwork a = actor, c = critic;
  CHECK(check_net(a, lg.actor_grad, true) < 1e-4);
  CHECK(check_net(c, lg.critic_grad, false) < 1e-4);
}

TEST_CASE("updates: zero epochs, zero advantages and non-finite batches") {
  const RobotModel robot = reference_robot();
  const Platform platform(robot);
  const NormalizationSpec spec = default_normalization(robot);
  const std::vector<ReferenceTrace> traces{synthesize_scenario(ScenarioKind::Mixed, 5.0, kDt, 8)};
  MlpNetwork actor = small_net({kObservationSize, 8, 8, kActionSize}, Activation::Tanh, 31);
  actor.log_std = VecX::Constant(kActionSize, -0.5);
  const MlpNetwork critic = small_net({kObservationSize, 8, 8, 1}, Activation::Identity, 32);
  PpoConfig cfg = tiny_config();
  std::vector<CueingEnv> envs{CueingEnv(platform, traces, spec, RewardWeights{}, 5)};
  RolloutBatch b = collect_rollout(envs, actor, critic, 128, cfg);
  std::mt19937_64 rng(1);

  cfg.n_epochs = 0;
  PpoLearner frozen(actor, critic, cfg);
  frozen.update(b, rng);
  CHECK(frozen.actor() == actor);
  CHECK(frozen.critic() == critic);

  Minibatch mb{b.observations, b.actions, b.log_probs, VecX::Zero(128), b.returns};
  const LossGradient lg = ppo_loss_and_gradient(actor, critic, mb, tiny_config());
  CHECK(std::all_of(lg.actor_grad.begin(), lg.actor_grad.end(), [](double g) { return g == 0.0; }));
  CHECK(std::any_of(lg.critic_grad.begin(), lg.critic_grad.end(), [](double g) { return g != 0.0; }));

  cfg = tiny_config();
  PpoLearner learner(actor, critic, cfg);
  b.advantages(3) = std::numeric_limits<double>::quiet_NaN();
  const PpoDiagnostics d = learner.update(b, rng);
  CHECK(d.aborted);
  CHECK(learner.actor() == actor);
  CHECK(learner.critic() == critic);
}

TEST_CASE("training: one iteration logs once; fixed seed reproduces the log") {
  const Platform platform(reference_robot());
  const std::vector<ReferenceTrace> train_set{synthesize_scenario(ScenarioKind::Mixed, 6.0, kDt, 1),
                                              synthesize_scenario(ScenarioKind::Circle, 6.0, kDt, 2)};
  const std::vector<ReferenceTrace> test_set{synthesize_scenario(ScenarioKind::Slalom, 4.0, kDt, 3)};
  PpoConfig cfg = tiny_config();
  cfg.total_steps = cfg.n_steps;
  const TrainResult one = train(cfg, train_set, test_set, platform, RewardWeights{}, 7);
  REQUIRE(one.log.size() == 1);
  CHECK(one.log[0].steps == cfg.n_steps);
  CHECK(std::isfinite(one.log[0].test_objective));
  CHECK(one.best_test_objective <= one.initial_test_objective);

  cfg.total_steps = 3 * cfg.n_steps;
  const TrainResult a = train(cfg, train_set, test_set, platform, RewardWeights{}, 9);
  const TrainResult b = train(cfg, train_set, test_set, platform, RewardWeights{}, 9);
  REQUIRE(a.log.size() == 3);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].mean_reward == b.log[i].mean_reward);
    CHECK(a.log[i].test_objective == b.log[i].test_objective);
  }
  CHECK(a.actor == b.actor);
  CHECK(evaluate_policy(a.best_actor, a.normalization, test_set, platform) == a.best_test_objective);
  CHECK(train_log_header() == "iteration,steps,mean_reward,test_objective,wall_time");
}

TEST_CASE("reward-weight search") {
  const auto bowl = [](const RewardWeights& w, std::uint64_t) {
    return std::pow(std::log(w.force / 2.0), 2) + std::pow(std::log(w.angular / 10.0), 2) +
           std::pow(std::log(w.position / 0.3), 2);
  };
  const RewardSearchSpace space;

  const RewardSearchResult single = search_reward_weights(space, 1, 3, bowl);
  REQUIRE(single.trials.size() == 1);
  CHECK(single.best.force == single.trials[0].weights.force);
  CHECK(single.best_score == single.trials[0].score);

  RewardSearchSpace point;
  point.lower = point.upper = RewardWeights{2.0, 4.0, 0.5};
  const RewardSearchResult pinned = search_reward_weights(point, 4, 3, bowl);
  CHECK(pinned.best.force == 2.0);
  CHECK(pinned.best.angular == 4.0);
  CHECK(pinned.best.position == 0.5);

  const RewardSearchResult run = search_reward_weights(space, 20, 5, bowl);
  std::vector<double> scores;
  for (const auto& t : run.trials) scores.push_back(t.score);
  std::sort(scores.begin(), scores.end());
  CHECK(run.best_score <= (scores[9] + scores[10]) / 2.0);
  CHECK(run.best_score == scores.front());

  CHECK_THROWS_AS(search_reward_weights(space, 0, 1, bowl), ConfigError);
}
