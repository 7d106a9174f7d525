#include "mca/reward_search.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "mca/errors.hpp"
#include "mca/util.hpp"

namespace mca {

namespace {

using Point = std::array<double, 3>;

Point to_log(const RewardWeights& w) { return {std::log(w.force), std::log(w.angular), std::log(w.position)}; }
RewardWeights from_log(const Point& p) { return {std::exp(p[0]), std::exp(p[1]), std::exp(p[2])}; }

// Mixture of Gaussians centred on `points`, truncated to [lo, hi] per dimension.
double parzen_log_density(const Point& x, const std::vector<Point>& points, const Point& lo, const Point& hi) {
  if (points.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : points) {
    double log_k = 0.0;
    for (int d = 0; d < 3; ++d) {
      if (hi[d] <= lo[d]) continue;
      const double bw = std::max(0.1 * (hi[d] - lo[d]), (hi[d] - lo[d]) / std::sqrt(static_cast<double>(points.size())) / 2.0);
      const double z = (x[d] - c[d]) / bw;
      log_k += -0.5 * z * z - std::log(bw);
    }
    total += std::exp(log_k);
  }
  return std::log(total / static_cast<double>(points.size()) + 1e-300);
}

}  // namespace

RewardSearchResult search_reward_weights(const RewardSearchSpace& space, int trials, std::uint64_t seed,
                                         const RewardScorer& scorer) {
  if (trials < 1) throw ConfigError("reward search needs at least one trial");
  space.lower.validate();
  space.upper.validate();
  if (!(space.lower.force > 0.0 && space.lower.angular > 0.0 && space.lower.position > 0.0))
    throw ConfigError("reward search: bounds must be positive (the search runs in log space)");
  const Point lo = to_log(space.lower), hi = to_log(space.upper);
  for (int d = 0; d < 3; ++d) {
    if (!(lo[d] <= hi[d])) throw ConfigError("reward search: lower bound exceeds upper bound");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_point = [&] {
    Point p;
    for (int d = 0; d < 3; ++d) p[d] = lo[d] + unit(rng) * (hi[d] - lo[d]);
    return p;
  };

  const int startup = std::min(trials, 5);
  constexpr int kCandidates = 24;
  RewardSearchResult result;
  std::vector<Point> history;
  for (int t = 0; t < trials; ++t) {
    Point next;
    if (t < startup) {
      next = uniform_point();
    } else {
      std::vector<std::size_t> idx(history.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::stable_sort(idx.begin(), idx.end(),
                       [&](std::size_t a, std::size_t b) { return result.trials[a].score < result.trials[b].score; });
      const std::size_t n_good = std::max<std::size_t>(1, idx.size() / 4);
      std::vector<Point> good, bad;
      for (std::size_t k = 0; k < idx.size(); ++k) (k < n_good ? good : bad).push_back(history[idx[k]]);

      double best_ratio = -std::numeric_limits<double>::infinity();
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int c = 0; c < kCandidates; ++c) {
        const Point& centre = good[std::uniform_int_distribution<std::size_t>(0, good.size() - 1)(rng)];
        Point p;
        for (int d = 0; d < 3; ++d) {
          const double bw = 0.15 * (hi[d] - lo[d]);
          p[d] = std::clamp(centre[d] + bw * normal(rng), lo[d], hi[d]);
        }
        const double ratio = parzen_log_density(p, good, lo, hi) - parzen_log_density(p, bad, lo, hi);
        if (ratio > best_ratio) {
          best_ratio = ratio;
          next = p;
        }
      }
    }
    RewardWeights w = from_log(next);
    w.force = std::clamp(w.force, space.lower.force, space.upper.force);
    w.angular = std::clamp(w.angular, space.lower.angular, space.upper.angular);
    w.position = std::clamp(w.position, space.lower.position, space.upper.position);
    RewardTrial trial{t, w, scorer(w, derive_seed(seed, 7, static_cast<std::uint64_t>(t)))};
    if (!std::isfinite(trial.score)) trial.score = std::numeric_limits<double>::infinity();
    history.push_back(next);
    result.trials.push_back(trial);
    if (t == 0 || trial.score < result.best_score) {
      result.best = w;
      result.best_score = trial.score;
    }
  }
  return result;
}

RewardScorer training_scorer(const PpoConfig& cfg, const std::vector<ReferenceTrace>& train_traces,
                             const std::vector<ReferenceTrace>& test_traces, const Platform& platform) {
  return [=, &train_traces, &test_traces, &platform](const RewardWeights& w, std::uint64_t seed) {
    return train(cfg, train_traces, test_traces, platform, w, seed).best_test_objective;
  };
}

}  // namespace mca
