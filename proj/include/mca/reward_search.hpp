#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mca/trainer.hpp"

namespace mca {

/// Box of candidate weights, searched in log space. Equal bounds pin a weight.
struct RewardSearchSpace {
  RewardWeights lower{0.1, 0.5, 0.05};
  RewardWeights upper{10.0, 50.0, 5.0};
};

struct RewardTrial {
  int index = 0;
  RewardWeights weights;
  double score = 0.0;  ///< lower is better
};

struct RewardSearchResult {
  RewardWeights best;
  double best_score = 0.0;
  std::vector<RewardTrial> trials;
};

/// Scores a candidate; receives a per-trial seed.
using RewardScorer = std::function<double(const RewardWeights&, std::uint64_t)>;

/**
 * Tree-structured Parzen search: random startup trials, then candidates drawn around
 * the best quarter of the history and ranked by the good/bad density ratio.
 */
RewardSearchResult search_reward_weights(const RewardSearchSpace& space, int trials, std::uint64_t seed,
                                         const RewardScorer& scorer);

/// Scorer that runs a short training with `cfg` and returns its best test objective.
RewardScorer training_scorer(const PpoConfig& cfg, const std::vector<ReferenceTrace>& train_traces,
                             const std::vector<ReferenceTrace>& test_traces, const Platform& platform);

}  // namespace mca
