#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace mca {

struct SearchOptions {
  int budget = 500;          ///< total objective evaluations, including the initial point
  int initial_samples = 0;   ///< Latin-hypercube points; 0 picks min(budget / 4, 10 * free dimensions)
  std::uint64_t seed = 1;
  int threads = 1;           ///< evaluations of one batch run concurrently; results do not depend on it
};

struct SearchResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool budget_exhausted = false;     ///< stopped by the budget rather than convergence
  std::vector<double> history;       ///< objective of every evaluation, in order
};

using Objective = std::function<double(const std::vector<double>&)>;

/**
 * Bounded derivative-free global minimization.
 *
 * Evaluates x0 and a Latin-hypercube design over the box, runs coarse bounded Nelder-Mead
 * searches from the best design points, then hops from perturbed copies of the incumbent.
 * The last fifth of the budget polishes the incumbent. Dimensions with
 * lower == upper stay fixed. The result is never worse than x0.
 * The objective must be safe to call concurrently when threads > 1.
 */
SearchResult global_minimize(const Objective& f, const std::vector<double>& x0, const std::vector<double>& lower,
                             const std::vector<double>& upper, const SearchOptions& options = {});

}  // namespace mca
