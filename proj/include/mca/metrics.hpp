#pragma once

#include <array>
#include <span>
#include <vector>

namespace mca {

/// Root-mean-squared error. Throws EmptyInput; lengths must agree.
double rmse(std::span<const double> reference, std::span<const double> achieved);

/// Pearson correlation. Throws ZeroVariance when either sequence is constant.
double pcc(std::span<const double> reference, std::span<const double> achieved);

/// Six cue channels in the order fx, fy, fz (m/s^2), wx, wy, wz (rad/s).
using CueChannels = std::array<std::vector<double>, 6>;

/// RMSE weight per channel: forces in m/s^2 at 1, angular rates converted to deg/s at 0.1.
std::array<double, 6> objective_weights();

struct ObjectiveBreakdown {
  std::array<double, 6> rmse{};  ///< raw, in SI units
  std::array<double, 6> pcc{};   ///< NaN on degenerate channels
  std::array<bool, 6> degenerate{};
  double value = 0.0;

  bool flagged() const;
};

/// Sum over channels of weight * rmse - pcc. A constant channel contributes no pcc term
/// and is marked degenerate. Minimum -6 at an exact match.
ObjectiveBreakdown objective_breakdown(const CueChannels& achieved, const CueChannels& reference);
double objective(const CueChannels& achieved, const CueChannels& reference);

struct WilcoxonResult {
  double statistic = 0.0;  ///< min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  int n = 0;               ///< pairs with non-zero difference
  double p_value = 1.0;    ///< two-sided, exact
};

/**
 * Exact two-sided Wilcoxon signed-rank test on paired samples.
 *
 * Zero differences are dropped and ties receive mid-ranks; the null distribution
 * is enumerated over all 2^n sign assignments of the observed ranks.
 * Throws AllZeroDifferences, EmptyInput, or ConfigError for n > 25.
 */
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

struct TimingStats {
  double mean = 0.0;  ///< s
  double stddev = 0.0;
  double max = 0.0;
  std::size_t count = 0;
  bool real_time = false;  ///< mean strictly below the budget
};

/// Durations in seconds. Throws EmptyInput.
TimingStats timing_stats(std::span<const double> durations, double budget = 0.012);

}  // namespace mca
