#include "mca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mca/errors.hpp"

namespace mca {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw EmptyInput("empty channel");
  if (a.size() != b.size()) throw ConfigError("channel lengths differ");
}

double mean(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

}  // namespace

double rmse(std::span<const double> reference, std::span<const double> achieved) {
  check_pair(reference, achieved);
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - achieved[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(reference.size()));
}

double pcc(std::span<const double> reference, std::span<const double> achieved) {
  check_pair(reference, achieved);
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(reference) || constant(achieved)) throw ZeroVariance("constant channel");
  const double mr = mean(reference), ma = mean(achieved);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double dx = reference[i] - mr, dy = achieved[i] - ma;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw ZeroVariance("constant channel");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::array<double, 6> objective_weights() {
  const double deg = 180.0 / std::numbers::pi;
  return {1.0, 1.0, 1.0, 0.1 * deg, 0.1 * deg, 0.1 * deg};
}

bool ObjectiveBreakdown::flagged() const {
  return std::any_of(degenerate.begin(), degenerate.end(), [](bool d) { return d; });
}

ObjectiveBreakdown objective_breakdown(const CueChannels& achieved, const CueChannels& reference) {
  const auto w = objective_weights();
  ObjectiveBreakdown out;
  for (int c = 0; c < 6; ++c) {
    out.rmse[c] = rmse(reference[c], achieved[c]);
    out.value += w[c] * out.rmse[c];
    try {
      out.pcc[c] = pcc(reference[c], achieved[c]);
      out.value -= out.pcc[c];
    } catch (const ZeroVariance&) {
      out.pcc[c] = std::numeric_limits<double>::quiet_NaN();
      out.degenerate[c] = true;
    }
  }
  return out;
}

double objective(const CueChannels& achieved, const CueChannels& reference) {
  return objective_breakdown(achieved, reference).value;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  if (d.empty()) throw AllZeroDifferences("all paired differences are zero");
  if (d.size() > 25) throw ConfigError("exact signed-rank test supports at most 25 non-zero pairs");

  const int n = static_cast<int>(d.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) { return std::abs(d[i]) < std::abs(d[j]); });

  // Doubled mid-ranks keep every rank sum integral.
  std::vector<int> rank2(n);
  for (int i = 0; i < n;) {
    int j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    for (int k = i; k <= j; ++k) rank2[order[k]] = i + j + 2;
    i = j + 1;
  }

  int total = 0, w_plus2 = 0;
  for (int i = 0; i < n; ++i) {
    total += rank2[i];
    if (d[i] > 0.0) w_plus2 += rank2[i];
  }

  // counts[s]: number of sign assignments with doubled positive-rank sum s.
  std::vector<double> counts(total + 1, 0.0);
  counts[0] = 1.0;
  int reach = 0;
  for (int i = 0; i < n; ++i) {
    for (int s = reach; s >= 0; --s) {
      if (counts[s] != 0.0) counts[s + rank2[i]] += counts[s];
    }
    reach += rank2[i];
  }
  double lower = 0.0, upper = 0.0;
  for (int s = 0; s <= total; ++s) {
    if (s <= w_plus2) lower += counts[s];
    if (s >= w_plus2) upper += counts[s];
  }
  const double all = std::ldexp(1.0, n);

  WilcoxonResult r;
  r.n = n;
  r.w_plus = 0.5 * w_plus2;
  r.w_minus = 0.5 * (total - w_plus2);
  r.statistic = std::min(r.w_plus, r.w_minus);
  r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
  return r;
}

TimingStats timing_stats(std::span<const double> durations, double budget) {
  if (durations.empty()) throw EmptyInput("no timing samples");
  TimingStats s;
  s.count = durations.size();
  s.mean = mean(durations);
  double ss = 0.0;
  for (double x : durations) {
    ss += (x - s.mean) * (x - s.mean);
    s.max = std::max(s.max, x);
  }
  s.stddev = std::sqrt(ss / static_cast<double>(durations.size()));
  s.real_time = s.mean < budget;
  return s;
}

}  // namespace mca
