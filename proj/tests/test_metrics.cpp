#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "mca/channels.hpp"
#include "mca/errors.hpp"
#include "mca/metrics.hpp"
#include "mca/report.hpp"
#include "test_support.hpp"

using namespace mca;

namespace {

constexpr double kDt = 0.012;

const std::vector<double> kCw{-0.050, 2.379, 1.482, 1.382, 1.652, -1.191, 0.830, 0.702,
                              0.301,  1.786, 2.910, 3.201, 2.551, 1.181,  2.875};
const std::vector<double> kNmpc{-1.284, 0.598, -0.326, -0.339, -0.676, -2.369, -1.037, -0.660,
                                -0.743, 0.329, 1.296,  1.318,  0.608,  -1.046, 0.561};
const std::vector<double> kDrl{-1.460, 0.605, -0.346, 0.036, -1.026, -2.197, -0.518, -0.950,
                               -1.167, 0.083, 1.618,  1.940, 0.714,  -0.578, 0.423};

long double direct_rmse(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (static_cast<long double>(a[i]) - b[i]) * (static_cast<long double>(a[i]) - b[i]);
  return std::sqrt(s / a.size());
}

long double direct_pcc(const std::vector<double>& a, const std::vector<double>& b) {
  const long double n = a.size();
  long double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const long double ma = sa / n, mb = sb / n;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Two-sided exact p-value by brute-force sign enumeration over integer-doubled ranks.
double brute_force_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  const std::size_t n = d.size();
  std::vector<int> rank2(n);
  for (std::size_t i = 0; i < n; ++i) {
    int below = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) ++below;
      if (std::abs(d[j]) == std::abs(d[i])) ++equal;
    }
    rank2[i] = 2 * below + equal + 1;
  }
  int total = 0, plus = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total += rank2[i];
    if (d[i] > 0) plus += rank2[i];
  }
  const int observed = std::min(plus, total - plus);
  long long extreme = 0;
  for (unsigned long long mask = 0; mask < (1ull << n); ++mask) {
    int s = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s += rank2[i];
    if (std::min(s, total - s) <= observed) ++extreme;
  }
  return std::min(1.0, static_cast<double>(extreme) / static_cast<double>(1ull << n));
}

CueChannels random_channels(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> z(0.0, 1.0);
  CueChannels c;
  for (auto& ch : c) {
    ch.resize(n);
    for (double& x : ch) x = z(rng);
  }
  return c;
}

class ThrowingCueing : public MotionCueingAlgorithm {
 public:
  std::string name() const override { return "broken"; }
  void reset() override {}
  TickOutput tick(const ReferenceSample& r) override {
    if (r.t > 1.0) throw IoError("sensor lost");
    return {};
  }
};

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("rmse hand cases") {
  const std::vector<double> a{1.0, 2.0}, b{2.0, 4.0};
  CHECK(rmse(a, b) == doctest::Approx(1.5811388300841898).epsilon(1e-15));
  CHECK(rmse(a, a) == 0.0);
  const std::vector<double> x{0.3, -1.2, 4.0, 2.2}, y{2.8, 1.3, 6.5, 4.7};
  CHECK(rmse(x, y) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), EmptyInput);
  CHECK_THROWS_AS(rmse(a, x), ConfigError);
}

TEST_CASE("pcc hand cases") {
  const std::vector<double> a{1.0, 2.0, 3.0}, b{1.0, 2.0, 4.0}, neg{-1.0, -2.0, -3.0};
  CHECK(pcc(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pcc(a, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(pcc(a, b) == doctest::Approx(3.0 / std::sqrt(2.0 * 42.0 / 9.0)).epsilon(1e-14));
  CHECK(pcc(a, b) == doctest::Approx(0.98198).epsilon(1e-5));
  const std::vector<double> flat{0.1, 0.1, 0.1};
  CHECK_THROWS_AS(pcc(a, flat), ZeroVariance);
  CHECK_THROWS_AS(pcc(flat, a), ZeroVariance);
}

TEST_CASE("rmse and pcc agree with direct formulas; pcc is affine invariant") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> len(2, 300);
  std::uniform_real_distribution<double> scale(0.01, 100.0), shift(-50.0, 50.0);
  for (int k = 0; k < 1000; ++k) {
    const int n = len(rng);
    std::vector<double> a(n), b(n);
    const double mix = z(rng);
    for (int i = 0; i < n; ++i) {
      a[i] = z(rng) * 3.0;
      b[i] = mix * a[i] + z(rng);
    }
    const double r = rmse(a, b), p = pcc(a, b);
    CHECK(std::abs(r - static_cast<double>(direct_rmse(a, b))) <= 1e-12 * std::max(1.0, r));
    CHECK(std::abs(p - static_cast<double>(direct_pcc(a, b))) <= 1e-12);
    CHECK(r >= 0.0);
    CHECK(std::abs(p) <= 1.0);

    const double s = scale(rng), c = shift(rng);
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = s * b[i] + c;
    CHECK(std::abs(pcc(a, t) - p) < 1e-9);
    CHECK(std::abs(pcc(t, a) - p) < 1e-9);
  }
}

TEST_CASE("objective floor and constant offset") {
  std::mt19937_64 rng(43);
  const CueChannels ref = random_channels(rng, 200);
  CHECK(objective(ref, ref) == doctest::Approx(-6.0).epsilon(1e-12));

  const auto w = objective_weights();
  CHECK(w[0] == 1.0);
  CHECK(w[3] == doctest::Approx(0.1 * 180.0 / std::numbers::pi).epsilon(1e-15));
  for (int c = 0; c < 6; ++c) {
    CueChannels shifted = ref;
    for (double& x : shifted[c]) x += 0.25;
    CHECK(objective(shifted, ref) == doctest::Approx(-6.0 + w[c] * 0.25).epsilon(1e-12));
  }

  for (int k = 0; k < 200; ++k) CHECK(objective(random_channels(rng, 50), random_channels(rng, 50)) >= -6.0);
}

TEST_CASE("constant achieved channels are flagged and skip the correlation term") {
  std::mt19937_64 rng(47);
  const CueChannels ref = random_channels(rng, 100);
  CueChannels still = ref;
  std::fill(still[2].begin(), still[2].end(), 0.0);
  const ObjectiveBreakdown b = objective_breakdown(still, ref);
  CHECK(b.degenerate[2]);
  CHECK(b.flagged());
  CHECK(std::isnan(b.pcc[2]));
  CHECK(b.value == doctest::Approx(-5.0 + b.rmse[2]).epsilon(1e-12));
  double rms = 0.0;
  for (double x : ref[2]) rms += x * x;
  CHECK(b.rmse[2] == doctest::Approx(std::sqrt(rms / 100.0)).epsilon(1e-12));
}

TEST_CASE("signed-rank test reproduces the published comparisons") {
  const WilcoxonResult cw = wilcoxon_signed_rank(kCw, kDrl);
  CHECK(cw.n == 15);
  CHECK(cw.statistic == 0.0);
  CHECK(cw.p_value == 2.0 * std::pow(2.0, -15));
  CHECK(std::abs(cw.p_value - 6.104e-5) < 1e-6);

  const WilcoxonResult nmpc = wilcoxon_signed_rank(kNmpc, kDrl);
  CHECK(nmpc.statistic == 49.0);
  CHECK(nmpc.w_plus + nmpc.w_minus == 120.0);
  CHECK(std::abs(nmpc.p_value - 0.561) <= 0.002);
  CHECK(nmpc.p_value == doctest::Approx(brute_force_p(kNmpc, kDrl)).epsilon(1e-15));
}

TEST_CASE("signed-rank test with ties and zero differences") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0}, b{1.0, 1.5, 3.5, 3.0, 6.0, 5.5, 8.5, 4.0};
  const WilcoxonResult r = wilcoxon_signed_rank(a, b);
  CHECK(r.n == 7);
  CHECK(r.p_value == doctest::Approx(brute_force_p(a, b)).epsilon(1e-15));

  std::mt19937_64 rng(53);
  std::uniform_int_distribution<int> v(-3, 3);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(12), y(12, 0.0);
    for (double& e : x) e = v(rng);
    if (std::all_of(x.begin(), x.end(), [](double e) { return e == 0.0; })) continue;
    CHECK(wilcoxon_signed_rank(x, y).p_value == doctest::Approx(brute_force_p(x, y)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(wilcoxon_signed_rank(a, a), AllZeroDifferences);
}

TEST_CASE("timing statistics") {
  const std::vector<double> ones(10, 1e-3);
  const TimingStats s = timing_stats(ones);
  CHECK(s.mean == doctest::Approx(1e-3));
  CHECK(s.stddev == doctest::Approx(0.0));
  CHECK(s.real_time);
  const std::vector<double> boundary{0.010, 0.014};
  const TimingStats b = timing_stats(boundary);
  CHECK(b.mean == doctest::Approx(0.012).epsilon(1e-12));
  CHECK(b.max == 0.014);
  CHECK_FALSE(b.real_time);
  CHECK_THROWS_AS(timing_stats(std::vector<double>{}), EmptyInput);
}

TEST_CASE("oracle and zero-motion evaluation on the validation split") {
  const Platform platform(reference_robot());
  const Datasets data = build_datasets(1);
  ReplayCueing oracle(platform);
  HoldCueing hold(platform);
  const AlgorithmResult o = evaluate_mca(oracle, data.validation);
  const AlgorithmResult z = evaluate_mca(hold, data.validation);
  REQUIRE(o.traces.size() == 15);
  for (const auto& t : o.traces) CHECK(t.metrics.value == doctest::Approx(-6.0).epsilon(1e-9));

  for (std::size_t k = 0; k < z.traces.size(); ++k) {
    const CueChannels ref = reference_channels(data.validation[k]);
    double expected = 0.0;
    const auto w = objective_weights();
    for (int c = 0; c < 6; ++c) {
      double rms = 0.0;
      for (double x : ref[c]) rms += x * x;
      rms = std::sqrt(rms / ref[c].size());
      CHECK(z.traces[k].metrics.rmse[c] == doctest::Approx(rms).epsilon(1e-9));
      expected += w[c] * rms;
    }
    CHECK(z.traces[k].metrics.value == doctest::Approx(expected).epsilon(1e-9));
    CHECK(z.traces[k].metrics.value > -6.0 + 1.0);
  }

  const EvaluationReport report = assemble_report({o, z});
  REQUIRE(report.tests.size() == 1);
  CHECK(report.tests[0].result.n == 15);
  CHECK(report.tests[0].significant);

  const auto dir = test::scratch_dir("report");
  write_report(report, dir);
  CHECK(count_lines(dir / "objectives.csv") == 16);
  CHECK(count_lines(dir / "channels.csv") == 31);
  CHECK(count_lines(dir / "timing.csv") == 3);
  CHECK(count_lines(dir / "wilcoxon.csv") == 2);
  std::ifstream js(dir / "summary.json");
  nlohmann::json parsed;
  CHECK_NOTHROW(parsed = nlohmann::json::parse(js));
  CHECK(parsed.is_object());
}

TEST_CASE("failed traces are recorded and excluded from the paired test") {
  const Platform platform(reference_robot());
  std::vector<ReferenceTrace> traces;
  for (int k = 0; k < 6; ++k) traces.push_back(synthesize_scenario(ScenarioKind::Mixed, k == 2 ? 0.5 : 3.0, kDt, k));
  ThrowingCueing broken;
  HoldCueing hold(platform);
  const AlgorithmResult b = evaluate_mca(broken, traces);
  CHECK(b.traces[0].failed);
  CHECK(b.traces[0].error == "sensor lost");
  CHECK_FALSE(b.traces[2].failed);
  CHECK(std::isnan(b.objectives()[0]));

  const EvaluationReport report = assemble_report({b, evaluate_mca(hold, traces)});
  CHECK(report.tests[0].result.n <= 1);
  // Either the single pair ties and the test is skipped with a note, or it runs and cannot reject.
  CHECK((!report.tests[0].note.empty() || report.tests[0].result.p_value == 1.0));
  CHECK_FALSE(report.tests[0].significant);
}

TEST_CASE("per-trace files and joint lines") {
  const Platform platform(reference_robot());
  const std::vector<ReferenceTrace> traces{synthesize_scenario(ScenarioKind::Circle, 2.0, kDt, 1)};
  const auto dir = test::scratch_dir("trace_files");
  ReplayCueing oracle(platform);
  evaluate_mca(oracle, traces, EvaluateOptions{dir});
  const std::string stem = "oracle_" + traces[0].label;
  CHECK(count_lines(dir / (stem + "_cues.csv")) == traces[0].size() + 1);
  CHECK(count_lines(dir / (stem + "_pose.csv")) == traces[0].size() + 1);
  CHECK(count_lines(dir / (stem + "_joints.csv")) == traces[0].size() + 1);
  CHECK(joint_csv_header() == "t,q1,q2,q3,q4,q5,q6,flag");

  TickOutput tick;
  tick.q << 0.5, -0.25, 1.0, 0.0, 2.0, -1.5;
  tick.flagged = true;
  CHECK(joint_line(0.012, tick, ' ') == "0.012 0.5 -0.25 1 0 2 -1.5 1");
}
