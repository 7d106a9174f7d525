#include "mca/global_search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "mca/errors.hpp"

namespace mca {

namespace {

using Point = std::vector<double>;

constexpr std::size_t kLocalStarts = 5;
constexpr double kCoarseTol = 1e-3;

class Search {
 public:
  Search(const Objective& f, const Point& x0, const Point& lower, const Point& upper, const SearchOptions& opt)
      : f_(f), x0_(x0), lower_(lower), upper_(upper), opt_(opt) {
    for (std::size_t i = 0; i < x0.size(); ++i) {
      if (upper[i] > lower[i]) free_.push_back(i);
    }
  }

  std::size_t dims() const { return free_.size(); }

  Point to_x(const Point& u) const {
    Point x = x0_;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower_[i], upper_[i]);
    for (std::size_t k = 0; k < free_.size(); ++k) {
      const std::size_t i = free_[k];
      x[i] = lower_[i] + std::clamp(u[k], 0.0, 1.0) * (upper_[i] - lower_[i]);
    }
    return x;
  }

  Point to_u(const Point& x) const {
    Point u(free_.size());
    for (std::size_t k = 0; k < free_.size(); ++k) {
      const std::size_t i = free_[k];
      u[k] = std::clamp((x[i] - lower_[i]) / (upper_[i] - lower_[i]), 0.0, 1.0);
    }
    return u;
  }

  bool exhausted() const { return static_cast<int>(result_.history.size()) >= opt_.budget; }

  double record(const Point& u, double value) {
    if (!std::isfinite(value)) value = std::numeric_limits<double>::infinity();
    result_.history.push_back(value);
    if (result_.x.empty() || value < result_.value) {
      result_.x = to_x(u);
      result_.value = value;
    }
    return value;
  }

  double eval(const Point& u) { return record(u, f_(to_x(u))); }

  // Evaluates a batch, concurrently when configured; records in index order.
  std::vector<double> eval_batch(const std::vector<Point>& us) {
    std::vector<double> values(us.size());
    const int threads = std::max(1, std::min<int>(opt_.threads, static_cast<int>(us.size())));
    if (threads == 1) {
      for (std::size_t i = 0; i < us.size(); ++i) values[i] = f_(to_x(us[i]));
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          for (std::size_t i = t; i < us.size(); i += threads) values[i] = f_(to_x(us[i]));
        });
      }
      for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < us.size(); ++i) values[i] = record(us[i], values[i]);
    return values;
  }

  // Bounded Nelder-Mead in the unit cube. Returns false once the budget ran out.
  bool nelder_mead(const Point& start, double start_value, double step, double tol) {
    const std::size_t m = dims();
    std::vector<Point> s{start};
    std::vector<double> fs{start_value};
    for (std::size_t k = 0; k < m; ++k) {
      Point p = start;
      p[k] = p[k] + step <= 1.0 ? p[k] + step : p[k] - step;
      if (exhausted()) return false;
      s.push_back(p);
      fs.push_back(eval(p));
    }
    auto clamp_unit = [](Point p) {
      for (double& v : p) v = std::clamp(v, 0.0, 1.0);
      return p;
    };
    for (int iter = 0;; ++iter) {
      std::vector<std::size_t> idx(m + 1);
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
      std::vector<Point> s2;
      std::vector<double> f2;
      for (std::size_t i : idx) {
        s2.push_back(s[i]);
        f2.push_back(fs[i]);
      }
      s.swap(s2);
      fs.swap(f2);

      double diameter = 0.0;
      for (std::size_t i = 1; i <= m; ++i) {
        double d = 0.0;
        for (std::size_t k = 0; k < m; ++k) d = std::max(d, std::abs(s[i][k] - s[0][k]));
        diameter = std::max(diameter, d);
      }
      const double spread = fs[m] - fs[0];
      if (diameter < tol || (std::isfinite(spread) && spread <= 1e-12 * (1.0 + std::abs(fs[0])))) return true;

      Point centroid(m, 0.0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < m; ++k) centroid[k] += s[i][k] / static_cast<double>(m);
      auto along = [&](double t) {
        Point p(m);
        for (std::size_t k = 0; k < m; ++k) p[k] = centroid[k] + t * (s[m][k] - centroid[k]);
        return clamp_unit(p);
      };

      if (exhausted()) return false;
      const Point xr = along(-1.0);
      const double fr = eval(xr);
      if (fr < fs[0]) {
        if (exhausted()) return false;
        const Point xe = along(-2.0);
        const double fe = eval(xe);
        if (fe < fr) {
          s[m] = xe;
          fs[m] = fe;
        } else {
          s[m] = xr;
          fs[m] = fr;
        }
        continue;
      }
      if (fr < fs[m - 1]) {
        s[m] = xr;
        fs[m] = fr;
        continue;
      }
      if (exhausted()) return false;
      const Point xc = fr < fs[m] ? along(-0.5) : along(0.5);
      const double fc = eval(xc);
      if (fc < std::min(fr, fs[m])) {
        s[m] = xc;
        fs[m] = fc;
        continue;
      }
      for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t k = 0; k < m; ++k) s[i][k] = s[0][k] + 0.5 * (s[i][k] - s[0][k]);
        if (exhausted()) return false;
        fs[i] = eval(s[i]);
      }
    }
  }

  SearchResult run() {
    const Point u0 = to_u(x0_);
    if (opt_.budget < 1) throw ConfigError("search budget must be at least 1");
    const double f0 = eval(u0);
    if (dims() == 0 || exhausted()) {
      result_.budget_exhausted = dims() > 0;
      result_.evaluations = static_cast<int>(result_.history.size());
      return result_;
    }

    const int m = static_cast<int>(dims());
    int n_init = opt_.initial_samples > 0 ? opt_.initial_samples : std::min(opt_.budget / 4, 10 * m);
    n_init = std::clamp(n_init, 0, opt_.budget - 1);

    std::mt19937_64 rng(opt_.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Point> design(n_init, Point(m));
    for (int k = 0; k < m; ++k) {
      std::vector<int> strata(n_init);
      std::iota(strata.begin(), strata.end(), 0);
      std::shuffle(strata.begin(), strata.end(), rng);
      for (int i = 0; i < n_init; ++i) design[i][k] = (strata[i] + unit(rng)) / n_init;
    }
    const std::vector<double> design_values = eval_batch(design);

    std::vector<std::pair<double, Point>> starts{{f0, u0}};
    for (int i = 0; i < n_init; ++i) starts.emplace_back(design_values[i], design[i]);
    std::stable_sort(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    // Coarse local searches explore; the last part of the budget polishes the incumbent.
    const int polish_at = opt_.budget - std::max(opt_.budget / 5, 1);
    std::size_t next = 0;
    double hop = 0.1;
    std::normal_distribution<double> gauss(0.0, 1.0);
    while (!exhausted()) {
      if (static_cast<int>(result_.history.size()) >= polish_at) {
        if (!nelder_mead(to_u(result_.x), result_.value, 0.01, 1e-9)) break;
        continue;
      }
      if (next < std::min<std::size_t>(starts.size(), kLocalStarts)) {
        if (!nelder_mead(starts[next].second, starts[next].first, 0.15, kCoarseTol)) break;
        ++next;
        continue;
      }
      // Starts used up: hop to perturbed copies of the incumbent with a cycling radius.
      Point start = to_u(result_.x);
      for (double& v : start) v = std::clamp(v + hop * gauss(rng), 0.0, 1.0);
      const double value = eval(start);
      if (exhausted() || !nelder_mead(start, value, hop, kCoarseTol)) break;
      hop = hop > 0.005 ? hop * 0.5 : 0.1;
    }
    result_.budget_exhausted = exhausted();
    result_.evaluations = static_cast<int>(result_.history.size());
    return result_;
  }

 private:
  const Objective& f_;
  Point x0_, lower_, upper_;
  SearchOptions opt_;
  std::vector<std::size_t> free_;
  SearchResult result_;
};

}  // namespace

SearchResult global_minimize(const Objective& f, const std::vector<double>& x0, const std::vector<double>& lower,
                             const std::vector<double>& upper, const SearchOptions& options) {
  if (x0.size() != lower.size() || x0.size() != upper.size()) throw ConfigError("search bounds do not match x0");
  for (std::size_t i = 0; i < x0.size(); ++i) {
    if (!(lower[i] <= upper[i])) throw ConfigError("search bounds: lower exceeds upper");
  }
  return Search(f, x0, lower, upper, options).run();
}

}  // namespace mca
