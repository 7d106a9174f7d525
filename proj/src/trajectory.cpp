#include "mca/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "mca/errors.hpp"
#include "mca/util.hpp"

namespace mca {

namespace {

constexpr double kPi = std::numbers::pi;

// Vehicle body attitude gains: pitch per unit longitudinal force (nose dives under
// braking) and roll per unit lateral force (body rolls out of the turn), rad/(m/s^2).
constexpr double kPitchGain = 0.007;
constexpr double kRollGain = 0.006;

struct Channels {
  explicit Channels(std::size_t n) : fx(n), fy(n), fz(n), wx(n), wy(n), wz(n), moving(n) {}
  std::vector<double> fx, fy, fz, wx, wy, wz, moving;
};

double raised_cosine(double x) { return 0.5 * (1.0 - std::cos(kPi * std::clamp(x, 0.0, 1.0))); }

// Trapezoid with raised-cosine flanks, 0 -> 1 -> 0.
double pulse(double t, double start, double ramp, double hold) {
  double u = t - start;
  if (u <= 0.0) return 0.0;
  if (u < ramp) return raised_cosine(u / ramp);
  u -= ramp;
  if (u < hold) return 1.0;
  u -= hold;
  if (u < ramp) return 1.0 - raised_cosine(u / ramp);
  return 0.0;
}

// Flank duration keeping the steepest per-step change of a pulse of `amplitude`
// below bound * dt / ramp_time.
double ramp_for(double amplitude, double bound, const GeneratorBounds& b) {
  return std::max(b.ramp_time, 1.1 * b.ramp_time * (kPi / 2.0) * std::abs(amplitude) / bound);
}

class SegmentWriter {
 public:
  SegmentWriter(Channels& ch, std::size_t begin, std::size_t n, double dt)
      : ch_(ch), begin_(begin), n_(n), dt_(dt) {}

  double duration() const { return static_cast<double>(n_) * dt_; }

  template <class F>
  void add(std::vector<double> Channels::*channel, F&& f) {
    auto& c = ch_.*channel;
    for (std::size_t k = 0; k < n_; ++k) c[begin_ + k] += f(static_cast<double>(k) * dt_);
  }

  void mark_moving() {
    const double edge = std::min(0.5, 0.25 * duration());
    add(&Channels::moving, [&](double t) { return pulse(t, 0.0, edge, duration() - 2.0 * edge); });
  }

 private:
  Channels& ch_;
  std::size_t begin_, n_;
  double dt_;
};

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
double random_sign(Rng& rng) { return std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0; }

// Sequential longitudinal pulses: `main` events followed by `recovery` events of opposite sign.
void longitudinal_events(SegmentWriter& w, Rng& rng, const GeneratorBounds& b, double main_lo, double main_hi,
                         double hold_lo, double hold_hi, double rec_lo, double rec_hi, double sign) {
  const double end = w.duration() - 0.3;
  double cursor = uniform(rng, 0.3, 1.0);
  while (true) {
    const double a = uniform(rng, main_lo, main_hi);
    const double hold = uniform(rng, hold_lo, hold_hi);
    const double ramp = ramp_for(a, b.force_bound, b);
    if (cursor + 2 * ramp + hold > end) break;
    w.add(&Channels::fx, [=](double t) { return sign * a * pulse(t, cursor, ramp, hold); });
    cursor += 2 * ramp + hold + uniform(rng, 0.6, 2.0);

    const double a2 = uniform(rng, rec_lo, rec_hi);
    const double hold2 = uniform(rng, 1.0, 3.0);
    const double ramp2 = ramp_for(a2, b.force_bound, b) + 0.3;
    if (cursor + 2 * ramp2 + hold2 > end) break;
    w.add(&Channels::fx, [=](double t) { return -sign * a2 * pulse(t, cursor, ramp2, hold2); });
    cursor += 2 * ramp2 + hold2 + uniform(rng, 0.8, 2.5);
  }
}

void harsh_brake_segment(SegmentWriter& w, Rng& rng, const GeneratorBounds& b) {
  longitudinal_events(w, rng, b, 5.0, b.longitudinal, 0.8, 2.5, 1.5, 3.0, -1.0);
  w.mark_moving();
}

void max_accel_segment(SegmentWriter& w, Rng& rng, const GeneratorBounds& b) {
  longitudinal_events(w, rng, b, 2.5, 4.5, 2.5, 6.0, 1.0, 2.5, 1.0);
  w.mark_moving();
}

void circle_segment(SegmentWriter& w, double speed, double yaw_rate, double ramp) {
  const double lead = std::min(0.5, 0.1 * w.duration());
  ramp = std::min(ramp, 0.3 * w.duration());
  const double hold = std::max(0.0, w.duration() - 2.0 * lead - 2.0 * ramp);
  w.add(&Channels::wz, [=](double t) { return yaw_rate * pulse(t, lead, ramp, hold); });
  w.add(&Channels::fy, [=](double t) { return speed * yaw_rate * pulse(t, lead, ramp, hold); });
}

void circle_segment(SegmentWriter& w, Rng& rng, const GeneratorBounds& b) {
  const double speed = uniform(rng, 6.0, 14.0);
  const double rate = std::min({uniform(rng, 0.2, 0.6), b.lateral / speed, b.yaw_rate}) * random_sign(rng);
  circle_segment(w, speed, rate, uniform(rng, 1.0, 2.0));
  w.mark_moving();
}

void slalom_segment(SegmentWriter& w, Rng& rng, const GeneratorBounds& b) {
  const double speed = uniform(rng, 8.0, 14.0);
  const double freq = uniform(rng, 0.25, 0.5);
  const double amp = std::min({uniform(rng, 0.3, 0.6), b.lateral / speed, b.yaw_rate}) * random_sign(rng);
  const double lead = std::min(0.3, 0.1 * w.duration());
  const double ramp = std::min(1.0, 0.3 * w.duration());
  const double hold = std::max(0.0, w.duration() - 2.0 * lead - 2.0 * ramp);
  auto yaw = [=](double t) { return amp * std::sin(2.0 * kPi * freq * (t - lead)) * pulse(t, lead, ramp, hold); };
  w.add(&Channels::wz, yaw);
  w.add(&Channels::fy, [=](double t) { return speed * yaw(t); });
  w.mark_moving();
}

// Everyday driving: gentle speed changes and curves across the speed range.
void cruise_segment(SegmentWriter& w, Rng& rng, const GeneratorBounds& b) {
  const double end = w.duration() - 0.3;
  for (double cursor = uniform(rng, 0.3, 1.5);;) {
    const double a = uniform(rng, 0.4, 1.8) * random_sign(rng);
    const double ramp = uniform(rng, 0.6, 1.2);
    const double hold = uniform(rng, 0.5, 3.0);
    if (cursor + 2 * ramp + hold > end) break;
    w.add(&Channels::fx, [=](double t) { return a * pulse(t, cursor, ramp, hold); });
    cursor += 2 * ramp + hold + uniform(rng, 0.5, 2.0);
  }
  const double speed = uniform(rng, 8.0, 25.0);
  for (double cursor = uniform(rng, 0.3, 2.0);;) {
    const double rate = std::min(uniform(rng, 0.03, 0.2), 0.5 * b.lateral / speed) * random_sign(rng);
    const double ramp = uniform(rng, 0.8, 1.5);
    const double hold = uniform(rng, 0.5, 4.0);
    if (cursor + 2 * ramp + hold > end) break;
    w.add(&Channels::wz, [=](double t) { return rate * pulse(t, cursor, ramp, hold); });
    w.add(&Channels::fy, [=](double t) { return speed * rate * pulse(t, cursor, ramp, hold); });
    cursor += 2 * ramp + hold + uniform(rng, 0.5, 3.0);
  }
  w.mark_moving();
}

enum class Segment { Idle, Brake, Accel, Circle, Slalom, Cruise };

void write_segment(Segment s, Channels& ch, std::size_t begin, std::size_t n, double dt, Rng& rng,
                   const GeneratorBounds& b) {
  SegmentWriter w(ch, begin, n, dt);
  switch (s) {
    case Segment::Idle: break;
    case Segment::Brake: harsh_brake_segment(w, rng, b); break;
    case Segment::Accel: max_accel_segment(w, rng, b); break;
    case Segment::Circle: circle_segment(w, rng, b); break;
    case Segment::Slalom: slalom_segment(w, rng, b); break;
    case Segment::Cruise: cruise_segment(w, rng, b); break;
  }
}

std::vector<double> central_difference(const std::vector<double>& x, double dt) {
  std::vector<double> d(x.size(), 0.0);
  if (x.size() < 3) return d;
  for (std::size_t k = 1; k + 1 < x.size(); ++k) d[k] = (x[k + 1] - x[k - 1]) / (2.0 * dt);
  return d;
}

// Body attitude rates and road texture on top of the maneuver channels.
void add_vehicle_response(Channels& ch, double dt, Rng& rng, const GeneratorBounds& b) {
  const std::size_t n = ch.fx.size();
  const auto dfx = central_difference(ch.fx, dt);
  const auto dfy = central_difference(ch.fy, dt);
  for (std::size_t k = 0; k < n; ++k) {
    ch.wy[k] += -kPitchGain * dfx[k];
    ch.wx[k] += kRollGain * dfy[k];
  }

  struct Texture {
    std::vector<double> Channels::*channel;
    double amplitude;
  };
  const Texture textures[] = {{&Channels::fx, 0.08}, {&Channels::fy, 0.08}, {&Channels::fz, 0.25},
                              {&Channels::wx, 0.015}, {&Channels::wy, 0.015}, {&Channels::wz, 0.01}};
  for (const auto& tex : textures) {
    double freq[3], phase[3], weight[3];
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
      freq[i] = uniform(rng, 0.4, 2.5);
      phase[i] = uniform(rng, 0.0, 2.0 * kPi);
      weight[i] = uniform(rng, 0.2, 1.0);
      total += weight[i];
    }
    auto& c = ch.*tex.channel;
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) * dt;
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += weight[i] * std::sin(2.0 * kPi * freq[i] * t + phase[i]);
      c[k] += ch.moving[k] * tex.amplitude * s / total;
    }
  }

  for (std::size_t k = 0; k < n; ++k) {
    for (auto* c : {&ch.fx, &ch.fy, &ch.fz}) (*c)[k] = std::clamp((*c)[k], -b.force_bound, b.force_bound);
    for (auto* c : {&ch.wx, &ch.wy, &ch.wz}) (*c)[k] = std::clamp((*c)[k], -b.rate_bound, b.rate_bound);
  }
}

ReferenceTrace to_trace(const Channels& ch, double dt, std::string label) {
  ReferenceTrace trace;
  trace.dt = dt;
  trace.label = std::move(label);
  trace.samples.resize(ch.fx.size());
  for (std::size_t k = 0; k < ch.fx.size(); ++k) {
    auto& s = trace.samples[k];
    s.t = static_cast<double>(k) * dt;
    s.f_ref = Vec3(ch.fx[k], ch.fy[k], ch.fz[k]);
    s.omega_ref = Vec3(ch.wx[k], ch.wy[k], ch.wz[k]);
  }
  return trace;
}

void fill_mixed(Channels& ch, double dt, Rng& rng, const GeneratorBounds& b) {
  const std::size_t n = ch.fx.size();
  const auto min_len = static_cast<std::size_t>(std::ceil(6.0 / dt));
  // Cruise is weighted up: most driving is unremarkable.
  const Segment menu[] = {Segment::Cruise, Segment::Cruise, Segment::Cruise, Segment::Brake,
                          Segment::Accel,  Segment::Circle, Segment::Slalom, Segment::Idle};
  std::uniform_int_distribution<int> pick(0, 7);
  std::size_t begin = 0;
  Segment previous = Segment::Idle;
  bool first = true;
  while (begin < n) {
    std::size_t len = sample_count(uniform(rng, 6.0, 15.0), dt);
    if (n - begin < len + min_len) len = n - begin;
    Segment s = menu[pick(rng)];
    while (s == Segment::Idle && (first || previous == Segment::Idle)) s = menu[pick(rng)];
    write_segment(s, ch, begin, len, dt, rng, b);
    previous = s;
    first = false;
    begin += len;
  }
}

}  // namespace

PreprocessSpec PreprocessSpec::identity() {
  PreprocessSpec s;
  s.clip.fill(std::numeric_limits<double>::infinity());
  return s;
}

PreprocessSpec PreprocessSpec::scaled(double gain) {
  PreprocessSpec s = identity();
  s.scale.fill(gain);
  return s;
}

std::size_t sample_count(double duration, double dt) {
  if (!(duration > 0.0) || !(dt > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
}

ReferenceTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::size_t row = 0;
  ReferenceTrace trace;
  trace.label = path.stem().string();
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line != kTraceCsvHeader)
        throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": expected header '" +
                         std::string(kTraceCsvHeader) + "'");
      continue;
    }
    ++row;
    const auto where = [&] { return path.string() + ": row " + std::to_string(row) + " (line " + std::to_string(line_no) + ")"; };
    double v[7];
    std::size_t count = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      if (count >= 7) {
        count = 8;
        break;
      }
      const auto res = std::from_chars(p, comma, v[count]);
      if (res.ec != std::errc() || res.ptr != comma)
        throw ParseError(where() + ": malformed number in column " + std::to_string(count + 1));
      ++count;
      p = comma + 1;
    }
    if (count != 7)
      throw ParseError(where() + ": expected 7 columns, found " + (count > 7 ? std::string("more") : std::to_string(count)));
    for (double x : v) {
      if (!std::isfinite(x)) throw ParseError(where() + ": non-finite value");
    }
    trace.samples.push_back({v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])});
  }
  if (!header_seen) throw ParseError(path.string() + ": missing header");

  if (trace.samples.size() >= 2) {
    trace.dt = trace.samples[1].t - trace.samples[0].t;
    if (!(trace.dt > 0.0)) throw NonUniformSampling(path.string() + ": non-increasing timestamps");
    for (std::size_t k = 1; k < trace.samples.size(); ++k) {
      const double spacing = trace.samples[k].t - trace.samples[k - 1].t;
      if (std::abs(spacing - trace.dt) > 1e-9)
        throw NonUniformSampling(path.string() + ": spacing " + format_double(spacing) + " s at sample " +
                                 std::to_string(k) + " differs from dt " + format_double(trace.dt) + " s");
    }
  }
  return trace;
}

void save_trace(const ReferenceTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace " + path.string());
  out << kTraceCsvHeader << '\n';
  for (const auto& s : trace.samples) {
    out << format_double(s.t);
    for (int i = 0; i < 6; ++i) out << ',' << format_double(s.channel(i));
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

ReferenceTrace preprocess(const ReferenceTrace& trace, const PreprocessSpec& spec) {
  for (int i = 0; i < 6; ++i) {
    if (!(spec.scale[i] > 0.0) || !(spec.clip[i] > 0.0))
      throw ConfigError("preprocess: scale and clip must be positive");
  }
  ReferenceTrace out = trace;
  for (auto& s : out.samples) {
    for (int i = 0; i < 6; ++i) {
      double& x = i < 3 ? s.f_ref(i) : s.omega_ref(i - 3);
      x = std::clamp(spec.scale[i] * x, -spec.clip[i], spec.clip[i]);
    }
  }
  return out;
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  if (name == "idle") return ScenarioKind::Idle;
  if (name == "harsh_brake") return ScenarioKind::HarshBrake;
  if (name == "max_accel") return ScenarioKind::MaxAccel;
  if (name == "circle") return ScenarioKind::Circle;
  if (name == "slalom") return ScenarioKind::Slalom;
  if (name == "mixed") return ScenarioKind::Mixed;
  throw UnknownKind("unknown scenario kind '" + name + "'");
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Idle: return "idle";
    case ScenarioKind::HarshBrake: return "harsh_brake";
    case ScenarioKind::MaxAccel: return "max_accel";
    case ScenarioKind::Circle: return "circle";
    case ScenarioKind::Slalom: return "slalom";
    case ScenarioKind::Mixed: return "mixed";
  }
  return "unknown";
}

ReferenceTrace synthesize_scenario(ScenarioKind kind, double duration, double dt, std::uint64_t seed,
                                   const GeneratorBounds& bounds) {
  if (!(duration > 0.0) || !(dt > 0.0)) throw ConfigError("synthesize_scenario: duration and dt must be positive");
  const std::size_t n = sample_count(duration, dt);
  Channels ch(n);
  Rng rng(seed);
  switch (kind) {
    case ScenarioKind::Idle: break;
    case ScenarioKind::HarshBrake: write_segment(Segment::Brake, ch, 0, n, dt, rng, bounds); break;
    case ScenarioKind::MaxAccel: write_segment(Segment::Accel, ch, 0, n, dt, rng, bounds); break;
    case ScenarioKind::Circle: write_segment(Segment::Circle, ch, 0, n, dt, rng, bounds); break;
    case ScenarioKind::Slalom: write_segment(Segment::Slalom, ch, 0, n, dt, rng, bounds); break;
    case ScenarioKind::Mixed: fill_mixed(ch, dt, rng, bounds); break;
  }
  add_vehicle_response(ch, dt, rng, bounds);
  return to_trace(ch, dt, to_string(kind) + "-" + to_hex(seed).substr(8));
}

ReferenceTrace synthesize_scenario(const std::string& kind, double duration, double dt, std::uint64_t seed,
                                   const GeneratorBounds& bounds) {
  return synthesize_scenario(parse_scenario_kind(kind), duration, dt, seed, bounds);
}

ReferenceTrace circle_maneuver(double speed, double yaw_rate, double duration, double dt,
                               const GeneratorBounds& bounds) {
  const std::size_t n = sample_count(duration, dt);
  Channels ch(n);
  SegmentWriter w(ch, 0, n, dt);
  circle_segment(w, speed, yaw_rate, std::max(1.0, bounds.ramp_time));
  return to_trace(ch, dt, "circle");
}

Datasets build_datasets(std::uint64_t seed, const DatasetLayout& layout, double dt) {
  // Split streams are kept apart by tag; the training mix covers every maneuver class.
  constexpr std::uint64_t kTrainTag = 1, kTestTag = 2, kValidationTag = 3;
  const ScenarioKind train_cycle[] = {ScenarioKind::Mixed,      ScenarioKind::HarshBrake, ScenarioKind::Mixed,
                                      ScenarioKind::MaxAccel,   ScenarioKind::Mixed,      ScenarioKind::Circle,
                                      ScenarioKind::Mixed,      ScenarioKind::Slalom,     ScenarioKind::Mixed,
                                      ScenarioKind::HarshBrake, ScenarioKind::Mixed,      ScenarioKind::Idle};
  Datasets d;
  for (int i = 0; i < layout.train_traces; ++i) {
    const ScenarioKind kind = train_cycle[i % std::size(train_cycle)];
    auto t = synthesize_scenario(kind, layout.train_duration, dt, derive_seed(seed, kTrainTag, i));
    t.label = "train_" + std::to_string(i + 1) + "_" + to_string(kind);
    d.train.push_back(std::move(t));
  }
  for (int i = 0; i < layout.test_traces; ++i) {
    auto t = synthesize_scenario(ScenarioKind::Mixed, layout.test_duration, dt, derive_seed(seed, kTestTag, i));
    t.label = "test_" + std::to_string(i + 1);
    d.test.push_back(std::move(t));
  }
  for (int i = 0; i < layout.validation_traces; ++i) {
    auto t = synthesize_scenario(ScenarioKind::Mixed, layout.validation_duration, dt,
                                 derive_seed(seed, kValidationTag, i));
    t.label = "validation_" + std::to_string(i + 1);
    d.validation.push_back(std::move(t));
  }
  return d;
}

std::uint64_t trace_hash(const ReferenceTrace& trace) {
  std::uint64_t h = fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(&trace.dt), sizeof(double)));
  for (const auto& s : trace.samples) {
    double v[7] = {s.t, s.f_ref.x(), s.f_ref.y(), s.f_ref.z(), s.omega_ref.x(), s.omega_ref.y(), s.omega_ref.z()};
    h = fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(v), sizeof v), h);
  }
  return h;
}

}  // namespace mca
