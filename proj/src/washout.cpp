#include "mca/washout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mca/channels.hpp"
#include "mca/errors.hpp"
#include "mca/util.hpp"

namespace mca {

namespace {

using nlohmann::json;

template <class T, std::size_t N>
std::array<T, N> array_from_json(const json& j, const char* key, const std::array<T, N>& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != N)
    throw ConfigError(std::string("filter params: '") + key + "' must hold " + std::to_string(N) + " values");
  std::array<T, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = a.at(i).get<T>();
  return out;
}

}  // namespace

void FilterParams::validate() const {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  for (int i = 0; i < 3; ++i) {
    if (!positive(hp_cutoff[i]) || !positive(hp_damping[i]) || !positive(hp_break[i]) || !positive(rot_cutoff[i]))
      throw ConfigError("filter params: cutoffs and damping must be positive");
    if (hp_order[i] != 2 && hp_order[i] != 3) throw ConfigError("filter params: hp_order must be 2 or 3");
  }
  if (!positive(tilt_cutoff) || !positive(tilt_rate_limit))
    throw ConfigError("filter params: tilt cutoff and rate limit must be positive");
  for (double s : scale) {
    if (!(s > 0.0 && s <= 1.0)) throw ConfigError("filter params: scales must lie in (0, 1]");
  }
}

std::vector<double> FilterParams::to_vector() const {
  std::vector<double> v;
  v.insert(v.end(), hp_cutoff.begin(), hp_cutoff.end());
  v.insert(v.end(), hp_damping.begin(), hp_damping.end());
  v.insert(v.end(), rot_cutoff.begin(), rot_cutoff.end());
  v.push_back(tilt_cutoff);
  v.insert(v.end(), scale.begin(), scale.end());
  v.push_back(tilt_rate_limit);
  return v;
}

FilterParams FilterParams::from_vector(const std::vector<double>& v, const FilterParams& base) {
  if (v.size() != 17) throw ConfigError("filter params: expected 17 tunable values");
  FilterParams p = base;
  std::size_t k = 0;
  for (auto& x : p.hp_cutoff) x = v[k++];
  for (auto& x : p.hp_damping) x = v[k++];
  for (auto& x : p.rot_cutoff) x = v[k++];
  p.tilt_cutoff = v[k++];
  for (auto& x : p.scale) x = v[k++];
  p.tilt_rate_limit = v[k++];
  return p;
}

FilterParams load_filter_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open filter params " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  FilterParams p;
  try {
    p.hp_cutoff = array_from_json(j, "hp_cutoff", p.hp_cutoff);
    p.hp_damping = array_from_json(j, "hp_damping", p.hp_damping);
    p.hp_order = array_from_json(j, "hp_order", p.hp_order);
    p.hp_break = array_from_json(j, "hp_break", p.hp_break);
    p.rot_cutoff = array_from_json(j, "rot_cutoff", p.rot_cutoff);
    p.scale = array_from_json(j, "scale", p.scale);
    p.tilt_cutoff = j.value("tilt_cutoff", p.tilt_cutoff);
    p.tilt_rate_limit = j.value("tilt_rate_limit", p.tilt_rate_limit);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  p.validate();
  return p;
}

void save_filter_params(const FilterParams& p, const std::filesystem::path& path) {
  json j;
  j["hp_cutoff"] = p.hp_cutoff;
  j["hp_damping"] = p.hp_damping;
  j["hp_order"] = p.hp_order;
  j["hp_break"] = p.hp_break;
  j["rot_cutoff"] = p.rot_cutoff;
  j["tilt_cutoff"] = p.tilt_cutoff;
  j["scale"] = p.scale;
  j["tilt_rate_limit"] = p.tilt_rate_limit;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write filter params " + path.string());
  out << j.dump(2) << '\n';
}

FilterState make_filter_state(const FilterParams& p, double dt) {
  p.validate();
  FilterState s;
  for (int i = 0; i < 3; ++i) {
    s.hp[i] = highpass2(p.hp_cutoff[i], p.hp_damping[i], dt);
    s.hp_extra[i] = highpass1(p.hp_break[i], dt);
    s.rot[i] = highpass1(p.rot_cutoff[i], dt);
    s.order[i] = p.hp_order[i];
  }
  for (auto& f : s.tilt_lp) f = lowpass1(p.tilt_cutoff, dt);
  return s;
}

WashoutCommand filter_step(const FilterParams& p, FilterState& s, const ReferenceSample& sample, double dt,
                           const Mat3& to_inertial) {
  WashoutCommand c;
  const Vec3 scaled(p.scale[0] * sample.f_ref.x(), p.scale[1] * sample.f_ref.y(), p.scale[2] * sample.f_ref.z());
  const Vec3 inertial = to_inertial * scaled;
  for (int i = 0; i < 3; ++i) {
    double a = s.hp[i].step(inertial(i));
    if (s.order[i] == 3) a = s.hp_extra[i].step(a);
    c.acceleration(i) = a;
    c.angular_velocity(i) = s.rot[i].step(p.scale[i + 3] * sample.omega_ref(i));
  }

  // Tilting by pitch theta adds -g sin(theta) to the perceived fx; roll phi adds +g sin(phi) to fy.
  const double fx_lp = s.tilt_lp[0].step(p.scale[0] * sample.f_ref.x());
  const double fy_lp = s.tilt_lp[1].step(p.scale[1] * sample.f_ref.y());
  const double pitch = -std::asin(std::clamp(fx_lp / kGravity, -1.0, 1.0));
  const double roll = std::asin(std::clamp(fy_lp / kGravity, -1.0, 1.0));
  const double max_delta = p.tilt_rate_limit * dt;
  s.tilt_pitch += std::clamp(pitch - s.tilt_pitch, -max_delta, max_delta);
  s.tilt_roll += std::clamp(roll - s.tilt_roll, -max_delta, max_delta);
  c.tilt_pitch = s.tilt_pitch;
  c.tilt_roll = s.tilt_roll;
  return c;
}

WashoutDriver::WashoutDriver(const FilterParams& params, const Platform& platform)
    : params_(params), platform_(&platform) {
  params_.validate();
  reset();
}

void WashoutDriver::reset() {
  filters_ = make_filter_state(params_, platform_->dt());
  state_ = platform_->reset();
  home_orientation_ = state_.pose.orientation();
  hp_orientation_ = Mat3::Identity();
  velocity_ = Vec3::Zero();
  offset_ = Vec3::Zero();
}

const PlatformState& WashoutDriver::step(const ReferenceSample& sample) {
  const double dt = platform_->dt();
  const Mat3 previous = euler_to_rotation(filters_.tilt_roll, filters_.tilt_pitch, 0.0) * hp_orientation_;
  const WashoutCommand c = filter_step(params_, filters_, sample, dt, previous);
  hp_orientation_ = orthonormalize(hp_orientation_ * exp_so3(c.angular_velocity * dt));
  const Mat3 orientation = home_orientation_ * euler_to_rotation(c.tilt_roll, c.tilt_pitch, 0.0) * hp_orientation_;
  // Filtered in the home-aligned frame, so velocity and offset wash out to zero.
  velocity_ += home_orientation_ * c.acceleration * dt;
  offset_ += velocity_ * dt;
  state_ = platform_->track(state_, Pose::from_orientation(orientation, state_.r0 + offset_));
  return state_;
}

WashoutRun run_washout(const FilterParams& params, const ReferenceTrace& trace, const Platform& platform) {
  WashoutDriver driver(params, platform);
  WashoutRun run;
  run.states.reserve(trace.size());
  for (const auto& sample : trace.samples) {
    const PlatformState& s = driver.step(sample);
    run.limited_steps += s.flags.limited ? 1 : 0;
    run.ik_failed_steps += s.flags.ik_failed ? 1 : 0;
    run.states.push_back(s);
  }
  return run;
}

FilterBounds FilterBounds::defaults() {
  FilterBounds b;
  b.lower.hp_cutoff = {0.5, 0.5, 0.5};
  b.lower.hp_damping = {0.5, 0.5, 0.5};
  b.lower.rot_cutoff = {0.1, 0.1, 0.1};
  b.lower.tilt_cutoff = 0.3;
  b.lower.scale = {0.05, 0.05, 0.05, 0.05, 0.05, 0.05};
  b.lower.tilt_rate_limit = 0.02;
  b.upper.hp_cutoff = {10.0, 10.0, 10.0};
  b.upper.hp_damping = {2.0, 2.0, 2.0};
  b.upper.rot_cutoff = {5.0, 5.0, 5.0};
  b.upper.tilt_cutoff = 10.0;
  b.upper.scale = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  b.upper.tilt_rate_limit = 0.5;
  return b;
}

double washout_objective(const FilterParams& params, const std::vector<ReferenceTrace>& traces,
                         const Platform& platform) {
  double total = 0.0;
  for (const auto& trace : traces) {
    const WashoutRun run = run_washout(params, trace, platform);
    total += objective(achieved_channels(run.states), reference_channels(trace));
  }
  return total;
}

TuneResult tune_filters(const FilterParams& initial, const std::vector<ReferenceTrace>& traces,
                        const FilterBounds& bounds, const Platform& platform, const TuneOptions& options) {
  initial.validate();
  if (traces.empty()) throw EmptyInput("tune_filters: no traces");
  const auto f = [&](const std::vector<double>& x) {
    return washout_objective(FilterParams::from_vector(x, initial), traces, platform);
  };
  const SearchResult r =
      global_minimize(f, initial.to_vector(), bounds.lower.to_vector(), bounds.upper.to_vector(), options.search);

  TuneResult out;
  out.params = FilterParams::from_vector(r.x, initial);
  out.objective = r.value;
  out.initial_objective = r.history.front();
  out.evaluations = r.evaluations;
  out.budget_exhausted = r.budget_exhausted;
  out.history = r.history;

  if (!options.log_path.empty()) {
    std::ofstream log(options.log_path);
    if (!log) throw IoError("cannot write tuning log " + options.log_path.string());
    log << "evaluation,objective\n";
    for (std::size_t i = 0; i < r.history.size(); ++i) log << i << ',' << format_double(r.history[i]) << '\n';
  }
  return out;
}

}  // namespace mca
