#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mca/types.hpp"

namespace mca {

/**
 * @brief One reference cue sample.
 *
 * f_ref is the specific force felt by the vehicle occupant relative to the static
 * 1 g level (a standing vehicle reads zero on every channel). omega_ref is the
 * vehicle angular velocity. Both are expressed in the vehicle (cockpit) frame:
 * x forward, y left, z up.
 */
struct ReferenceSample {
  double t = 0.0;
  Vec3 f_ref = Vec3::Zero();
  Vec3 omega_ref = Vec3::Zero();

  /// Channel i in the order fx, fy, fz, wx, wy, wz.
  double channel(int i) const { return i < 3 ? f_ref(i) : omega_ref(i - 3); }
};

struct ReferenceTrace {
  std::vector<ReferenceSample> samples;
  double dt = kControlPeriod;
  std::string label;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) * dt; }
};

/// Per-channel scaling and symmetric limiting, channel order fx, fy, fz, wx, wy, wz.
struct PreprocessSpec {
  std::array<double, 6> scale{1, 1, 1, 1, 1, 1};
  std::array<double, 6> clip{};

  static PreprocessSpec identity();
  /// Same gain on every channel, no limiting.
  static PreprocessSpec scaled(double gain);
};

/// Header of the trace CSV format.
inline constexpr const char* kTraceCsvHeader = "t,fx,fy,fz,wx,wy,wz";

/// Throws ParseError (naming the offending row) or NonUniformSampling.
ReferenceTrace load_trace(const std::filesystem::path& path);
void save_trace(const ReferenceTrace& trace, const std::filesystem::path& path);

/// clip(scale * value, +-clip) per channel.
ReferenceTrace preprocess(const ReferenceTrace& trace, const PreprocessSpec& spec);

enum class ScenarioKind { Idle, HarshBrake, MaxAccel, Circle, Slalom, Mixed };

/// Throws UnknownKind.
ScenarioKind parse_scenario_kind(const std::string& name);
std::string to_string(ScenarioKind kind);

/// Envelope of the synthetic generator ("small passenger car").
struct GeneratorBounds {
  double longitudinal = 9.0;  ///< |fx| of harsh braking (m/s^2)
  double lateral = 6.0;       ///< |fy| (m/s^2)
  double yaw_rate = 1.2;      ///< |wz| (rad/s)
  double force_bound = 10.0;  ///< hard bound on every force channel
  double rate_bound = 1.5;    ///< hard bound on every angular channel
  double ramp_time = 0.2;     ///< minimum raised-cosine ramp duration (s)
};

/// ceil(duration / dt), robust to representation error in the ratio.
std::size_t sample_count(double duration, double dt);

ReferenceTrace synthesize_scenario(ScenarioKind kind, double duration, double dt, std::uint64_t seed,
                                   const GeneratorBounds& bounds = {});
ReferenceTrace synthesize_scenario(const std::string& kind, double duration, double dt, std::uint64_t seed,
                                   const GeneratorBounds& bounds = {});

/// Steady circular driving at `speed` (m/s) and `yaw_rate` (rad/s) with smooth entry and exit.
/// No road texture; the hold phase has fy = speed * yaw_rate exactly.
ReferenceTrace circle_maneuver(double speed, double yaw_rate, double duration, double dt,
                               const GeneratorBounds& bounds = {});

struct DatasetLayout {
  int train_traces = 84;
  double train_duration = 60.0;
  int test_traces = 5;
  double test_duration = 60.0;
  int validation_traces = 15;
  double validation_duration = 51.0;
};

struct Datasets {
  std::vector<ReferenceTrace> train;
  std::vector<ReferenceTrace> test;
  std::vector<ReferenceTrace> validation;
};

Datasets build_datasets(std::uint64_t seed, const DatasetLayout& layout = {}, double dt = kControlPeriod);

/// Content hash of a trace (bit pattern of every sample and dt).
std::uint64_t trace_hash(const ReferenceTrace& trace);

}  // namespace mca
