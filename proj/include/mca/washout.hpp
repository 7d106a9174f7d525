#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "mca/filters.hpp"
#include "mca/global_search.hpp"
#include "mca/platform.hpp"
#include "mca/trajectory.hpp"

namespace mca {

/**
 * @brief Classical washout parameters.
 *
 * Channel order for `scale` is fx, fy, fz, wx, wy, wz. Cutoffs are in rad/s.
 */
struct FilterParams {
  std::array<double, 3> hp_cutoff{2.5, 2.5, 3.0};   ///< translational high-pass
  std::array<double, 3> hp_damping{1.0, 1.0, 1.0};
  std::array<int, 3> hp_order{2, 2, 2};             ///< 3 adds a first-order high-pass at hp_break
  std::array<double, 3> hp_break{0.3, 0.3, 0.3};
  std::array<double, 3> rot_cutoff{1.0, 1.0, 1.0};  ///< rotational first-order high-pass
  double tilt_cutoff = 2.0;                          ///< tilt-coordination first-order low-pass
  std::array<double, 6> scale{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  double tilt_rate_limit = 0.1;                      ///< rad/s

  /// Throws ConfigError.
  void validate() const;

  /// The 17 tunable values: hp_cutoff, hp_damping, rot_cutoff, tilt_cutoff, scale, tilt_rate_limit.
  std::vector<double> to_vector() const;
  static FilterParams from_vector(const std::vector<double>& v, const FilterParams& base);
};

FilterParams load_filter_params(const std::filesystem::path& path);
void save_filter_params(const FilterParams& params, const std::filesystem::path& path);

struct FilterState {
  std::array<Biquad, 3> hp;
  std::array<Biquad, 3> hp_extra;
  std::array<Biquad, 3> rot;
  std::array<Biquad, 2> tilt_lp;
  double tilt_roll = 0.0;
  double tilt_pitch = 0.0;
  std::array<int, 3> order{2, 2, 2};
};

FilterState make_filter_state(const FilterParams& params, double dt);

/// Per-sample washout output in the cockpit frame.
struct WashoutCommand {
  Vec3 acceleration = Vec3::Zero();      ///< high-passed translational acceleration, inertial frame (m/s^2)
  Vec3 angular_velocity = Vec3::Zero();  ///< high-passed angular velocity (rad/s)
  double tilt_roll = 0.0;                ///< rad
  double tilt_pitch = 0.0;               ///< rad
};

/// `to_inertial` rotates the scaled specific force into the frame it is high-passed and integrated in.
WashoutCommand filter_step(const FilterParams& params, FilterState& state, const ReferenceSample& sample, double dt,
                           const Mat3& to_inertial = Mat3::Identity());

/**
 * @brief Washout filter bank driving the platform constraint model.
 *
 * Converts filter commands to a target pose around the home pose and tracks it
 * through IK, joint limiting and FK, so the achieved motion is always feasible.
 */
class WashoutDriver {
 public:
  WashoutDriver(const FilterParams& params, const Platform& platform);

  void reset();
  const PlatformState& step(const ReferenceSample& sample);

  const PlatformState& state() const { return state_; }
  const FilterParams& params() const { return params_; }

 private:
  FilterParams params_;
  const Platform* platform_;
  FilterState filters_;
  PlatformState state_;
  Mat3 home_orientation_ = Mat3::Identity();
  Mat3 hp_orientation_ = Mat3::Identity();
  Vec3 velocity_ = Vec3::Zero();
  Vec3 offset_ = Vec3::Zero();
};

struct WashoutRun {
  std::vector<PlatformState> states;  ///< one per reference sample
  int limited_steps = 0;
  int ik_failed_steps = 0;
};

WashoutRun run_washout(const FilterParams& params, const ReferenceTrace& trace, const Platform& platform);

struct FilterBounds {
  FilterParams lower;
  FilterParams upper;

  static FilterBounds defaults();
};

struct TuneOptions {
  SearchOptions search;
  std::filesystem::path log_path;  ///< CSV of (evaluation, objective); skipped when empty
};

struct TuneResult {
  FilterParams params;
  double objective = 0.0;          ///< summed over the tuning traces
  double initial_objective = 0.0;
  int evaluations = 0;
  bool budget_exhausted = false;
  std::vector<double> history;
};

/// Objective summed over traces, each evaluated through run_washout.
double washout_objective(const FilterParams& params, const std::vector<ReferenceTrace>& traces,
                         const Platform& platform);

TuneResult tune_filters(const FilterParams& initial, const std::vector<ReferenceTrace>& traces,
                        const FilterBounds& bounds, const Platform& platform, const TuneOptions& options = {});

}  // namespace mca
