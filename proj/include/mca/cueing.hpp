#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "mca/metrics.hpp"
#include "mca/platform.hpp"
#include "mca/policy.hpp"
#include "mca/trajectory.hpp"
#include "mca/washout.hpp"

namespace mca {

struct TickOutput {
  CueSample cue;
  Pose pose;
  Vec3 euler = Vec3::Zero();
  JointVector q = JointVector::Zero();
  bool flagged = false;  ///< limiter engaged or IK failed on this tick
};

/// One reference sample in, one feasible platform command out, once per control period.
class MotionCueingAlgorithm {
 public:
  virtual ~MotionCueingAlgorithm() = default;
  virtual std::string name() const = 0;
  virtual void reset() = 0;
  virtual TickOutput tick(const ReferenceSample& reference) = 0;
};

TickOutput tick_output(const PlatformState& state);

/// Deterministic policy (actor mean) closing the loop through the platform model.
class DrlCueing : public MotionCueingAlgorithm {
 public:
  DrlCueing(MlpNetwork actor, NormalizationSpec spec, const Platform& platform);

  std::string name() const override { return "DRL"; }
  void reset() override;
  TickOutput tick(const ReferenceSample& reference) override;

  const PlatformState& state() const { return state_; }

 private:
  MlpNetwork actor_;
  NormalizationSpec spec_;
  const Platform* platform_;
  PlatformState state_;
};

class WashoutCueing : public MotionCueingAlgorithm {
 public:
  WashoutCueing(const FilterParams& params, const Platform& platform) : driver_(params, platform) {}

  std::string name() const override { return "CW"; }
  void reset() override { driver_.reset(); }
  TickOutput tick(const ReferenceSample& reference) override { return tick_output(driver_.step(reference)); }

 private:
  WashoutDriver driver_;
};

/// Unconstrained oracle that reproduces the reference cue exactly.
class ReplayCueing : public MotionCueingAlgorithm {
 public:
  explicit ReplayCueing(const Platform& platform);

  std::string name() const override { return "oracle"; }
  void reset() override {}
  TickOutput tick(const ReferenceSample& reference) override;

 private:
  PlatformState home_;
};

/// Platform held at home: the zero-motion baseline.
class HoldCueing : public MotionCueingAlgorithm {
 public:
  explicit HoldCueing(const Platform& platform);

  std::string name() const override { return "zero-motion"; }
  void reset() override {}
  TickOutput tick(const ReferenceSample&) override { return tick_output(home_); }

 private:
  PlatformState home_;
};

struct TraceRecord {
  std::vector<TickOutput> ticks;
  std::vector<double> tick_seconds;
};

/// Runs the algorithm over one trace from a fresh reset.
TraceRecord run_trace(MotionCueingAlgorithm& mca, const ReferenceTrace& trace);

CueChannels achieved_channels(const TraceRecord& record);

}  // namespace mca
