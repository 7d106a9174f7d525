#include "mca/cueing.hpp"

#include <chrono>

#include "mca/channels.hpp"
#include "mca/errors.hpp"

namespace mca {

TickOutput tick_output(const PlatformState& s) {
  TickOutput out;
  out.cue = perceived_cue(s);
  out.pose = s.pose;
  out.euler = s.euler_w;
  out.q = s.joints.q;
  out.flagged = s.flags.limited || s.flags.ik_failed;
  return out;
}

DrlCueing::DrlCueing(MlpNetwork actor, NormalizationSpec spec, const Platform& platform)
    : actor_(std::move(actor)), spec_(std::move(spec)), platform_(&platform) {
  if (actor_.input_size() != kObservationSize || actor_.output_size() != kActionSize)
    throw ShapeMismatch("actor shape does not match the observation/action layout");
  reset();
}

void DrlCueing::reset() { state_ = platform_->reset(); }

TickOutput DrlCueing::tick(const ReferenceSample& reference) {
  const VecX mean = actor_.forward(build_observation(state_, reference, spec_));
  state_ = platform_->step(state_, scale_action(mean.cwiseMax(-1.0).cwiseMin(1.0), spec_));
  return tick_output(state_);
}

ReplayCueing::ReplayCueing(const Platform& platform) : home_(platform.reset()) {}

TickOutput ReplayCueing::tick(const ReferenceSample& reference) {
  TickOutput out = tick_output(home_);
  out.cue.specific_force = reference.f_ref;
  out.cue.angular_velocity = reference.omega_ref;
  out.flagged = false;
  return out;
}

HoldCueing::HoldCueing(const Platform& platform) : home_(platform.reset()) {}

TraceRecord run_trace(MotionCueingAlgorithm& mca, const ReferenceTrace& trace) {
  using clock = std::chrono::steady_clock;
  TraceRecord r;
  r.ticks.reserve(trace.size());
  r.tick_seconds.reserve(trace.size());
  mca.reset();
  for (const auto& sample : trace.samples) {
    const auto start = clock::now();
    r.ticks.push_back(mca.tick(sample));
    r.tick_seconds.push_back(std::chrono::duration<double>(clock::now() - start).count());
  }
  return r;
}

CueChannels achieved_channels(const TraceRecord& record) {
  std::vector<CueSample> cues;
  cues.reserve(record.ticks.size());
  for (const auto& t : record.ticks) cues.push_back(t.cue);
  return achieved_channels(cues);
}

}  // namespace mca
