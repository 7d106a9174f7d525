#include "mca/channels.hpp"

namespace mca {

CueChannels reference_channels(const ReferenceTrace& trace) {
  CueChannels c;
  for (auto& ch : c) ch.reserve(trace.size());
  for (const auto& s : trace.samples) {
    for (int i = 0; i < 6; ++i) c[i].push_back(s.channel(i));
  }
  return c;
}

CueChannels achieved_channels(const std::vector<CueSample>& cues) {
  CueChannels c;
  for (auto& ch : c) ch.reserve(cues.size());
  for (const auto& cue : cues) {
    for (int i = 0; i < 3; ++i) {
      c[i].push_back(cue.specific_force(i));
      c[i + 3].push_back(cue.angular_velocity(i));
    }
  }
  return c;
}

CueChannels achieved_channels(const std::vector<PlatformState>& states) {
  std::vector<CueSample> cues;
  cues.reserve(states.size());
  for (const auto& s : states) cues.push_back(perceived_cue(s));
  return achieved_channels(cues);
}

}  // namespace mca
