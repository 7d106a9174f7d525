#pragma once

#include <vector>

#include "mca/metrics.hpp"
#include "mca/platform.hpp"
#include "mca/trajectory.hpp"

namespace mca {

CueChannels reference_channels(const ReferenceTrace& trace);

/// Perceived cue (f^C - g level, omega^C) of each state.
CueChannels achieved_channels(const std::vector<PlatformState>& states);
CueChannels achieved_channels(const std::vector<CueSample>& cues);

}  // namespace mca
