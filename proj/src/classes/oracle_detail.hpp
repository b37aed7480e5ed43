#pragma once

#include "optisynth/classes.hpp"

namespace optisynth::detail {

/// Maximum source-to-sink flow by shortest augmenting paths.
double max_flow_value(const FlowNetwork &net);

} // namespace optisynth::detail
