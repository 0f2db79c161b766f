#pragma once

/// @file presets.hpp
/// @brief Named parameter presets. The numbers are documented modeling
/// assumptions (path lengths, c-state tables), not measurements.

#include "netpe/sim.hpp"

#include <string_view>

namespace netpe::sim::presets {

/// Run-to-completion library OS: short paths, no kernel/user copy, no
/// interleaved background work.
OsProfile libos();

/// General-purpose kernel: longer request/reply paths, heavier interrupt
/// entry, a copy between kernel and user space, background work.
OsProfile linux_kernel();

/// Four-state table shaped like a server part's C1/C1E/C3/C7 (exit latency
/// 2/10/80/104 µs).
CStateModel xeon_cstates();

/// Target residencies matching xeon_cstates(), for LatencyAware.
LatencyAware xeon_menu_policy();

/// @throws ConfigError for unknown names ("libos", "linux").
OsProfile os_profile(std::string_view name);
/// @throws ConfigError for unknown names ("xeon", "none").
CStateModel cstate_model(std::string_view name);

} // namespace netpe::sim::presets
