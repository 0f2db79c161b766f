#include "netpe/presets.hpp"

#include "netpe/error.hpp"

#include <string>

namespace netpe::sim::presets {

OsProfile libos() {
    OsProfile p;
    p.os_req_instructions = 2000;
    p.os_reply_instructions = 1500;
    p.unwind_instructions = 1500;
    p.interrupt_overhead_instructions = 1000;
    p.async_work_rate = 0;
    p.kernel_user_copy_per_byte = 0;
    p.poll_check_instructions = 100;
    return p;
}

OsProfile linux_kernel() {
    OsProfile p;
    p.os_req_instructions = 8000;
    p.os_reply_instructions = 6000;
    p.unwind_instructions = 4000;
    p.interrupt_overhead_instructions = 4000;
    p.async_work_rate = 3000;
    p.kernel_user_copy_per_byte = 0.5;
    p.poll_check_instructions = 300;
    return p;
}

CStateModel xeon_cstates() {
    return CStateModel({{"C1", 2.0, 7.0}, {"C1E", 10.0, 5.0}, {"C3", 80.0, 3.0}, {"C7", 104.0, 1.5}});
}

LatencyAware xeon_menu_policy() { return LatencyAware{{2.0, 20.0, 211.0, 345.0}}; }

OsProfile os_profile(std::string_view name) {
    if (name == "libos") {
        return libos();
    }
    if (name == "linux") {
        return linux_kernel();
    }
    throw ConfigError("os.preset", "unknown OS preset '" + std::string(name) + "'");
}

CStateModel cstate_model(std::string_view name) {
    if (name == "xeon") {
        return xeon_cstates();
    }
    if (name == "none") {
        return CStateModel{};
    }
    throw ConfigError("cstates", "unknown c-state preset '" + std::string(name) + "'");
}

} // namespace netpe::sim::presets
