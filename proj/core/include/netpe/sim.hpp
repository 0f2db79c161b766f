#pragma once

/// @file sim.hpp
/// @brief Single-core discrete-event simulator of the network request
/// timeline: NIC arrival, interrupt throttling, detection, OS and
/// application processing, asynchronous reply, unwind and idle policy.
///
/// Times are microseconds unless a name says otherwise. A run is
/// single-threaded and fully determined by (SimConfig, WorkloadSpec).

#include "netpe/model.hpp"
#include "netpe/trace.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace netpe::sim {

using model::DvfsSetting;
using model::PowerModel;
using model::ScalingExponents;

/// NIC interrupt-throttle register; minimum spacing is 2 µs per tick.
struct ItrSetting {
    std::uint32_t ticks = 0;

    double delay_us() const noexcept { return 2.0 * static_cast<double>(ticks); }

    friend bool operator==(ItrSetting, ItrSetting) = default;
    friend auto operator<=>(ItrSetting, ItrSetting) = default;
};

struct CState {
    std::string name;
    double exit_latency_us = 0.0;
    double idle_power_w = 0.0;

    friend bool operator==(const CState&, const CState&) = default;
};

/// Sleep states ordered shallow to deep. An empty model means the core idles
/// awake at `PowerModel::p_quiescent` with no wake-up latency.
class CStateModel {
public:
    CStateModel() = default;
    /// @throws ConfigError unless exit latencies strictly increase and idle
    /// powers strictly decrease.
    explicit CStateModel(std::vector<CState> states);

    const std::vector<CState>& states() const noexcept { return states_; }
    std::size_t size() const noexcept { return states_.size(); }
    bool empty() const noexcept { return states_.empty(); }
    const CState& operator[](std::size_t i) const { return states_.at(i); }

    friend bool operator==(const CStateModel&, const CStateModel&) = default;

private:
    std::vector<CState> states_;
};

struct AlwaysDeepest {
    friend bool operator==(AlwaysDeepest, AlwaysDeepest) = default;
};
/// Picks the deepest state whose threshold does not exceed the predicted idle
/// time (the last request interarrival gap); stays awake if none qualifies.
struct LatencyAware {
    std::vector<double> thresholds_us;  ///< one per c-state
    friend bool operator==(const LatencyAware&, const LatencyAware&) = default;
};
/// Spin instead of sleeping.
struct PollIdle {
    friend bool operator==(PollIdle, PollIdle) = default;
};
using IdlePolicy = std::variant<AlwaysDeepest, LatencyAware, PollIdle>;

struct InterruptDetection {
    friend bool operator==(InterruptDetection, InterruptDetection) = default;
};
/// NAPI-style: after an interrupt, poll rounds of up to `poll_budget` packets
/// continue without re-arming while packets remain.
struct HybridDetection {
    std::uint32_t poll_budget = 64;
    friend bool operator==(HybridDetection, HybridDetection) = default;
};
/// Busy-poll the device; never sleeps, never takes an interrupt.
struct PollDetection {
    friend bool operator==(PollDetection, PollDetection) = default;
};
using DetectionMode = std::variant<InterruptDetection, HybridDetection, PollDetection>;

/// OS path lengths, in instructions.
struct OsProfile {
    double os_req_instructions = 0.0;
    double os_reply_instructions = 0.0;
    double unwind_instructions = 0.0;
    double interrupt_overhead_instructions = 0.0;
    double async_work_rate = 0.0;             ///< background instructions per request
    double kernel_user_copy_per_byte = 0.0;   ///< 0 for a library OS
    double poll_check_instructions = 0.0;     ///< one device-poll loop iteration

    void validate() const;

    friend bool operator==(const OsProfile&, const OsProfile&) = default;
};

struct NicModel {
    double wire_bandwidth = 1250.0;  ///< bytes per µs (10 GbE)
    std::uint32_t mtu = 1500;
    ItrSetting itr{};
    std::uint32_t device_poll_batch = 64;

    void validate() const;

    friend bool operator==(const NicModel&, const NicModel&) = default;
};

enum class ArrivalProcess { Deterministic, Poisson };

struct OpenLoop {
    double lambda = 1000.0;  ///< requests per second
    ArrivalProcess arrivals = ArrivalProcess::Poisson;
    friend bool operator==(const OpenLoop&, const OpenLoop&) = default;
};

struct ClosedLoop {
    std::uint64_t iterations = 1000;
    double client_think_us = 0.0;
    friend bool operator==(const ClosedLoop&, const ClosedLoop&) = default;
};

enum class WorkloadKind { Open, Closed };

struct WorkloadSpec {
    std::variant<OpenLoop, ClosedLoop> kind = OpenLoop{};
    std::uint64_t request_size = 64;
    std::uint64_t reply_size = 64;
    double app_instructions = 0.0;

    WorkloadKind workload_kind() const noexcept {
        return std::holds_alternative<OpenLoop>(kind) ? WorkloadKind::Open : WorkloadKind::Closed;
    }
    void validate() const;

    friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

/// Open-loop stop condition: a request count or a simulated duration.
/// Closed-loop runs stop after the workload's iteration count.
struct StopCondition {
    std::optional<std::uint64_t> requests = 10000;
    std::optional<double> duration_us;

    friend bool operator==(const StopCondition&, const StopCondition&) = default;
};

struct SimConfig {
    std::uint64_t seed = 1;
    DvfsSetting dvfs{1.0};
    ScalingExponents exponents{};
    PowerModel power{};
    double base_ips = 2.9e9;       ///< instructions per second at Δ = 1
    double base_cycle_hz = 2.9e9;  ///< cycles per second at Δ = 1
    DetectionMode detection = InterruptDetection{};
    IdlePolicy idle = AlwaysDeepest{};
    CStateModel cstates{};
    NicModel nic{};
    OsProfile os{};
    StopCondition stop{};
    bool record_trace = false;

    void validate() const;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct SimResult {
    WorkloadKind kind = WorkloadKind::Open;
    std::vector<double> latencies_us;  ///< NIC arrival → reply handed to NIC, per request
    double total_energy_j = 0.0;
    std::uint64_t interrupt_count = 0;
    std::uint64_t requests_completed = 0;
    double simulated_us = 0.0;
    double instructions = 0.0;

    // Residencies, in µs; they sum to simulated_us.
    double busy_us = 0.0;
    double detect_us = 0.0;
    double poll_spin_us = 0.0;
    double awake_idle_us = 0.0;
    std::vector<double> sleep_residency_us;
    std::vector<std::uint64_t> sleep_entries;

    // Energy split by regime; they sum to total_energy_j.
    double busy_energy_j = 0.0;
    double detect_energy_j = 0.0;
    double poll_spin_energy_j = 0.0;
    double awake_idle_energy_j = 0.0;
    double sleep_energy_j = 0.0;

    // Requests whose last packet was consumed by a device check without a
    // fresh interrupt (the slow-to-stay-busy effect).
    std::uint64_t requests_without_interrupt = 0;

    std::optional<trace::TraceStream> trace;
};

/// Interrupt assertion time for an event. With no prior interrupt or zero
/// ticks the interrupt is immediate.
double itr_gate(double event_time_us, std::optional<double> last_irq_time_us, ItrSetting itr);

/// `instructions / (base_ips · Δ^(1+α))`, in µs.
double instruction_time_us(double instructions, double base_ips, DvfsSetting delta, double alpha);

std::uint64_t packetize(std::uint64_t bytes, std::uint32_t mtu);
double wire_time_us(std::uint64_t bytes, double bandwidth_bytes_per_us);

/// Pending-request count above which an open-loop run aborts with
/// OverloadError: ten times the mean arrivals per 1 ms sampling interval,
/// but never fewer than 64.
std::uint64_t overload_threshold(double lambda);

/// Runs one simulation. Throws OverloadError when open-loop demand outruns
/// the core.
SimResult simulate(const SimConfig& config, const WorkloadSpec& workload);

/// Nearest-rank percentile: element ceil(p/100 · n) of the sorted list.
double tail_latency(std::span<const double> latencies_us, double percentile);

/// Closed-loop efficiency metric: total energy (J) × simulated time (s).
double energy_time_product(const SimResult& result);

/// Σ regime power × residency using the configured powers; an independent
/// recomputation of total energy.
double energy_from_residencies(const SimConfig& config, const SimResult& result);

} // namespace netpe::sim
