#include "netpe/sim.hpp"

#include "netpe/codec.hpp"
#include "netpe/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <sstream>

namespace netpe::sim {

CStateModel::CStateModel(std::vector<CState> states) : states_(std::move(states)) {
    for (std::size_t i = 0; i < states_.size(); ++i) {
        const auto& s = states_[i];
        if (!(std::isfinite(s.exit_latency_us) && s.exit_latency_us >= 0.0) ||
            !(std::isfinite(s.idle_power_w) && s.idle_power_w >= 0.0)) {
            throw ConfigError("cstates", "exit latency and idle power must be finite and >= 0");
        }
        if (i > 0) {
            if (!(s.exit_latency_us > states_[i - 1].exit_latency_us)) {
                throw ConfigError("cstates", "exit latencies must strictly increase");
            }
            if (!(s.idle_power_w < states_[i - 1].idle_power_w)) {
                throw ConfigError("cstates", "idle powers must strictly decrease");
            }
        }
    }
}

void OsProfile::validate() const {
    for (double v : {os_req_instructions, os_reply_instructions, unwind_instructions,
                     interrupt_overhead_instructions, async_work_rate, kernel_user_copy_per_byte,
                     poll_check_instructions}) {
        if (!(std::isfinite(v) && v >= 0.0)) {
            throw ConfigError("os", "instruction counts must be finite and >= 0");
        }
    }
}

void NicModel::validate() const {
    if (!(std::isfinite(wire_bandwidth) && wire_bandwidth > 0.0)) {
        throw ConfigError("nic.wire_bandwidth", "must be > 0");
    }
    if (mtu == 0) {
        throw ConfigError("nic.mtu", "must be > 0");
    }
    if (device_poll_batch == 0) {
        throw ConfigError("nic.device_poll_batch", "must be >= 1");
    }
}

void WorkloadSpec::validate() const {
    if (const auto* open = std::get_if<OpenLoop>(&kind)) {
        if (!(std::isfinite(open->lambda) && open->lambda > 0.0)) {
            throw ConfigError("workload.lambda", "must be > 0");
        }
    } else {
        const auto& closed = std::get<ClosedLoop>(kind);
        if (closed.iterations == 0) {
            throw ConfigError("workload.iterations", "must be >= 1");
        }
        if (!(std::isfinite(closed.client_think_us) && closed.client_think_us >= 0.0)) {
            throw ConfigError("workload.client_think_us", "must be >= 0");
        }
    }
    if (request_size == 0 || reply_size == 0) {
        throw ConfigError("workload", "request and reply sizes must be >= 1 byte");
    }
    if (!(std::isfinite(app_instructions) && app_instructions >= 0.0)) {
        throw ConfigError("workload.app_instructions", "must be >= 0");
    }
}

void SimConfig::validate() const {
    try {
        exponents.validate();
        power.validate();
    } catch (const DomainError& e) {
        throw ConfigError("sim", e.what());
    }
    if (!(std::isfinite(base_ips) && base_ips > 0.0)) {
        throw ConfigError("sim.base_ips", "must be > 0");
    }
    if (!(std::isfinite(base_cycle_hz) && base_cycle_hz > 0.0)) {
        throw ConfigError("sim.base_cycle_hz", "must be > 0");
    }
    if (const auto* h = std::get_if<HybridDetection>(&detection); h && h->poll_budget == 0) {
        throw ConfigError("sim.detection.poll_budget", "must be >= 1");
    }
    if (const auto* la = std::get_if<LatencyAware>(&idle)) {
        if (la->thresholds_us.size() != cstates.size()) {
            throw ConfigError("sim.idle.thresholds_us", "need one threshold per c-state");
        }
    }
    nic.validate();
    os.validate();
    if (stop.requests.has_value() == stop.duration_us.has_value()) {
        throw ConfigError("sim.stop", "set exactly one of requests / duration_us");
    }
    if (stop.requests && *stop.requests == 0) {
        throw ConfigError("sim.stop.requests", "must be >= 1");
    }
    if (stop.duration_us && !(std::isfinite(*stop.duration_us) && *stop.duration_us > 0.0)) {
        throw ConfigError("sim.stop.duration_us", "must be > 0");
    }
}

double itr_gate(double event_time_us, std::optional<double> last_irq_time_us, ItrSetting itr) {
    if (itr.ticks == 0 || !last_irq_time_us) {
        return event_time_us;
    }
    return std::max(event_time_us, *last_irq_time_us + itr.delay_us());
}

double instruction_time_us(double instructions, double base_ips, DvfsSetting delta, double alpha) {
    if (!(base_ips > 0.0)) {
        throw DomainError("base_ips must be > 0");
    }
    if (!(alpha > -1.0)) {
        throw DomainError("alpha must be > -1");
    }
    if (instructions == 0.0) {
        return 0.0;
    }
    return instructions * 1e6 / (base_ips * std::pow(delta.value(), 1.0 + alpha));
}

std::uint64_t packetize(std::uint64_t bytes, std::uint32_t mtu) {
    if (mtu == 0) {
        throw DomainError("mtu must be > 0");
    }
    return (bytes + mtu - 1) / mtu;
}

double wire_time_us(std::uint64_t bytes, double bandwidth_bytes_per_us) {
    if (!(bandwidth_bytes_per_us > 0.0)) {
        throw DomainError("bandwidth must be > 0");
    }
    return static_cast<double>(bytes) / bandwidth_bytes_per_us;
}

std::uint64_t overload_threshold(double lambda) {
    const double per_interval = lambda * trace::kSampleCadenceUs * 1e-6;
    return std::max<std::uint64_t>(64, static_cast<std::uint64_t>(std::ceil(10.0 * per_interval)));
}

double tail_latency(std::span<const double> latencies_us, double percentile) {
    if (latencies_us.empty()) {
        throw DomainError("tail_latency of an empty list");
    }
    if (!(percentile > 0.0 && percentile <= 100.0)) {
        throw DomainError("percentile must lie in (0, 100]");
    }
    std::vector<double> sorted(latencies_us.begin(), latencies_us.end());
    const auto n = sorted.size();
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                     sorted.end());
    return sorted[rank - 1];
}

double energy_time_product(const SimResult& result) {
    if (result.kind != WorkloadKind::Closed) {
        throw DomainError("energy-time product is defined for closed-loop runs only");
    }
    return result.total_energy_j * result.simulated_us * 1e-6;
}

double energy_from_residencies(const SimConfig& config, const SimResult& result) {
    const double work = model::work_power(config.power, config.dvfs, config.exponents.beta);
    const double detect = model::detect_power(config.power, config.dvfs, config.exponents.beta);
    double joules = (result.busy_us + result.poll_spin_us) * work + result.detect_us * detect +
                    result.awake_idle_us * config.power.p_quiescent;
    for (std::size_t i = 0; i < result.sleep_residency_us.size(); ++i) {
        joules += result.sleep_residency_us[i] * config.cstates[i].idle_power_w;
    }
    return joules * 1e-6;
}

namespace {

enum class Regime { Busy, DetectExit, DetectWork, PollSpin, AwakeIdle, Sleep };

struct Packet {
    double land_us;
    std::uint32_t bytes;
    std::uint64_t request;
    bool last;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// Uniform double in [0, 1) from the top 53 bits.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

class Engine {
public:
    Engine(const SimConfig& config, const WorkloadSpec& workload)
        : cfg_(config), wl_(workload), rng_(config.seed) {
        const double speed = std::pow(cfg_.dvfs.value(), 1.0 + cfg_.exponents.alpha);
        ips_per_us_ = cfg_.base_ips * speed * 1e-6;
        cycles_per_us_ = cfg_.base_cycle_hz * cfg_.dvfs.value() * 1e-6;
        p_work_ = model::work_power(cfg_.power, cfg_.dvfs, cfg_.exponents.beta);
        p_detect_ = model::detect_power(cfg_.power, cfg_.dvfs, cfg_.exponents.beta);
        poll_iteration_us_ = instr_time(cfg_.os.poll_check_instructions);

        const std::size_t ncs = cfg_.cstates.size();
        res_.kind = wl_.workload_kind();
        res_.sleep_residency_us.assign(ncs, 0.0);
        res_.sleep_entries.assign(ncs, 0);
        since_irq_.sleep_entries.assign(ncs, 0);
        since_irq_.sleep_residency_us.assign(ncs, 0.0);

        if (const auto* open = std::get_if<OpenLoop>(&wl_.kind)) {
            interarrival_us_ = 1e6 / open->lambda;
            threshold_ = overload_threshold(open->lambda);
            if (cfg_.stop.requests) {
                limit_ = *cfg_.stop.requests;
            } else {
                limit_ = std::numeric_limits<std::uint64_t>::max();
                horizon_ = *cfg_.stop.duration_us;
            }
            next_arrival_ = first_arrival();
        } else {
            const auto& closed = std::get<ClosedLoop>(wl_.kind);
            limit_ = closed.iterations;
            push_request(0.0);
        }

        if (cfg_.record_trace) {
            trace_.emplace();
            trace_->header.config_digest = codec::config_digest(cfg_, wl_);
            trace_->header.seed = cfg_.seed;
            trace_->header.itr_ticks = cfg_.nic.itr.ticks;
            for (const auto& s : cfg_.cstates.states()) {
                trace_->header.cstate_names.push_back(s.name);
            }
        }
    }

    SimResult run() {
        if (std::holds_alternative<PollDetection>(cfg_.detection)) {
            run_poll();
        } else {
            run_interrupt_driven();
        }
        finish();
        return std::move(res_);
    }

private:
    // ---- time and energy accounting -------------------------------------

    double instr_time(double instructions) const {
        return instructions == 0.0 ? 0.0 : instructions / ips_per_us_;
    }

    double power_of(Regime r, std::size_t state) const {
        switch (r) {
        case Regime::Busy:
        case Regime::PollSpin:
            return p_work_;
        case Regime::DetectExit:
        case Regime::DetectWork:
            return p_detect_;
        case Regime::AwakeIdle:
            return cfg_.power.p_quiescent;
        case Regime::Sleep:
            return cfg_.cstates[state].idle_power_w;
        }
        return 0.0;
    }

    // Books [now_, t_end) to regime `r`. `instructions` is the retired count
    // for Busy/DetectWork; PollSpin retires at the core's rate.
    void advance(double t_end, Regime r, std::size_t state = 0, double instructions = 0.0) {
        if (!(t_end > now_)) {
            return;
        }
        const double power = power_of(r, state);
        const double total_dt = t_end - now_;
        const bool retires = r == Regime::Busy || r == Regime::DetectWork || r == Regime::PollSpin;
        const double instr_rate =
            r == Regime::PollSpin ? ips_per_us_ : (retires ? instructions / total_dt : 0.0);

        while (now_ < t_end) {
            const double piece_end = std::min(t_end, next_sample_);
            const double dt = piece_end - now_;
            const double joules = power * dt * 1e-6;
            book(r, state, dt, joules);
            sample_joules_ += joules;
            if (retires) {
                sample_instructions_ += instr_rate * dt;
                sample_cycles_ += cycles_per_us_ * dt;
                res_.instructions += instr_rate * dt;
            }
            now_ = piece_end;
            if (now_ == next_sample_) {
                emit_sample();
                next_sample_ += trace::kSampleCadenceUs;
            }
        }
    }

    void book(Regime r, std::size_t state, double dt, double joules) {
        res_.total_energy_j += joules;
        since_irq_.joules_since_last += joules;
        switch (r) {
        case Regime::Busy:
            res_.busy_us += dt;
            res_.busy_energy_j += joules;
            break;
        case Regime::DetectExit:
        case Regime::DetectWork:
            res_.detect_us += dt;
            res_.detect_energy_j += joules;
            break;
        case Regime::PollSpin:
            res_.poll_spin_us += dt;
            res_.poll_spin_energy_j += joules;
            break;
        case Regime::AwakeIdle:
            res_.awake_idle_us += dt;
            res_.awake_idle_energy_j += joules;
            break;
        case Regime::Sleep:
            res_.sleep_residency_us[state] += dt;
            since_irq_.sleep_residency_us[state] += dt;
            res_.sleep_energy_j += joules;
            break;
        }
    }

    void emit_sample() {
        if (trace_) {
            trace_->records.push_back(trace::PeriodicSample{next_sample_, sample_instructions_,
                                                            sample_cycles_, 0.0, sample_joules_});
        }
        sample_instructions_ = 0.0;
        sample_cycles_ = 0.0;
        sample_joules_ = 0.0;
    }

    void busy(double instructions) {
        if (instructions > 0.0) {
            advance(now_ + instr_time(instructions), Regime::Busy, 0, instructions);
        }
    }

    // ---- arrivals -------------------------------------------------------

    double first_arrival() {
        const auto& open = std::get<OpenLoop>(wl_.kind);
        return open.arrivals == ArrivalProcess::Deterministic ? 0.0 : exponential_gap();
    }

    double exponential_gap() { return -std::log1p(-unit_uniform(rng_)) * interarrival_us_; }

    bool open_has_more() const {
        if (generated_ >= limit_) {
            return false;
        }
        return !horizon_ || next_arrival_ < *horizon_;
    }

    void generate_next() {
        push_request(next_arrival_);
        const auto& open = std::get<OpenLoop>(wl_.kind);
        if (open.arrivals == ArrivalProcess::Deterministic) {
            next_arrival_ = static_cast<double>(generated_) * interarrival_us_;
        } else {
            next_arrival_ += exponential_gap();
        }
    }

    // Request packets are serialized on the wire behind earlier traffic.
    void push_request(double send_time) {
        const std::uint64_t id = generated_++;
        std::uint64_t remaining = wl_.request_size;
        double t = std::max(send_time, rx_wire_free_);
        while (remaining > 0) {
            const auto bytes = static_cast<std::uint32_t>(
                std::min<std::uint64_t>(remaining, cfg_.nic.mtu));
            remaining -= bytes;
            t += wire_time_us(bytes, cfg_.nic.wire_bandwidth);
            rx_.push_back(Packet{t, bytes, id, remaining == 0});
        }
        rx_wire_free_ = t;
    }

    // Makes every packet that lands by `t`, plus the next future one, visible.
    void ensure_generated(double t) {
        if (!std::holds_alternative<OpenLoop>(wl_.kind)) {
            return;
        }
        while (open_has_more() && (next_arrival_ <= t || rx_.empty())) {
            generate_next();
        }
    }

    bool available() {
        ensure_generated(now_);
        return !rx_.empty() && rx_.front().land_us <= now_;
    }

    void check_overload() {
        if (!threshold_ || rx_.empty() || rx_.front().land_us > now_) {
            return;
        }
        auto it = std::upper_bound(rx_.begin(), rx_.end(), now_,
                                   [](double t, const Packet& p) { return t < p.land_us; });
        const Packet& last_landed = *(it - 1);
        const std::uint64_t pending = last_landed.request - rx_.front().request + 1;
        if (pending > *threshold_) {
            std::ostringstream msg;
            msg << "open-loop demand exceeds service capacity: " << pending
                << " requests pending at t=" << now_ << " us (threshold " << *threshold_ << ")";
            throw OverloadError(msg.str());
        }
    }

    // ---- processing -----------------------------------------------------

    // One device check: consume up to `batch` landed packets, running each
    // completed request through OS, application, reply and unwind.
    std::uint32_t invocation(std::uint32_t batch) {
        ensure_generated(now_);
        check_overload();
        std::uint32_t consumed = 0;
        while (consumed < batch && available()) {
            const Packet pkt = rx_.front();
            rx_.pop_front();
            ++consumed;
            since_irq_.rx_bytes += pkt.bytes;
            since_irq_.rx_descriptors += 1;
            busy(cfg_.os.kernel_user_copy_per_byte * pkt.bytes);
            if (pkt.last) {
                process_request(pkt);
            }
        }
        return consumed;
    }

    void process_request(const Packet& last_packet) {
        if (prev_request_land_) {
            predicted_idle_us_ = last_packet.land_us - *prev_request_land_;
        }
        prev_request_land_ = last_packet.land_us;
        if (requests_in_episode_ > 0) {
            ++res_.requests_without_interrupt;
        }
        ++requests_in_episode_;

        const auto& os = cfg_.os;
        busy(os.os_req_instructions + wl_.app_instructions + os.async_work_rate +
             os.os_reply_instructions +
             os.kernel_user_copy_per_byte * static_cast<double>(wl_.reply_size));
        res_.latencies_us.push_back(now_ - last_packet.land_us);
        ++res_.requests_completed;

        const double tx_start = std::max(now_, tx_wire_free_);
        tx_wire_free_ = tx_start + wire_time_us(wl_.reply_size, cfg_.nic.wire_bandwidth);
        since_irq_.tx_bytes += wl_.reply_size;
        since_irq_.tx_descriptors += packetize(wl_.reply_size, cfg_.nic.mtu);
        if (const auto* closed = std::get_if<ClosedLoop>(&wl_.kind)) {
            client_done_ = tx_wire_free_;
            if (generated_ < closed->iterations) {
                push_request(tx_wire_free_ + closed->client_think_us);
            }
        }
        busy(os.unwind_instructions);
    }

    void idle_until(double t) {
        if (!(t > now_)) {
            return;
        }
        if (std::holds_alternative<PollIdle>(cfg_.idle) ||
            std::holds_alternative<PollDetection>(cfg_.detection)) {
            advance(t, Regime::PollSpin);
            return;
        }
        const std::optional<std::size_t> state = choose_state();
        if (!state) {
            advance(t, Regime::AwakeIdle);
            return;
        }
        sleeping_ = state;
        ++res_.sleep_entries[*state];
        ++since_irq_.sleep_entries[*state];
        advance(t, Regime::Sleep, *state);
    }

    std::optional<std::size_t> choose_state() const {
        const std::size_t n = cfg_.cstates.size();
        if (n == 0) {
            return std::nullopt;
        }
        if (const auto* la = std::get_if<LatencyAware>(&cfg_.idle)) {
            for (std::size_t i = n; i-- > 0;) {
                if (la->thresholds_us[i] <= predicted_idle_us_) {
                    return i;
                }
            }
            return std::nullopt;
        }
        return n - 1;
    }

    void take_interrupt(double at) {
        ++res_.interrupt_count;
        last_irq_ = at;
        since_irq_.timestamp_us = at;
        if (trace_) {
            trace_->records.push_back(since_irq_);
        }
        reset_since_irq();
        requests_in_episode_ = 0;
        if (sleeping_) {
            advance(now_ + cfg_.cstates[*sleeping_].exit_latency_us, Regime::DetectExit);
            sleeping_.reset();
        }
        const double overhead = cfg_.os.interrupt_overhead_instructions;
        if (overhead > 0.0) {
            advance(now_ + instr_time(overhead), Regime::DetectWork, 0, overhead);
        }
    }

    void reset_since_irq() {
        since_irq_.rx_bytes = since_irq_.tx_bytes = 0;
        since_irq_.rx_descriptors = since_irq_.tx_descriptors = 0;
        std::fill(since_irq_.sleep_entries.begin(), since_irq_.sleep_entries.end(), 0);
        std::fill(since_irq_.sleep_residency_us.begin(), since_irq_.sleep_residency_us.end(), 0.0);
        since_irq_.joules_since_last = 0.0;
    }

    void run_interrupt_driven() {
        const auto* hybrid = std::get_if<HybridDetection>(&cfg_.detection);
        while (true) {
            ensure_generated(now_);
            if (rx_.empty()) {
                break;
            }
            const double event = std::max(now_, rx_.front().land_us);
            const double at = itr_gate(event, last_irq_, cfg_.nic.itr);
            idle_until(at);
            take_interrupt(at);
            if (hybrid) {
                do {
                    invocation(hybrid->poll_budget);
                } while (available());
            } else {
                invocation(cfg_.nic.device_poll_batch);
            }
        }
    }

    void run_poll() {
        double anchor = now_;
        while (true) {
            ensure_generated(now_);
            if (rx_.empty()) {
                break;
            }
            const double land = rx_.front().land_us;
            double detect = now_;
            if (land > now_) {
                const double l = poll_iteration_us_;
                if (l > 0.0) {
                    detect = anchor + std::ceil((land - anchor) / l) * l;
                    if (detect < land) {
                        detect += l;
                    }
                } else {
                    detect = land;
                }
            }
            advance(detect, Regime::PollSpin);
            requests_in_episode_ = 0;
            invocation(cfg_.nic.device_poll_batch);
            anchor = now_;
        }
    }

    void finish() {
        double end = now_;
        if (horizon_) {
            end = std::max(end, *horizon_);
        } else if (std::holds_alternative<OpenLoop>(wl_.kind)) {
            // Request-count stop: the span covers the interval that the last
            // request opens, up to the next arrival instant.
            end = std::max(end, next_arrival_);
        } else {
            end = std::max(end, client_done_);
        }
        idle_until(end);
        res_.simulated_us = now_;
        if (trace_) {
            since_irq_.timestamp_us = now_;
            trace_->records.push_back(trace::EndRecord{
                since_irq_, trace::PeriodicSample{now_, sample_instructions_, sample_cycles_, 0.0,
                                                  sample_joules_}});
            res_.trace = std::move(trace_);
        }
    }

    const SimConfig& cfg_;
    const WorkloadSpec& wl_;
    std::mt19937_64 rng_;

    double ips_per_us_ = 0.0;
    double cycles_per_us_ = 0.0;
    double p_work_ = 0.0;
    double p_detect_ = 0.0;
    double poll_iteration_us_ = 0.0;

    double now_ = 0.0;
    std::deque<Packet> rx_;
    double rx_wire_free_ = 0.0;
    double tx_wire_free_ = 0.0;
    std::optional<double> last_irq_;
    std::optional<std::size_t> sleeping_;
    std::uint32_t requests_in_episode_ = 0;

    std::uint64_t generated_ = 0;
    std::uint64_t limit_ = 0;
    double next_arrival_ = 0.0;
    double interarrival_us_ = 0.0;
    std::optional<double> horizon_;
    std::optional<std::uint64_t> threshold_;
    double client_done_ = 0.0;

    std::optional<double> prev_request_land_;
    double predicted_idle_us_ = kInf;

    double next_sample_ = trace::kSampleCadenceUs;
    double sample_instructions_ = 0.0;
    double sample_cycles_ = 0.0;
    double sample_joules_ = 0.0;
    trace::InterruptRecord since_irq_;

    SimResult res_;
    std::optional<trace::TraceStream> trace_;
};

} // namespace

SimResult simulate(const SimConfig& config, const WorkloadSpec& workload) {
    config.validate();
    workload.validate();
    Engine engine(config, workload);
    return engine.run();
}

} // namespace netpe::sim
