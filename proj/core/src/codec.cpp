#include "netpe/codec.hpp"

#include "netpe/error.hpp"
#include "netpe/presets.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace netpe::codec {

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

const char* type_name(const json& j) { return j.type_name(); }

/// Reads fields of one JSON object and rejects anything left unread.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(path_, std::string("expected object, got ") + type_name(j_));
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json* get(const std::string& key) {
        auto it = j_.find(key);
        if (it == j_.end()) {
            return nullptr;
        }
        seen_.insert(key);
        return &*it;
    }

    std::string at(const std::string& key) const { return join(path_, key); }

    double number(const std::string& key, double fallback) {
        const json* v = get(key);
        if (!v) {
            return fallback;
        }
        return as_number(*v, at(key));
    }

    std::uint64_t uint(const std::string& key, std::uint64_t fallback) {
        const json* v = get(key);
        return v ? as_uint(*v, at(key)) : fallback;
    }

    std::uint32_t uint32(const std::string& key, std::uint32_t fallback) {
        const json* v = get(key);
        if (!v) {
            return fallback;
        }
        const auto u = as_uint(*v, at(key));
        if (u > std::numeric_limits<std::uint32_t>::max()) {
            throw ConfigError(at(key), "out of range");
        }
        return static_cast<std::uint32_t>(u);
    }

    bool boolean(const std::string& key, bool fallback) {
        const json* v = get(key);
        if (!v) {
            return fallback;
        }
        if (!v->is_boolean()) {
            throw ConfigError(at(key), std::string("expected boolean, got ") + type_name(*v));
        }
        return v->get<bool>();
    }

    std::optional<std::string> string(const std::string& key) {
        const json* v = get(key);
        if (!v) {
            return std::nullopt;
        }
        if (!v->is_string()) {
            throw ConfigError(at(key), std::string("expected string, got ") + type_name(*v));
        }
        return v->get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                throw ConfigError(at(it.key()), "unknown key");
            }
        }
    }

    static double as_number(const json& v, const std::string& path) {
        if (!v.is_number()) {
            throw ConfigError(path, std::string("expected number, got ") + type_name(v));
        }
        return v.get<double>();
    }

    static std::uint64_t as_uint(const json& v, const std::string& path) {
        if (v.is_number_unsigned()) {
            return v.get<std::uint64_t>();
        }
        if (v.is_number_integer()) {
            const auto i = v.get<std::int64_t>();
            if (i < 0) {
                throw ConfigError(path, "must be >= 0");
            }
            return static_cast<std::uint64_t>(i);
        }
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (d >= 0.0 && d == std::floor(d) && d < 1.8446744073709552e19) {
                return static_cast<std::uint64_t>(d);
            }
        }
        throw ConfigError(path, std::string("expected nonnegative integer, got ") + type_name(v));
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<double> number_list(const json& v, const std::string& path) {
    if (!v.is_array()) {
        throw ConfigError(path, std::string("expected array, got ") + type_name(v));
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(Fields::as_number(v[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
}

model::DvfsSetting delta_at(double d, const std::string& path) {
    try {
        return model::DvfsSetting(d);
    } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
    }
}

// Runs a validate() that may throw DomainError, reporting it at `path`.
template <typename F>
void checked(const std::string& path, F&& f) {
    try {
        f();
    } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
    }
}

const char* detection_name(const sim::DetectionMode& d) {
    if (std::holds_alternative<sim::InterruptDetection>(d)) return "interrupt";
    if (std::holds_alternative<sim::HybridDetection>(d)) return "hybrid";
    return "poll";
}

json encode_os(const sim::OsProfile& o) {
    return json{{"os_req_instructions", o.os_req_instructions},
                {"os_reply_instructions", o.os_reply_instructions},
                {"unwind_instructions", o.unwind_instructions},
                {"interrupt_overhead_instructions", o.interrupt_overhead_instructions},
                {"async_work_rate", o.async_work_rate},
                {"kernel_user_copy_per_byte", o.kernel_user_copy_per_byte},
                {"poll_check_instructions", o.poll_check_instructions}};
}

sim::OsProfile decode_os(const json& j, const std::string& path, const sim::OsProfile& base) {
    if (j.is_string()) {
        try {
            return sim::presets::os_profile(j.get<std::string>());
        } catch (const ConfigError& e) {
            throw ConfigError(path, e.detail());
        }
    }
    Fields f(j, path);
    sim::OsProfile o = base;
    if (auto preset = f.string("preset")) {
        try {
            o = sim::presets::os_profile(*preset);
        } catch (const ConfigError& e) {
            throw ConfigError(f.at("preset"), e.detail());
        }
    }
    o.os_req_instructions = f.number("os_req_instructions", o.os_req_instructions);
    o.os_reply_instructions = f.number("os_reply_instructions", o.os_reply_instructions);
    o.unwind_instructions = f.number("unwind_instructions", o.unwind_instructions);
    o.interrupt_overhead_instructions =
        f.number("interrupt_overhead_instructions", o.interrupt_overhead_instructions);
    o.async_work_rate = f.number("async_work_rate", o.async_work_rate);
    o.kernel_user_copy_per_byte = f.number("kernel_user_copy_per_byte", o.kernel_user_copy_per_byte);
    o.poll_check_instructions = f.number("poll_check_instructions", o.poll_check_instructions);
    f.finish();
    return o;
}

json encode_cstates(const sim::CStateModel& m) {
    json arr = json::array();
    for (const auto& s : m.states()) {
        arr.push_back({{"name", s.name},
                       {"exit_latency_us", s.exit_latency_us},
                       {"idle_power_w", s.idle_power_w}});
    }
    return arr;
}

sim::CStateModel decode_cstates(const json& j, const std::string& path) {
    if (j.is_string()) {
        try {
            return sim::presets::cstate_model(j.get<std::string>());
        } catch (const ConfigError& e) {
            throw ConfigError(path, e.detail());
        }
    }
    if (!j.is_array()) {
        throw ConfigError(path, "expected preset name or array of states");
    }
    std::vector<sim::CState> states;
    for (std::size_t i = 0; i < j.size(); ++i) {
        Fields f(j[i], path + "[" + std::to_string(i) + "]");
        sim::CState s;
        s.name = f.string("name").value_or("C" + std::to_string(i));
        for (const char* key : {"exit_latency_us", "idle_power_w"}) {
            if (!f.has(key)) {
                throw ConfigError(f.at(key), "required");
            }
        }
        s.exit_latency_us = f.number("exit_latency_us", 0.0);
        s.idle_power_w = f.number("idle_power_w", 0.0);
        f.finish();
        states.push_back(std::move(s));
    }
    try {
        return sim::CStateModel(std::move(states));
    } catch (const ConfigError& e) {
        throw ConfigError(path, e.detail());
    }
}

json encode_metrics_optional(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

} // namespace

// ---- analytic model ------------------------------------------------------------

json encode(const model::PowerModel& p) {
    return json{{"p_detect", p.p_detect},
                {"p_static", p.p_static},
                {"p_dyn", p.p_dyn},
                {"p_quiescent", p.p_quiescent},
                {"detect_tracks_work", p.detect_tracks_work}};
}

model::PowerModel decode_power(const json& j, const std::string& path, const model::PowerModel& base) {
    Fields f(j, path);
    model::PowerModel p = base;
    p.p_detect = f.number("p_detect", p.p_detect);
    p.p_static = f.number("p_static", p.p_static);
    p.p_dyn = f.number("p_dyn", p.p_dyn);
    p.p_quiescent = f.number("p_quiescent", p.p_quiescent);
    p.detect_tracks_work = f.boolean("detect_tracks_work", p.detect_tracks_work);
    f.finish();
    checked(path, [&] { p.validate(); });
    return p;
}

json encode(const model::AnalyticScenario& s) {
    return json{{"lambda", s.lambda},
                {"work_coeff", s.work_coeff},
                {"instructions", s.instructions},
                {"f_detect", s.f_detect},
                {"f_work_max", s.f_work_max},
                {"alpha", s.exponents.alpha},
                {"beta", s.exponents.beta},
                {"power", encode(s.power)}};
}

model::AnalyticScenario decode_scenario(const json& j, const std::string& path,
                                        const model::AnalyticScenario& base) {
    Fields f(j, path);
    model::AnalyticScenario s = base;
    s.lambda = f.number("lambda", s.lambda);
    s.work_coeff = f.number("work_coeff", s.work_coeff);
    s.instructions = f.number("instructions", s.instructions);
    s.f_detect = f.number("f_detect", s.f_detect);
    s.f_work_max = f.number("f_work_max", s.f_work_max);
    s.exponents.alpha = f.number("alpha", s.exponents.alpha);
    s.exponents.beta = f.number("beta", s.exponents.beta);
    if (const json* p = f.get("power")) {
        s.power = decode_power(*p, f.at("power"), s.power);
    }
    f.finish();
    // Report the first offending field rather than a generic message.
    if (!(std::isfinite(s.exponents.alpha) && s.exponents.alpha > -1.0)) {
        throw ConfigError(f.at("alpha"), "must be > -1");
    }
    if (!(std::isfinite(s.exponents.beta) && s.exponents.beta > -2.0)) {
        throw ConfigError(f.at("beta"), "must be > -2");
    }
    if (!(std::isfinite(s.lambda) && s.lambda > 0.0)) {
        throw ConfigError(f.at("lambda"), "must be > 0");
    }
    if (!(std::isfinite(s.f_detect) && s.f_detect >= 0.0)) {
        throw ConfigError(f.at("f_detect"), "must be >= 0");
    }
    if (!(std::isfinite(s.f_work_max) && s.f_work_max >= 0.0)) {
        throw ConfigError(f.at("f_work_max"), "must be >= 0");
    }
    checked(path, [&] { s.validate(); });
    return s;
}

json encode(const model::CurvePoint& p) {
    return json{{"delta", p.delta}, {"norm_latency", p.norm_latency}, {"norm_energy", p.norm_energy}};
}

json encode(const std::vector<model::CurvePoint>& points) {
    json arr = json::array();
    for (const auto& p : points) {
        arr.push_back(encode(p));
    }
    return arr;
}

std::vector<double> decode_delta_grid(const json& j, const std::string& path) {
    Fields f(j, path);
    std::vector<double> grid;
    if (const json* d = f.get("deltas")) {
        if (f.has("lo") || f.has("hi") || f.has("step")) {
            throw ConfigError(path, "give either deltas or lo/hi/step, not both");
        }
        grid = number_list(*d, f.at("deltas"));
    } else {
        const double lo = f.number("lo", 0.05);
        const double hi = f.number("hi", 1.0);
        const double step = f.number("step", 0.05);
        try {
            grid = model::delta_range(lo, hi, step);
        } catch (const DomainError& e) {
            throw ConfigError(path, e.what());
        }
    }
    f.finish();
    if (grid.empty()) {
        throw ConfigError(f.at("deltas"), "must be nonempty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        delta_at(grid[i], f.at("deltas") + "[" + std::to_string(i) + "]");
    }
    return grid;
}

// ---- simulator -------------------------------------------------------------------

json encode(const sim::SimConfig& c) {
    json detection{{"mode", detection_name(c.detection)}};
    if (const auto* h = std::get_if<sim::HybridDetection>(&c.detection)) {
        detection["poll_budget"] = h->poll_budget;
    }
    json idle;
    if (std::holds_alternative<sim::AlwaysDeepest>(c.idle)) {
        idle = {{"policy", "always_deepest"}};
    } else if (const auto* la = std::get_if<sim::LatencyAware>(&c.idle)) {
        idle = {{"policy", "latency_aware"}, {"thresholds_us", la->thresholds_us}};
    } else {
        idle = {{"policy", "poll"}};
    }
    json stop = json::object();
    if (c.stop.requests) {
        stop["requests"] = *c.stop.requests;
    }
    if (c.stop.duration_us) {
        stop["duration_us"] = *c.stop.duration_us;
    }
    return json{{"seed", c.seed},
                {"delta", c.dvfs.value()},
                {"alpha", c.exponents.alpha},
                {"beta", c.exponents.beta},
                {"power", encode(c.power)},
                {"base_ips", c.base_ips},
                {"base_cycle_hz", c.base_cycle_hz},
                {"detection", detection},
                {"idle", idle},
                {"cstates", encode_cstates(c.cstates)},
                {"nic",
                 {{"wire_bandwidth", c.nic.wire_bandwidth},
                  {"mtu", c.nic.mtu},
                  {"itr_ticks", c.nic.itr.ticks},
                  {"device_poll_batch", c.nic.device_poll_batch}}},
                {"os", encode_os(c.os)},
                {"stop", stop},
                {"record_trace", c.record_trace}};
}

sim::SimConfig decode_sim(const json& j, const std::string& path, const sim::SimConfig& base) {
    Fields f(j, path);
    sim::SimConfig c = base;
    c.seed = f.uint("seed", c.seed);
    c.dvfs = delta_at(f.number("delta", c.dvfs.value()), f.at("delta"));
    c.exponents.alpha = f.number("alpha", c.exponents.alpha);
    c.exponents.beta = f.number("beta", c.exponents.beta);
    checked(path, [&] { c.exponents.validate(); });
    if (const json* p = f.get("power")) {
        c.power = decode_power(*p, f.at("power"), c.power);
    }
    c.base_ips = f.number("base_ips", c.base_ips);
    c.base_cycle_hz = f.number("base_cycle_hz", c.base_cycle_hz);

    if (const json* d = f.get("detection")) {
        Fields df(*d, f.at("detection"));
        const std::string mode = df.string("mode").value_or(detection_name(c.detection));
        if (mode == "interrupt") {
            c.detection = sim::InterruptDetection{};
        } else if (mode == "hybrid") {
            sim::HybridDetection h;
            if (const auto* prev = std::get_if<sim::HybridDetection>(&c.detection)) {
                h = *prev;
            }
            h.poll_budget = df.uint32("poll_budget", h.poll_budget);
            c.detection = h;
        } else if (mode == "poll") {
            c.detection = sim::PollDetection{};
        } else {
            throw ConfigError(df.at("mode"), "expected interrupt, hybrid or poll");
        }
        df.finish();
    }

    if (const json* cs = f.get("cstates")) {
        c.cstates = decode_cstates(*cs, f.at("cstates"));
    }

    if (const json* i = f.get("idle")) {
        Fields idf(*i, f.at("idle"));
        const auto policy = idf.string("policy").value_or("always_deepest");
        if (policy == "always_deepest") {
            c.idle = sim::AlwaysDeepest{};
        } else if (policy == "latency_aware") {
            sim::LatencyAware la = sim::presets::xeon_menu_policy();
            if (const json* t = idf.get("thresholds_us")) {
                la.thresholds_us = number_list(*t, idf.at("thresholds_us"));
            }
            c.idle = la;
        } else if (policy == "poll") {
            c.idle = sim::PollIdle{};
        } else {
            throw ConfigError(idf.at("policy"), "expected always_deepest, latency_aware or poll");
        }
        idf.finish();
    }

    if (const json* n = f.get("nic")) {
        Fields nf(*n, f.at("nic"));
        c.nic.wire_bandwidth = nf.number("wire_bandwidth", c.nic.wire_bandwidth);
        c.nic.mtu = nf.uint32("mtu", c.nic.mtu);
        c.nic.itr.ticks = nf.uint32("itr_ticks", c.nic.itr.ticks);
        c.nic.device_poll_batch = nf.uint32("device_poll_batch", c.nic.device_poll_batch);
        nf.finish();
    }
    if (const json* o = f.get("os")) {
        c.os = decode_os(*o, f.at("os"), c.os);
    }
    if (const json* s = f.get("stop")) {
        Fields sf(*s, f.at("stop"));
        sim::StopCondition stop;
        stop.requests.reset();
        if (const json* r = sf.get("requests")) {
            stop.requests = Fields::as_uint(*r, sf.at("requests"));
        }
        if (const json* d = sf.get("duration_us")) {
            stop.duration_us = Fields::as_number(*d, sf.at("duration_us"));
        }
        sf.finish();
        c.stop = stop;
    }
    c.record_trace = f.boolean("record_trace", c.record_trace);
    f.finish();

    try {
        c.validate();
    } catch (const ConfigError& e) {
        // Validation reports paths relative to the sim section.
        const std::string& field = e.field();
        if (field.rfind("sim", 0) == 0) {
            throw ConfigError(path + field.substr(3), e.detail());
        }
        throw ConfigError(join(path, field), e.detail());
    }
    return c;
}

json encode(const sim::WorkloadSpec& w) {
    json j;
    if (const auto* open = std::get_if<sim::OpenLoop>(&w.kind)) {
        j = {{"type", "open"},
             {"lambda", open->lambda},
             {"arrivals", open->arrivals == sim::ArrivalProcess::Poisson ? "poisson" : "deterministic"}};
    } else {
        const auto& closed = std::get<sim::ClosedLoop>(w.kind);
        j = {{"type", "closed"},
             {"iterations", closed.iterations},
             {"client_think_us", closed.client_think_us}};
    }
    j["request_size"] = w.request_size;
    j["reply_size"] = w.reply_size;
    j["app_instructions"] = w.app_instructions;
    return j;
}

sim::WorkloadSpec decode_workload(const json& j, const std::string& path, const sim::WorkloadSpec& base) {
    Fields f(j, path);
    sim::WorkloadSpec w = base;
    const bool was_open = std::holds_alternative<sim::OpenLoop>(w.kind);
    const std::string type = f.string("type").value_or(was_open ? "open" : "closed");
    if (type == "open") {
        sim::OpenLoop open = was_open ? std::get<sim::OpenLoop>(w.kind) : sim::OpenLoop{};
        open.lambda = f.number("lambda", open.lambda);
        if (auto a = f.string("arrivals")) {
            if (*a == "poisson") {
                open.arrivals = sim::ArrivalProcess::Poisson;
            } else if (*a == "deterministic") {
                open.arrivals = sim::ArrivalProcess::Deterministic;
            } else {
                throw ConfigError(f.at("arrivals"), "expected poisson or deterministic");
            }
        }
        w.kind = open;
    } else if (type == "closed") {
        sim::ClosedLoop closed = was_open ? sim::ClosedLoop{} : std::get<sim::ClosedLoop>(w.kind);
        closed.iterations = f.uint("iterations", closed.iterations);
        closed.client_think_us = f.number("client_think_us", closed.client_think_us);
        w.kind = closed;
    } else {
        throw ConfigError(f.at("type"), "expected open or closed");
    }
    w.request_size = f.uint("request_size", w.request_size);
    w.reply_size = f.uint("reply_size", w.reply_size);
    w.app_instructions = f.number("app_instructions", w.app_instructions);
    f.finish();
    try {
        w.validate();
    } catch (const ConfigError& e) {
        const std::string& field = e.field();
        if (field.rfind("workload", 0) == 0) {
            throw ConfigError(path + field.substr(8), e.detail());
        }
        throw;
    }
    return w;
}

json encode_summary(const sim::SimResult& r) {
    json j{{"kind", r.kind == sim::WorkloadKind::Open ? "open" : "closed"},
           {"requests_completed", r.requests_completed},
           {"interrupt_count", r.interrupt_count},
           {"requests_without_interrupt", r.requests_without_interrupt},
           {"simulated_us", r.simulated_us},
           {"instructions", r.instructions},
           {"total_energy_j", r.total_energy_j},
           {"busy_us", r.busy_us},
           {"detect_us", r.detect_us},
           {"poll_spin_us", r.poll_spin_us},
           {"awake_idle_us", r.awake_idle_us},
           {"sleep_residency_us", r.sleep_residency_us},
           {"sleep_entries", r.sleep_entries},
           {"busy_energy_j", r.busy_energy_j},
           {"detect_energy_j", r.detect_energy_j},
           {"poll_spin_energy_j", r.poll_spin_energy_j},
           {"awake_idle_energy_j", r.awake_idle_energy_j},
           {"sleep_energy_j", r.sleep_energy_j}};
    if (!r.latencies_us.empty()) {
        double sum = 0.0;
        for (double l : r.latencies_us) {
            sum += l;
        }
        j["mean_latency_us"] = sum / static_cast<double>(r.latencies_us.size());
        j["p50_latency_us"] = sim::tail_latency(r.latencies_us, 50.0);
        j["p99_latency_us"] = sim::tail_latency(r.latencies_us, 99.0);
    }
    if (r.kind == sim::WorkloadKind::Closed) {
        j["energy_time_product"] = sim::energy_time_product(r);
    }
    return j;
}

// ---- sweep / fit -------------------------------------------------------------------

json encode(const sweep::SweepGrid& g) {
    json deltas = json::array();
    for (auto d : g.deltas) {
        deltas.push_back(d.value());
    }
    json itrs = json::array();
    for (auto i : g.itrs) {
        itrs.push_back(i.ticks);
    }
    return json{{"deltas", deltas}, {"itr_ticks", itrs}, {"repetitions", g.repetitions}};
}

namespace {

sweep::SweepGrid decode_grid_fields(Fields& f, sweep::SweepGrid g) {
    if (const json* d = f.get("deltas")) {
        g.deltas.clear();
        const auto values = number_list(*d, f.at("deltas"));
        for (std::size_t i = 0; i < values.size(); ++i) {
            g.deltas.push_back(delta_at(values[i], f.at("deltas") + "[" + std::to_string(i) + "]"));
        }
    }
    if (const json* t = f.get("itr_ticks")) {
        if (!t->is_array()) {
            throw ConfigError(f.at("itr_ticks"), "expected array");
        }
        g.itrs.clear();
        for (std::size_t i = 0; i < t->size(); ++i) {
            const auto path = f.at("itr_ticks") + "[" + std::to_string(i) + "]";
            const auto u = Fields::as_uint((*t)[i], path);
            if (u > std::numeric_limits<std::uint32_t>::max()) {
                throw ConfigError(path, "out of range");
            }
            g.itrs.push_back(sim::ItrSetting{static_cast<std::uint32_t>(u)});
        }
    }
    g.repetitions = f.uint32("repetitions", g.repetitions);
    return g;
}

void validate_grid(const sweep::SweepGrid& g, const std::string& path) {
    try {
        g.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(join(path, e.field()), e.detail());
    }
}

} // namespace

sweep::SweepGrid decode_grid(const json& j, const std::string& path) {
    Fields f(j, path);
    auto g = decode_grid_fields(f, sweep::SweepGrid::defaults());
    f.finish();
    validate_grid(g, path);
    return g;
}

json encode(const sweep::Metrics& m) {
    return json{{"p99_latency_us", m.p99_latency_us},
                {"mean_latency_us", m.mean_latency_us},
                {"total_energy_j", m.total_energy_j},
                {"energy_time_product", encode_metrics_optional(m.energy_time_product)},
                {"interrupt_count", m.interrupt_count},
                {"instructions_executed", m.instructions_executed},
                {"total_time_us", m.total_time_us},
                {"busy_time_us", m.busy_time_us},
                {"busy_energy_j", m.busy_energy_j}};
}

sweep::Metrics decode_metrics(const json& j, const std::string& path) {
    Fields f(j, path);
    auto req = [&](const char* key) {
        const json* v = f.get(key);
        if (!v) {
            throw ConfigError(f.at(key), "missing");
        }
        return Fields::as_number(*v, f.at(key));
    };
    sweep::Metrics m;
    m.p99_latency_us = req("p99_latency_us");
    m.mean_latency_us = req("mean_latency_us");
    m.total_energy_j = req("total_energy_j");
    if (const json* e = f.get("energy_time_product"); e && !e->is_null()) {
        m.energy_time_product = Fields::as_number(*e, f.at("energy_time_product"));
    }
    m.interrupt_count = req("interrupt_count");
    m.instructions_executed = req("instructions_executed");
    m.total_time_us = req("total_time_us");
    m.busy_time_us = req("busy_time_us");
    m.busy_energy_j = req("busy_energy_j");
    f.finish();
    return m;
}

json encode(const sweep::SweepPoint& p) {
    json reps = json::array();
    for (const auto& r : p.repetitions) {
        reps.push_back(encode(r));
    }
    return json{{"delta", p.delta.value()},
                {"itr_ticks", p.itr.ticks},
                {"mean", encode(p.mean)},
                {"min", encode(p.min)},
                {"max", encode(p.max)},
                {"repetitions", reps}};
}

sweep::SweepPoint decode_point(const json& j, const std::string& path) {
    Fields f(j, path);
    const json* d = f.get("delta");
    const json* t = f.get("itr_ticks");
    const json* mean = f.get("mean");
    const json* mn = f.get("min");
    const json* mx = f.get("max");
    const json* reps = f.get("repetitions");
    if (!d || !t || !mean || !mn || !mx || !reps) {
        throw ConfigError(path, "point needs delta, itr_ticks, mean, min, max, repetitions");
    }
    sweep::SweepPoint p;
    p.delta = delta_at(Fields::as_number(*d, f.at("delta")), f.at("delta"));
    const auto ticks = Fields::as_uint(*t, f.at("itr_ticks"));
    if (ticks > std::numeric_limits<std::uint32_t>::max()) {
        throw ConfigError(f.at("itr_ticks"), "out of range");
    }
    p.itr.ticks = static_cast<std::uint32_t>(ticks);
    p.mean = decode_metrics(*mean, f.at("mean"));
    p.min = decode_metrics(*mn, f.at("min"));
    p.max = decode_metrics(*mx, f.at("max"));
    if (!reps->is_array()) {
        throw ConfigError(f.at("repetitions"), "expected array");
    }
    for (std::size_t i = 0; i < reps->size(); ++i) {
        p.repetitions.push_back(
            decode_metrics((*reps)[i], f.at("repetitions") + "[" + std::to_string(i) + "]"));
    }
    f.finish();
    return p;
}

json encode(const sweep::Markers& m) {
    json j{{"min_energy", encode(m.min_energy)}, {"min_latency", encode(m.min_latency)}};
    j["best_efficiency"] = m.best_efficiency ? encode(*m.best_efficiency) : json(nullptr);
    return j;
}

json encode(const fit::PowerFitOptions& o) {
    return json{{"beta_lo", o.beta_lo},
                {"beta_hi", o.beta_hi},
                {"width", o.width},
                {"scan_points", o.scan_points}};
}

namespace {

void check_fit_options(const fit::PowerFitOptions& o, const std::string& path) {
    try {
        fit::validate_options(o);
    } catch (const ConfigError& e) {
        throw ConfigError(path.empty() ? e.field() : path + "." + e.field(), e.detail());
    }
}

} // namespace

fit::PowerFitOptions decode_fit_options(const json& j, const std::string& path,
                                        const fit::PowerFitOptions& base) {
    Fields f(j, path);
    fit::PowerFitOptions o = base;
    o.beta_lo = f.number("beta_lo", o.beta_lo);
    o.beta_hi = f.number("beta_hi", o.beta_hi);
    o.width = f.number("width", o.width);
    o.scan_points = static_cast<std::size_t>(f.uint("scan_points", o.scan_points));
    f.finish();
    check_fit_options(o, path);
    return o;
}

json encode_fit_report(const fit::FitResult& r, std::optional<std::uint32_t> itr_ticks) {
    return json{{"kind", "fit_report"},
                {"schema_version", kConfigSchemaVersion},
                {"itr_ticks", itr_ticks ? json(*itr_ticks) : json(nullptr)},
                {"alpha_hat", r.alpha_hat},
                {"beta_hat", r.beta_hat},
                {"work_scale_hat_s", r.work_scale_hat},
                {"p_static_hat_w", r.p_static_hat},
                {"p_dyn_hat_w", r.p_dyn_hat},
                {"time_residual", r.time_residual},
                {"power_residual", r.power_residual},
                {"sample_count", r.sample_count},
                {"warnings", r.warnings}};
}

fit::FitResult decode_fit_report(const json& j) {
    Fields f(j, "");
    if (f.string("kind").value_or("") != "fit_report") {
        throw ConfigError("kind", "expected fit_report");
    }
    const auto version = f.uint("schema_version", 0);
    if (version != static_cast<std::uint64_t>(kConfigSchemaVersion)) {
        throw VersionError("fit report schema version " + std::to_string(version) +
                           " is not supported (expected " + std::to_string(kConfigSchemaVersion) + ")");
    }
    f.get("itr_ticks");
    fit::FitResult r;
    r.alpha_hat = f.number("alpha_hat", 0.0);
    r.beta_hat = f.number("beta_hat", 0.0);
    r.work_scale_hat = f.number("work_scale_hat_s", 0.0);
    r.p_static_hat = f.number("p_static_hat_w", 0.0);
    r.p_dyn_hat = f.number("p_dyn_hat_w", 0.0);
    r.time_residual = f.number("time_residual", 0.0);
    r.power_residual = f.number("power_residual", 0.0);
    r.sample_count = static_cast<std::size_t>(f.uint("sample_count", 0));
    if (const json* w = f.get("warnings")) {
        if (!w->is_array()) {
            throw ConfigError("warnings", "expected array");
        }
        for (const auto& s : *w) {
            if (!s.is_string()) {
                throw ConfigError("warnings", "expected strings");
            }
            r.warnings.push_back(s.get<std::string>());
        }
    }
    f.finish();
    return r;
}

json encode(const trace::WindowStats& w) {
    return json{{"start_us", w.start_us},
                {"end_us", w.end_us},
                {"interrupts", w.interrupts},
                {"rx_bytes", w.rx_bytes},
                {"tx_bytes", w.tx_bytes},
                {"rx_descriptors", w.rx_descriptors},
                {"tx_descriptors", w.tx_descriptors},
                {"joules", w.joules},
                {"instructions", w.instructions},
                {"cycles", w.cycles},
                {"watts", w.watts()},
                {"interrupts_per_s", w.interrupts_per_s()},
                {"rx_bytes_per_s", w.rx_bytes_per_s()},
                {"tx_bytes_per_s", w.tx_bytes_per_s()}};
}

// ---- shared config file --------------------------------------------------------------

ConfigFile decode_config(const json& j) {
    Fields f(j, "");
    ConfigFile c;
    const auto version = f.uint("schema_version", kConfigSchemaVersion);
    if (version != static_cast<std::uint64_t>(kConfigSchemaVersion)) {
        throw VersionError("config schema version " + std::to_string(version) +
                           " is not supported (expected " + std::to_string(kConfigSchemaVersion) + ")");
    }
    if (const json* s = f.get("scenario")) {
        c.scenario = decode_scenario(*s, "scenario");
    }
    if (const json* g = f.get("curve")) {
        c.curve_deltas = decode_delta_grid(*g, "curve");
    }
    if (const json* s = f.get("sim")) {
        c.sim = decode_sim(*s, "sim");
    }
    if (const json* w = f.get("workload")) {
        c.workload = decode_workload(*w, "workload");
    }
    if (const json* s = f.get("sweep")) {
        Fields sf(*s, "sweep");
        c.sweep.grid = decode_grid_fields(sf, c.sweep.grid);
        c.sweep.seed_base = sf.uint("seed_base", c.sweep.seed_base);
        c.sweep.threads = sf.uint32("threads", c.sweep.threads);
        sf.finish();
        validate_grid(c.sweep.grid, "sweep");
    }
    if (const json* s = f.get("fit")) {
        Fields ff(*s, "fit");
        if (const json* t = ff.get("itr_ticks"); t && !t->is_null()) {
            const auto u = Fields::as_uint(*t, ff.at("itr_ticks"));
            if (u > std::numeric_limits<std::uint32_t>::max()) {
                throw ConfigError(ff.at("itr_ticks"), "out of range");
            }
            c.fit.itr_ticks = static_cast<std::uint32_t>(u);
        }
        c.fit.known_t_detect_s = ff.number("known_t_detect_s", c.fit.known_t_detect_s);
        c.fit.options.beta_lo = ff.number("beta_lo", c.fit.options.beta_lo);
        c.fit.options.beta_hi = ff.number("beta_hi", c.fit.options.beta_hi);
        c.fit.options.width = ff.number("width", c.fit.options.width);
        c.fit.options.scan_points =
            static_cast<std::size_t>(ff.uint("scan_points", c.fit.options.scan_points));
        ff.finish();
        check_fit_options(c.fit.options, "fit");
    }
    f.finish();
    return c;
}

ConfigFile load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("", "cannot open config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return decode_config(parse_json(buf.str()));
}

json encode(const ConfigFile& c) {
    json curve{{"deltas", c.curve_deltas}};
    json sweep = encode(c.sweep.grid);
    sweep["seed_base"] = c.sweep.seed_base;
    sweep["threads"] = c.sweep.threads;
    json fit = encode(c.fit.options);
    fit["known_t_detect_s"] = c.fit.known_t_detect_s;
    fit["itr_ticks"] = c.fit.itr_ticks ? json(*c.fit.itr_ticks) : json(nullptr);
    return json{{"schema_version", c.schema_version},
                {"scenario", encode(c.scenario)},
                {"curve", curve},
                {"sim", encode(c.sim)},
                {"workload", encode(c.workload)},
                {"sweep", sweep},
                {"fit", fit}};
}

// ---- digests -----------------------------------------------------------------------------

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("internal", "SHA-256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[md[i] >> 4]);
        out.push_back(kHex[md[i] & 0xF]);
    }
    return out;
}

std::string config_digest(const sim::SimConfig& config, const sim::WorkloadSpec& workload) {
    json sim = encode(config);
    sim.erase("record_trace");
    const json doc{{"sim", sim}, {"workload", encode(workload)}};
    return sha256_hex(doc.dump());
}

json parse_json(std::string_view text, std::size_t base_offset) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(base_offset + (e.byte > 0 ? e.byte - 1 : 0), e.what());
    }
}

} // namespace netpe::codec
