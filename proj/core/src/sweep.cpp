#include "netpe/sweep.hpp"

#include "netpe/codec.hpp"
#include "netpe/numfmt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

namespace netpe::sweep {

SweepGrid SweepGrid::defaults() {
    SweepGrid g;
    for (double d : model::delta_range(0.40, 1.00, 0.05)) {
        g.deltas.emplace_back(d);
    }
    for (std::uint32_t t : {0u, 1u, 2u, 3u, 4u, 5u, 6u, 8u, 10u, 14u, 20u, 28u, 50u, 100u}) {
        g.itrs.push_back(ItrSetting{t});
    }
    g.repetitions = 10;
    return g;
}

void SweepGrid::validate() const {
    if (deltas.empty()) {
        throw ConfigError("deltas", "must be nonempty");
    }
    if (itrs.empty()) {
        throw ConfigError("itr_ticks", "must be nonempty");
    }
    if (repetitions == 0) {
        throw ConfigError("repetitions", "must be >= 1");
    }
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (deltas[i] == deltas[j]) {
                throw ConfigError("deltas", "duplicate value " + std::to_string(deltas[i].value()));
            }
        }
    }
    for (std::size_t i = 0; i < itrs.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (itrs[i].ticks == itrs[j].ticks) {
                throw ConfigError("itr_ticks", "duplicate value " + std::to_string(itrs[i].ticks));
            }
        }
    }
}

Metrics extract_metrics(const sim::SimResult& r) {
    Metrics m;
    if (!r.latencies_us.empty()) {
        m.p99_latency_us = sim::tail_latency(r.latencies_us, 99.0);
        m.mean_latency_us = std::accumulate(r.latencies_us.begin(), r.latencies_us.end(), 0.0) /
                            static_cast<double>(r.latencies_us.size());
    }
    m.total_energy_j = r.total_energy_j;
    if (r.kind == WorkloadKind::Closed) {
        m.energy_time_product = sim::energy_time_product(r);
    }
    m.interrupt_count = static_cast<double>(r.interrupt_count);
    m.instructions_executed = r.instructions;
    m.total_time_us = r.simulated_us;
    m.busy_time_us = r.busy_us;
    m.busy_energy_j = r.busy_energy_j;
    return m;
}

namespace {

template <typename F>
void for_each_field(Metrics& out, const Metrics& in, F&& f) {
    f(out.p99_latency_us, in.p99_latency_us);
    f(out.mean_latency_us, in.mean_latency_us);
    f(out.total_energy_j, in.total_energy_j);
    f(out.interrupt_count, in.interrupt_count);
    f(out.instructions_executed, in.instructions_executed);
    f(out.total_time_us, in.total_time_us);
    f(out.busy_time_us, in.busy_time_us);
    f(out.busy_energy_j, in.busy_energy_j);
}

} // namespace

SweepPoint aggregate_repetitions(DvfsSetting delta, ItrSetting itr, std::vector<Metrics> reps) {
    if (reps.empty()) {
        throw DomainError("no repetitions to aggregate");
    }
    SweepPoint p;
    p.delta = delta;
    p.itr = itr;
    p.min = reps.front();
    p.max = reps.front();
    Metrics sum{};
    bool all_etp = true;
    double etp_sum = 0.0;
    double etp_min = std::numeric_limits<double>::infinity();
    double etp_max = -std::numeric_limits<double>::infinity();
    for (const auto& r : reps) {
        for_each_field(sum, r, [](double& a, double b) { a += b; });
        for_each_field(p.min, r, [](double& a, double b) { a = std::min(a, b); });
        for_each_field(p.max, r, [](double& a, double b) { a = std::max(a, b); });
        if (r.energy_time_product) {
            etp_sum += *r.energy_time_product;
            etp_min = std::min(etp_min, *r.energy_time_product);
            etp_max = std::max(etp_max, *r.energy_time_product);
        } else {
            all_etp = false;
        }
    }
    const double n = static_cast<double>(reps.size());
    p.mean = sum;
    for_each_field(p.mean, p.mean, [n](double& a, double) { a /= n; });
    // Mean can round a hair outside [min, max] when every value is equal.
    for_each_field(p.mean, p.min, [](double& a, double lo) { a = std::max(a, lo); });
    for_each_field(p.mean, p.max, [](double& a, double hi) { a = std::min(a, hi); });
    if (all_etp) {
        p.mean.energy_time_product = std::clamp(etp_sum / n, etp_min, etp_max);
        p.min.energy_time_product = etp_min;
        p.max.energy_time_product = etp_max;
    } else {
        p.mean.energy_time_product.reset();
        p.min.energy_time_product.reset();
        p.max.energy_time_product.reset();
    }
    p.repetitions = std::move(reps);
    return p;
}

SweepCellError::SweepCellError(double delta, std::uint32_t ticks, const Error& cause)
    : Error(cause.code(), "cell delta=" + format_double(delta) + " itr_ticks=" +
                              std::to_string(ticks) + ": " + cause.what()),
      delta_(delta), ticks_(ticks), cause_code_(cause.code()) {}

std::vector<SweepPoint> run_sweep(const SweepGrid& grid, const sim::SimConfig& config_template,
                                  const sim::WorkloadSpec& workload, const RunOptions& options) {
    grid.validate();
    workload.validate();
    const std::size_t cells = grid.deltas.size() * grid.itrs.size();
    std::vector<std::optional<SweepPoint>> out(cells);

    auto run_cell = [&](std::size_t idx) {
        const auto delta = grid.deltas[idx / grid.itrs.size()];
        const auto itr = grid.itrs[idx % grid.itrs.size()];
        std::vector<Metrics> reps;
        reps.reserve(grid.repetitions);
        try {
            for (std::uint32_t r = 0; r < grid.repetitions; ++r) {
                sim::SimConfig cfg = config_template;
                cfg.dvfs = delta;
                cfg.nic.itr = itr;
                cfg.seed = options.seed_base + r;
                cfg.record_trace = false;
                reps.push_back(extract_metrics(sim::simulate(cfg, workload)));
            }
        } catch (const Error& e) {
            throw SweepCellError(delta.value(), itr.ticks, e);
        }
        out[idx] = aggregate_repetitions(delta, itr, std::move(reps));
    };

    unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                            : options.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, cells));
    if (threads <= 1) {
        for (std::size_t i = 0; i < cells; ++i) {
            run_cell(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex mu;
        std::size_t failed_idx = cells;
        std::exception_ptr failure;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < cells; i = next++) {
                    try {
                        run_cell(i);
                    } catch (...) {
                        // Report the lowest failing cell, as a serial run would.
                        std::lock_guard lock(mu);
                        if (i < failed_idx) {
                            failed_idx = i;
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }

    std::vector<SweepPoint> points;
    points.reserve(cells);
    for (auto& p : out) {
        points.push_back(std::move(*p));
    }
    return points;
}

double objective_value(const SweepPoint& p, Objective o) {
    switch (o) {
    case Objective::P99Latency:
        return p.mean.p99_latency_us;
    case Objective::MeanLatency:
        return p.mean.mean_latency_us;
    case Objective::TotalTime:
        return p.mean.total_time_us;
    case Objective::Energy:
        return p.mean.total_energy_j;
    case Objective::EnergyTimeProduct:
        if (!p.mean.energy_time_product) {
            throw DomainError("energy-time product is only defined for closed-loop sweeps");
        }
        return *p.mean.energy_time_product;
    }
    throw DomainError("unknown objective");
}

Objective latency_objective(WorkloadKind kind) {
    return kind == WorkloadKind::Open ? Objective::P99Latency : Objective::TotalTime;
}

std::vector<std::size_t> pareto_indices(const std::vector<std::pair<double, double>>& xy) {
    std::vector<std::size_t> order(xy.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(xy[a].first, xy[a].second, a) < std::tie(xy[b].first, xy[b].second, b);
    });
    std::vector<std::size_t> front;
    double best_y = std::numeric_limits<double>::infinity();  // over strictly smaller x
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        const double x = xy[order[i]].first;
        while (j < order.size() && xy[order[j]].first == x) {
            ++j;
        }
        // Group sorted by y: only the group's minimum y can survive, and only
        // if no point with smaller x reaches it.
        const double group_min = xy[order[i]].second;
        if (group_min < best_y) {
            for (std::size_t k = i; k < j && xy[order[k]].second == group_min; ++k) {
                front.push_back(order[k]);
            }
        }
        best_y = std::min(best_y, group_min);
        i = j;
    }
    return front;
}

std::vector<SweepPoint> pareto_front(const std::vector<SweepPoint>& points, Objective latency,
                                     Objective energy) {
    std::vector<std::pair<double, double>> xy;
    xy.reserve(points.size());
    for (const auto& p : points) {
        xy.emplace_back(objective_value(p, latency), objective_value(p, energy));
    }
    std::vector<SweepPoint> out;
    for (auto i : pareto_indices(xy)) {
        out.push_back(points[i]);
    }
    return out;
}

namespace {

const SweepPoint& argmin(const std::vector<SweepPoint>& points, Objective o) {
    auto key = [o](const SweepPoint& p) {
        return std::make_tuple(objective_value(p, o), p.mean.total_energy_j, p.delta.value(),
                               p.itr.ticks);
    };
    const SweepPoint* best = &points.front();
    auto best_key = key(*best);
    for (const auto& p : points) {
        auto k = key(p);
        if (k < best_key) {
            best = &p;
            best_key = k;
        }
    }
    return *best;
}

} // namespace

Markers find_markers(const std::vector<SweepPoint>& points, WorkloadKind kind) {
    if (points.empty()) {
        throw DomainError("cannot select markers from an empty sweep");
    }
    Markers m{argmin(points, Objective::Energy), argmin(points, latency_objective(kind)), std::nullopt};
    if (kind == WorkloadKind::Closed) {
        m.best_efficiency = argmin(points, Objective::EnergyTimeProduct);
    }
    return m;
}

Improvement relative_improvement(double a, double b) {
    if (a == 0.0 || b == 0.0) {
        throw DomainError("relative improvement needs nonzero metric values");
    }
    return Improvement{b / a, (b - a) / b * 100.0};
}

Improvement relative_improvement(const SweepPoint& a, const SweepPoint& b, Objective metric) {
    return relative_improvement(objective_value(a, metric), objective_value(b, metric));
}

// ---- persistence ---------------------------------------------------------

void write_sweep(std::ostream& out, const SweepFile& file) {
    codec::json header{{"kind", "sweep"},
                       {"schema_version", file.schema_version},
                       {"grid", codec::encode(file.grid)},
                       {"seed_base", file.seed_base},
                       {"config", codec::encode(file.config)},
                       {"workload", codec::encode(file.workload)},
                       {"point_count", file.points.size()}};
    out << header.dump() << '\n';
    for (const auto& p : file.points) {
        codec::json j = codec::encode(p);
        j["kind"] = "point";
        out << j.dump() << '\n';
    }
}

std::string sweep_to_string(const SweepFile& file) {
    std::ostringstream out;
    write_sweep(out, file);
    return out.str();
}

SweepFile read_sweep(std::istream& in) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return sweep_from_string(buf.str());
}

SweepFile sweep_from_string(const std::string& text) {
    SweepFile file;
    std::size_t offset = 0;
    std::size_t expected = 0;
    bool have_header = false;
    while (offset < text.size()) {
        const auto nl = text.find('\n', offset);
        if (nl == std::string::npos) {
            throw ParseError(offset, "truncated line (missing newline)");
        }
        const std::string_view line(text.data() + offset, nl - offset);
        codec::json j = codec::parse_json(line, offset);
        try {
            if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
                throw ParseError(offset, "line is not a tagged object");
            }
            const std::string kind = j["kind"].get<std::string>();
            j.erase("kind");
            if (!have_header) {
                if (kind != "sweep") {
                    throw ParseError(offset, "expected sweep header, got '" + kind + "'");
                }
                if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
                    throw ParseError(offset, "header lacks schema_version");
                }
                file.schema_version = j["schema_version"].get<int>();
                if (file.schema_version != kSchemaVersion) {
                    throw VersionError("sweep schema version " + std::to_string(file.schema_version) +
                                       " is not supported (expected " + std::to_string(kSchemaVersion) +
                                       ")");
                }
                for (const char* key : {"grid", "seed_base", "config", "workload", "point_count"}) {
                    if (!j.contains(key)) {
                        throw ParseError(offset, std::string("header lacks ") + key);
                    }
                }
                if (j.size() != 6) {
                    throw ParseError(offset, "header has unknown keys");
                }
                file.grid = codec::decode_grid(j["grid"], "grid");
                file.seed_base = j["seed_base"].get<std::uint64_t>();
                file.config = codec::decode_sim(j["config"], "config");
                file.workload = codec::decode_workload(j["workload"], "workload");
                expected = j["point_count"].get<std::size_t>();
                have_header = true;
            } else {
                if (kind != "point") {
                    throw ParseError(offset, "expected point record, got '" + kind + "'");
                }
                file.points.push_back(
                    codec::decode_point(j, "points[" + std::to_string(file.points.size()) + "]"));
            }
        } catch (const ConfigError& e) {
            throw ParseError(offset, e.what());
        } catch (const codec::json::exception& e) {
            throw ParseError(offset, e.what());
        }
        offset = nl + 1;
    }
    if (!have_header) {
        throw ParseError(0, "empty sweep file");
    }
    if (file.points.size() != expected) {
        throw ParseError(offset, "header announces " + std::to_string(expected) + " points, found " +
                                     std::to_string(file.points.size()));
    }
    return file;
}

} // namespace netpe::sweep
