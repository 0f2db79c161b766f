// Acceptance suite: one PASS/FAIL line per criterion, tolerances and runtime
// limits pinned below. Exit status is nonzero when any criterion fails.
//
//   acceptance [--fixture PATH] [--write-fixture PATH] [--only N]

#include "cli.hpp"

#include "netpe/codec.hpp"
#include "netpe/fit.hpp"
#include "netpe/model.hpp"
#include "netpe/presets.hpp"
#include "netpe/sim.hpp"
#include "netpe/sweep.hpp"
#include "netpe/trace.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace netpe;
using codec::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    int id;
    std::string title;
    double limit_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// ---- 1 -------------------------------------------------------------------

// Direct evaluation in absolute units: one request per interval 1/λ.
struct Direct {
    double latency_norm;
    double energy_norm;
};

Direct direct_eval(double fd, double fw, double d, double a, double b, double ps, double pd) {
    const double lambda = 1000.0;
    const double interval = 1.0 / lambda;
    const double t_detect = fd * interval;
    const double t_work = fw * interval / std::pow(d, 1.0 + a);
    const double p_work = ps + pd * std::pow(d, 2.0 + b);
    const double t_q = std::max(0.0, interval - t_detect - t_work);
    const double energy = p_work * t_detect + p_work * t_work + 0.0 * t_q;
    return {(t_detect + t_work) / interval, energy / interval};
}

Outcome criterion1() {
    const auto grid = model::delta_range(0.05, 1.0, 0.05);
    double worst = 0.0;
    std::size_t evaluated = 0;
    for (double a : {-0.5, 0.0, 0.5, 1.0}) {
        for (double b : {-1.0, 0.0, 1.0}) {
            for (double fd : {0.0, 0.1, 0.3}) {
                for (double fw : {0.3, 0.5, 0.8}) {
                    model::AnalyticScenario s;
                    s.exponents = {a, b};
                    s.f_detect = fd;
                    s.f_work_max = fw;
                    const auto pts = model::curve_sweep(s, grid);
                    for (std::size_t i = 0; i < grid.size(); ++i) {
                        const auto o = direct_eval(fd, fw, grid[i], a, b, s.power.p_static, s.power.p_dyn);
                        worst = std::max(worst, rel(pts[i].norm_latency, o.latency_norm));
                        worst = std::max(worst, rel(pts[i].norm_energy, o.energy_norm));
                        evaluated += 2;
                    }
                }
            }
        }
    }
    return {worst <= 1e-12 && evaluated == 108 * 20 * 2,
            "values=" + std::to_string(evaluated) + " max_rel_err=" + fmt("%.3g", worst) + " (tol 1e-12)"};
}

// ---- 2 -------------------------------------------------------------------

model::AnalyticScenario interior_scenario() {
    model::AnalyticScenario s;
    s.exponents = {0.0, 0.0};
    s.f_detect = 0.0;
    return s;
}

Outcome criterion2_literal() {
    const auto d = model::optimal_delta(interior_scenario(), 0.05, 1.0, 1e-9).value();
    const double target = std::pow(10.0 / 20.0, 0.25);
    const double err = std::abs(d - target);
    return {err <= 1e-4, "optimal_delta=" + fmt("%.6f", d) + " target=(p_static/p_dyn)^(1/4)=" +
                             fmt("%.6f", target) + " abs_err=" + fmt("%.3g", err) + " (tol 1e-4)"};
}

Outcome criterion2_calculus() {
    const auto s = interior_scenario();
    const auto d = model::optimal_delta(s, 0.05, 1.0, 1e-9).value();
    // d/dΔ [(p_s + p_d Δ²)/Δ] = 0  ⇒  Δ² = p_s / p_d.
    const double target = std::sqrt(s.power.p_static / s.power.p_dyn);
    // Independent check: dense scan of the normalized energy.
    double best = 1.0, best_e = 1e300;
    for (int i = 1; i <= 1000000; ++i) {
        const double x = i * 1e-6;
        const double e = (10.0 + 20.0 * x * x) * 0.5 / x;
        if (e < best_e) {
            best_e = e;
            best = x;
        }
    }
    const double err = std::abs(d - target);
    return {err <= 1e-4 && std::abs(best - target) <= 2e-6,
            "optimal_delta=" + fmt("%.6f", d) + " calculus=sqrt(p_static/p_dyn)=" + fmt("%.6f", target) +
                " dense_scan=" + fmt("%.6f", best) + " abs_err=" + fmt("%.3g", err) + " (tol 1e-4)"};
}

// ---- 3 -------------------------------------------------------------------

Outcome criterion3() {
    const double alpha = 0.3;
    const double beta = 0.5;
    model::PowerModel power{4.0, 10.0, 20.0, 1.5, false};
    sim::OsProfile os;
    os.interrupt_overhead_instructions = 2000.0;
    os.os_req_instructions = 3000.0;
    os.os_reply_instructions = 2000.0;
    os.unwind_instructions = 0.0;
    const double app = 10000.0;
    const std::size_t requests = 500;

    double worst_lat = 0.0;
    double worst_energy = 0.0;
    int combos = 0;
    for (double delta : {0.4, 0.7, 1.0}) {
        for (double lambda : {1000.0, 5000.0, 20000.0}) {
            sim::SimConfig c;
            c.dvfs = model::DvfsSetting(delta);
            c.exponents = {alpha, beta};
            c.power = power;
            c.os = os;
            c.cstates = sim::CStateModel{};  // no wake latency
            c.idle = sim::AlwaysDeepest{};
            c.nic.itr = sim::ItrSetting{0};
            c.stop.requests = requests;
            sim::WorkloadSpec w;
            w.kind = sim::OpenLoop{lambda, sim::ArrivalProcess::Deterministic};
            w.app_instructions = app;
            const auto r = sim::simulate(c, w);

            // Model side: instruction counts map to times through 1/base_ips.
            const model::DvfsSetting d(delta);
            const double coeff = 1.0 / c.base_ips;
            model::TimelineBreakdown b;
            b.t_detect = model::work_time(coeff, os.interrupt_overhead_instructions, d, alpha);
            b.t_osreq = model::work_time(coeff, os.os_req_instructions, d, alpha);
            b.t_app = model::work_time(coeff, app + os.os_reply_instructions, d, alpha);
            b.t_q = model::quiescent_time(lambda, b.t_detect, b.t_work());
            const double e_model = model::request_energy(power, b, d, beta);
            const double lat_model_us = b.t_latency() * 1e6;

            for (double l : r.latencies_us) {
                worst_lat = std::max(worst_lat, rel(l, lat_model_us));
            }
            worst_energy = std::max(worst_energy, rel(r.total_energy_j / double(r.requests_completed), e_model));
            if (r.requests_completed != requests) {
                worst_energy = 1.0;
            }
            ++combos;
        }
    }
    const bool pass = worst_lat <= 1e-6 && worst_energy <= 1e-6 && combos == 9;
    return {pass, "combos=" + std::to_string(combos) + " max_rel_err latency=" + fmt("%.3g", worst_lat) +
                      " energy=" + fmt("%.3g", worst_energy) + " (tol 1e-6)"};
}

// ---- 4 -------------------------------------------------------------------

Outcome criterion4() {
    const std::vector<std::uint32_t> ticks{0, 1, 2, 5, 10, 25, 50};
    struct Scenario {
        std::string os;
        double lambda;
        double app;
        bool poisson;
        bool closed;
    };
    const std::vector<Scenario> scenarios{
        {"linux", 10000, 20000, true, false}, {"linux", 40000, 10000, true, false},
        {"libos", 100000, 5000, true, false}, {"libos", 50000, 2000, false, false},
        {"libos", 0, 2000, false, true},     {"linux", 0, 8000, false, true},
    };
    std::size_t violations = 0;
    std::size_t spacing_violations = 0;
    std::size_t irqs_checked = 0;
    std::size_t runs = 0;
    for (const auto& sc : scenarios) {
        for (double delta : {0.5, 1.0}) {
            sim::SimConfig c;
            c.os = sim::presets::os_profile(sc.os);
            c.cstates = sim::presets::xeon_cstates();
            c.idle = sim::presets::xeon_menu_policy();
            c.dvfs = model::DvfsSetting(delta);
            c.seed = 42;
            c.stop.requests = 3000;
            c.record_trace = true;
            sim::WorkloadSpec w;
            if (sc.closed) {
                w.kind = sim::ClosedLoop{3000, 1.0};
            } else {
                w.kind = sim::OpenLoop{sc.lambda, sc.poisson ? sim::ArrivalProcess::Poisson
                                                             : sim::ArrivalProcess::Deterministic};
            }
            w.app_instructions = sc.app;
            std::uint64_t prev = UINT64_MAX;
            for (auto t : ticks) {
                c.nic.itr = sim::ItrSetting{t};
                const auto r = sim::simulate(c, w);
                ++runs;
                if (r.interrupt_count > prev) {
                    ++violations;
                }
                prev = r.interrupt_count;
                std::optional<double> last;
                for (const auto& rec : r.trace->records) {
                    if (const auto* irq = std::get_if<trace::InterruptRecord>(&rec)) {
                        ++irqs_checked;
                        if (last && irq->timestamp_us - *last < 2.0 * t - 1e-9) {
                            ++spacing_violations;
                        }
                        last = irq->timestamp_us;
                    }
                }
            }
        }
    }
    return {violations == 0 && spacing_violations == 0,
            "runs=" + std::to_string(runs) + " monotonicity_violations=" + std::to_string(violations) +
                " interrupts_audited=" + std::to_string(irqs_checked) +
                " spacing_violations=" + std::to_string(spacing_violations)};
}

// ---- 5 -------------------------------------------------------------------

struct OpenScenario {
    sim::SimConfig config;
    sim::WorkloadSpec workload;
    sweep::SweepGrid grid;
};

OpenScenario open_scenario() {
    OpenScenario s;
    s.config.os = sim::presets::libos();
    s.config.cstates = sim::presets::xeon_cstates();
    s.config.idle = sim::presets::xeon_menu_policy();
    s.config.stop.requests = 2000;
    s.workload.kind = sim::OpenLoop{100000.0, sim::ArrivalProcess::Poisson};
    s.workload.app_instructions = 5000.0;
    s.grid = sweep::SweepGrid::defaults();
    s.grid.repetitions = 3;
    return s;
}

OpenScenario closed_scenario() {
    OpenScenario s;
    s.config.os = sim::presets::libos();
    s.config.cstates = sim::presets::xeon_cstates();
    s.config.idle = sim::presets::xeon_menu_policy();
    s.workload.kind = sim::ClosedLoop{10000, 1.0};
    s.workload.app_instructions = 2000.0;
    s.grid = sweep::SweepGrid::defaults();
    s.grid.itrs = {sim::ItrSetting{0}};
    s.grid.repetitions = 1;
    return s;
}

json cell(const sweep::SweepPoint& p) {
    return json{{"delta", p.delta.value()}, {"itr_ticks", p.itr.ticks}};
}

// Runs the three scenario grids and reports the observed outcomes.
json criterion5_observe() {
    const auto open = open_scenario();
    const auto irq_points = sweep::run_sweep(open.grid, open.config, open.workload);
    const auto irq_markers = sweep::find_markers(irq_points, sim::WorkloadKind::Open);

    auto poll_cfg = open.config;
    poll_cfg.detection = sim::PollDetection{};
    auto poll_grid = open.grid;
    poll_grid.itrs = {sim::ItrSetting{0}};  // no interrupts to throttle
    const auto poll_points = sweep::run_sweep(poll_grid, poll_cfg, open.workload);
    const auto poll_markers = sweep::find_markers(poll_points, sim::WorkloadKind::Open);

    const auto closed = closed_scenario();
    const auto closed_points = sweep::run_sweep(closed.grid, closed.config, closed.workload);
    auto rate = [](const sweep::SweepPoint& p) {
        const auto it = std::get<sim::ClosedLoop>(closed_scenario().workload.kind).iterations;
        return p.mean.interrupt_count / static_cast<double>(it);
    };
    const auto& slow = closed_points.front();
    const auto& fast = closed_points.back();

    return json{
        {"open_loop",
         {{"config_digest", codec::config_digest(open.config, open.workload)},
          {"min_energy", cell(irq_markers.min_energy)},
          {"min_energy_j", irq_markers.min_energy.mean.total_energy_j},
          {"interrupt_min_p99_us", irq_markers.min_latency.mean.p99_latency_us},
          {"interrupt_min_p99_cell", cell(irq_markers.min_latency)},
          {"poll_min_p99_us", poll_markers.min_latency.mean.p99_latency_us},
          {"poll_min_p99_cell", cell(poll_markers.min_latency)}}},
        {"closed_loop",
         {{"config_digest", codec::config_digest(closed.config, closed.workload)},
          {"slowest_delta", slow.delta.value()},
          {"fastest_delta", fast.delta.value()},
          {"interrupts_per_request_slowest", rate(slow)},
          {"interrupts_per_request_fastest", rate(fast)}}}};
}

bool same_number(const json& a, const json& b) {
    return a.is_number() && b.is_number() && rel(a.get<double>(), b.get<double>()) <= 1e-9;
}

std::string g_fixture_path;

Outcome criterion5() {
    const json obs = criterion5_observe();
    const auto& o = obs["open_loop"];
    const auto& c = obs["closed_loop"];

    const double me_delta = o["min_energy"]["delta"];
    const unsigned me_ticks = o["min_energy"]["itr_ticks"];
    const bool a = me_delta < 1.0 && me_ticks > 0;
    const double poll = o["poll_min_p99_us"];
    const double irq = o["interrupt_min_p99_us"];
    const bool b = poll < irq;
    const double slow = c["interrupts_per_request_slowest"];
    const double fast = c["interrupts_per_request_fastest"];
    const double reduction = fast > 0.0 ? 1.0 - slow / fast : 0.0;
    const bool cc = reduction >= 0.5;

    bool fixture_ok = false;
    std::string fixture_note = "fixture=missing";
    if (!g_fixture_path.empty() && fs::exists(g_fixture_path)) {
        const json fx = json::parse(slurp(g_fixture_path));
        const auto& fo = fx.at("open_loop");
        const auto& fc = fx.at("closed_loop");
        fixture_ok = fo.at("config_digest") == o["config_digest"] && fo.at("min_energy") == o["min_energy"] &&
                     fo.at("interrupt_min_p99_cell") == o["interrupt_min_p99_cell"] &&
                     fo.at("poll_min_p99_cell") == o["poll_min_p99_cell"] &&
                     same_number(fo.at("min_energy_j"), o["min_energy_j"]) &&
                     same_number(fo.at("interrupt_min_p99_us"), o["interrupt_min_p99_us"]) &&
                     same_number(fo.at("poll_min_p99_us"), o["poll_min_p99_us"]) &&
                     fc.at("config_digest") == c["config_digest"] &&
                     same_number(fc.at("interrupts_per_request_slowest"), c["interrupts_per_request_slowest"]) &&
                     same_number(fc.at("interrupts_per_request_fastest"), c["interrupts_per_request_fastest"]);
        fixture_note = fixture_ok ? "fixture=match" : "fixture=MISMATCH";
    }

    return {a && b && cc && fixture_ok,
            "(a) min_energy delta=" + fmt("%.2f", me_delta) + " ticks=" + std::to_string(me_ticks) +
                (a ? " ok" : " NOT-OK") + "; (b) p99 poll=" + fmt("%.2f", poll) + "us interrupt=" + fmt("%.2f", irq) +
                "us" + (b ? " ok" : " NOT-OK") + "; (c) irq/request slowest=" + fmt("%.4f", slow) +
                " fastest=" + fmt("%.4f", fast) + " reduction=" + fmt("%.1f", 100 * reduction) + "% (need >= 50%)" +
                (cc ? " ok" : " NOT-OK") + "; " + fixture_note};
}

// ---- 6 -------------------------------------------------------------------

std::vector<double> fit_deltas() { return model::delta_range(0.4, 1.0, 0.05); }

std::vector<fit::FitSample> synth(double alpha, double beta, double scale, double ps, double pd,
                                  std::mt19937_64* rng, double noise) {
    std::normal_distribution<double> n(0.0, noise);
    std::vector<fit::FitSample> out;
    for (double d : fit_deltas()) {
        fit::FitSample s;
        s.delta = model::DvfsSetting(d);
        s.observed_latency_s = scale / std::pow(d, 1.0 + alpha);
        s.observed_mean_power_w = ps + pd * std::pow(d, 2.0 + beta);
        if (rng) {
            s.observed_latency_s *= 1.0 + n(*rng);
            s.observed_mean_power_w *= 1.0 + n(*rng);
        }
        out.push_back(s);
    }
    return out;
}

Outcome criterion6_noiseless() {
    double worst = 0.0;
    int cases = 0;
    for (double a : {-0.5, 0.0, 0.5, 1.0}) {
        for (double b : {-1.0, 0.0, 1.0}) {
            const double scale = 20e-6;
            const auto s = synth(a, b, scale, 10.0, 20.0, nullptr, 0.0);
            const auto t = fit::fit_time_law(s);
            const auto p = fit::fit_power_law(s);
            worst = std::max({worst, std::abs(t.alpha_hat - a), std::abs(p.beta_hat - b), rel(t.work_scale_hat, scale),
                              rel(p.p_static_hat, 10.0), rel(p.p_dyn_hat, 20.0)});
            ++cases;
        }
    }
    return {worst <= 1e-6, "cases=" + std::to_string(cases) + " max_err(alpha, beta, scale, powers)=" +
                               fmt("%.3g", worst) + " (tol 1e-6)"};
}

Outcome criterion6_noisy() {
    const double beta = 0.0;
    double sum = 0.0;
    double worst = 0.0;
    int within = 0;
    for (int seed = 1; seed <= 100; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        const auto s = synth(0.0, beta, 20e-6, 10.0, 20.0, &rng, 0.01);
        const double err = std::abs(fit::fit_power_law(s).beta_hat - beta);
        sum += err;
        worst = std::max(worst, err);
        within += err <= 0.05 ? 1 : 0;
    }
    return {worst <= 0.05, "seeds=100 noise=1% gaussian multiplicative mean|beta_hat-beta|=" + fmt("%.4f", sum / 100) +
                               " max=" + fmt("%.4f", worst) + " within_bound=" + std::to_string(within) +
                               "/100 (bound 0.05 on every seed)"};
}

// ---- 7 -------------------------------------------------------------------

Outcome criterion7() {
    std::mt19937_64 rng(7);
    int mismatches = 0;
    std::size_t total_points = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 200;
        const bool coarse = trial % 2 == 0;  // half the trials force ties
        std::uniform_real_distribution<double> u(1.0, 100.0);
        std::vector<sweep::SweepPoint> pts;
        for (std::size_t i = 0; i < n; ++i) {
            sweep::Metrics m;
            m.p99_latency_us = coarse ? double(1 + rng() % 12) : u(rng);
            m.total_energy_j = coarse ? double(1 + rng() % 12) : u(rng);
            pts.push_back(sweep::aggregate_repetitions(model::DvfsSetting(0.01 + 0.99 * double(i) / 200.0),
                                                       sim::ItrSetting{static_cast<std::uint32_t>(i % 7)}, {m}));
        }
        total_points += n;
        std::vector<sweep::SweepPoint> brute;
        for (const auto& p : pts) {
            bool dominated = false;
            for (const auto& q : pts) {
                if (q.mean.p99_latency_us <= p.mean.p99_latency_us && q.mean.total_energy_j <= p.mean.total_energy_j &&
                    (q.mean.p99_latency_us < p.mean.p99_latency_us || q.mean.total_energy_j < p.mean.total_energy_j)) {
                    dominated = true;
                    break;
                }
            }
            if (!dominated) {
                brute.push_back(p);
            }
        }
        auto front = sweep::pareto_front(pts);
        auto key = [](const sweep::SweepPoint& p) {
            return std::make_tuple(p.delta.value(), p.itr.ticks);
        };
        auto by_key = [&](const sweep::SweepPoint& a, const sweep::SweepPoint& b) { return key(a) < key(b); };
        std::sort(front.begin(), front.end(), by_key);
        std::sort(brute.begin(), brute.end(), by_key);
        if (front != brute) {
            ++mismatches;
        }
    }
    return {mismatches == 0, "sweeps=1000 points=" + std::to_string(total_points) +
                                 " mismatches=" + std::to_string(mismatches)};
}

// ---- 8 -------------------------------------------------------------------

trace::TraceStream random_stream(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    trace::TraceStream s;
    s.header.config_digest = codec::sha256_hex(std::to_string(rng()));
    s.header.seed = rng();
    s.header.itr_ticks = static_cast<std::uint32_t>(rng() % 101);
    const std::size_t nc = rng() % 5;
    for (std::size_t i = 0; i < nc; ++i) {
        s.header.cstate_names.push_back("C" + std::to_string(i));
    }
    const std::size_t records = rng() % 40;
    double t_irq = 0.0;
    double t_sample = trace::kSampleCadenceUs;
    auto make_irq = [&](double t) {
        trace::InterruptRecord r;
        r.timestamp_us = t;
        r.rx_bytes = rng() % 100000;
        r.tx_bytes = rng() % 100000;
        r.rx_descriptors = rng() % 70;
        r.tx_descriptors = rng() % 70;
        for (std::size_t i = 0; i < nc; ++i) {
            r.sleep_entries.push_back(rng() % 5);
            r.sleep_residency_us.push_back(u(rng) * 100.0);
        }
        r.joules_since_last = u(rng) * 1e-3;
        return r;
    };
    auto make_sample = [&](double t) {
        return trace::PeriodicSample{t, std::floor(u(rng) * 1e7) * 0.5, u(rng) * 1e7, 0.0, u(rng) * 1e-2};
    };
    double next_irq = 1.0 + u(rng) * 500.0;
    for (std::size_t i = 0; i < records; ++i) {
        if (next_irq < t_sample) {
            s.records.emplace_back(make_irq(next_irq));
            t_irq = next_irq;
            next_irq += 1e-3 + u(rng) * 500.0;
        } else {
            s.records.emplace_back(make_sample(t_sample));
            t_sample += trace::kSampleCadenceUs;
        }
    }
    if (rng() % 4 != 0) {
        const double end = std::max(t_irq, t_sample - trace::kSampleCadenceUs) + u(rng) * 100.0;
        trace::EndRecord e;
        e.activity = make_irq(end);
        e.tail = make_sample(end);
        s.records.emplace_back(e);
    }
    return s;
}

Outcome criterion8() {
    std::mt19937_64 rng(8);
    int roundtrip_failures = 0;
    int partition_failures = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto s = random_stream(rng);
        const std::string text = trace::to_string(s);
        const auto back = trace::parse_string(text);
        if (!(back == s) || trace::to_string(back) != text) {
            ++roundtrip_failures;
        }
        const auto all = trace::totals(s);
        const double window = 0.5 + std::uniform_real_distribution<double>(0.0, 3000.0)(rng);
        trace::WindowStats sum;
        for (const auto& w : trace::aggregate(s, window)) {
            sum.interrupts += w.interrupts;
            sum.rx_bytes += w.rx_bytes;
            sum.tx_bytes += w.tx_bytes;
            sum.rx_descriptors += w.rx_descriptors;
            sum.tx_descriptors += w.tx_descriptors;
            sum.joules += w.joules;
            sum.instructions += w.instructions;
            sum.cycles += w.cycles;
        }
        const bool exact = sum.interrupts == all.interrupts && sum.rx_bytes == all.rx_bytes &&
                           sum.tx_bytes == all.tx_bytes && sum.rx_descriptors == all.rx_descriptors &&
                           sum.tx_descriptors == all.tx_descriptors;
        const bool close = std::abs(sum.joules - all.joules) <= 1e-12 * std::max(1.0, all.joules) &&
                           std::abs(sum.instructions - all.instructions) <= 1e-12 * std::max(1.0, all.instructions) &&
                           std::abs(sum.cycles - all.cycles) <= 1e-12 * std::max(1.0, all.cycles);
        if (!exact || !close) {
            ++partition_failures;
        }
    }

    double worst_energy = 0.0;
    int sims = 0;
    for (const char* os : {"libos", "linux"}) {
        for (double delta : {0.4, 0.75, 1.0}) {
            for (std::uint32_t ticks : {0u, 8u}) {
                sim::SimConfig c;
                c.os = sim::presets::os_profile(os);
                c.cstates = sim::presets::xeon_cstates();
                c.idle = sim::presets::xeon_menu_policy();
                c.dvfs = model::DvfsSetting(delta);
                c.nic.itr = sim::ItrSetting{ticks};
                c.power.p_detect = 3.0;
                c.power.detect_tracks_work = false;
                c.stop.requests = 5000;
                c.record_trace = true;
                sim::WorkloadSpec w;
                w.kind = sim::OpenLoop{10000.0, sim::ArrivalProcess::Poisson};
                w.app_instructions = 10000.0;
                const auto r = sim::simulate(c, w);
                const auto back = trace::parse_string(trace::to_string(*r.trace));
                double joules = 0.0;
                for (const auto& rec : back.records) {
                    if (const auto* irq = std::get_if<trace::InterruptRecord>(&rec)) {
                        joules += irq->joules_since_last;
                    } else if (const auto* e = std::get_if<trace::EndRecord>(&rec)) {
                        joules += e->activity.joules_since_last;
                    }
                }
                double sampled = 0.0;
                for (const auto& rec : back.records) {
                    if (const auto* s = std::get_if<trace::PeriodicSample>(&rec)) {
                        sampled += s->joules;
                    } else if (const auto* e = std::get_if<trace::EndRecord>(&rec)) {
                        sampled += e->tail.joules;
                    }
                }
                worst_energy = std::max({worst_energy, rel(joules, r.total_energy_j), rel(sampled, r.total_energy_j)});
                ++sims;
            }
        }
    }
    return {roundtrip_failures == 0 && partition_failures == 0 && worst_energy <= 1e-9,
            "streams=10000 roundtrip_failures=" + std::to_string(roundtrip_failures) +
                " partition_failures=" + std::to_string(partition_failures) + " sims=" + std::to_string(sims) +
                " max_rel_err(sim vs trace energy)=" + fmt("%.3g", worst_energy) + " (tol 1e-9)"};
}

// ---- 9 -------------------------------------------------------------------

int run_cli(std::vector<std::string> args, std::string& out) {
    args.insert(args.begin(), "netpe");
    std::ostringstream o, e;
    const int code = cli::run(args, o, e);
    out = o.str();
    return code;
}

Outcome criterion9() {
    std::random_device rd;
    const auto dir = fs::temp_directory_path() / ("netpe-accept-" + std::to_string(rd()));
    fs::create_directories(dir);
    const std::vector<std::string> sim_args{"--os",         "linux", "--cstates", "xeon",  "--idle",
                                            "latency_aware", "--lambda", "30000",  "--requests", "5000",
                                            "--app-instructions", "9000", "--itr", "4", "--seed", "17"};
    int failures = 0;
    std::string out1, out2;

    auto sim_cmd = [&](const std::string& name) {
        std::vector<std::string> a{"simulate"};
        a.insert(a.end(), sim_args.begin(), sim_args.end());
        a.insert(a.end(), {"--trace", (dir / name).string()});
        return a;
    };
    failures += run_cli(sim_cmd("a.trace"), out1) != 0;
    failures += run_cli(sim_cmd("b.trace"), out2) != 0;
    const bool trace_same = slurp(dir / "a.trace") == slurp(dir / "b.trace") && !slurp(dir / "a.trace").empty();
    const bool summary_same = out1 == out2;

    auto sweep_cmd = [&](const std::string& name, const std::string& threads) {
        std::vector<std::string> a{"sweep", "--deltas", "0.5,0.75,1.0", "--itrs", "0,4,20", "--reps", "3",
                                   "--seed-base", "11", "--threads", threads, "-o", (dir / name).string()};
        a.insert(a.end(), {"--os", "linux", "--cstates", "xeon", "--idle", "latency_aware", "--lambda", "30000",
                           "--requests", "1000", "--app-instructions", "9000"});
        return a;
    };
    std::string s1, s2, s3;
    failures += run_cli(sweep_cmd("a.sweep", "1"), s1) != 0;
    failures += run_cli(sweep_cmd("b.sweep", "1"), s2) != 0;
    failures += run_cli(sweep_cmd("c.sweep", "3"), s3) != 0;
    const std::string sa = slurp(dir / "a.sweep");
    const bool sweep_same = !sa.empty() && sa == slurp(dir / "b.sweep") && sa == slurp(dir / "c.sweep") &&
                            s1 == s2 && s1 == s3;
    fs::remove_all(dir);
    return {failures == 0 && trace_same && summary_same && sweep_same,
            std::string("simulate trace identical=") + (trace_same ? "yes" : "no") +
                " summary identical=" + (summary_same ? "yes" : "no") +
                " sweep file identical (1,1,3 threads)=" + (sweep_same ? "yes" : "no") +
                " command_failures=" + std::to_string(failures)};
}

} // namespace

int main(int argc, char** argv) {
    std::string write_fixture;
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--fixture" && i + 1 < argc) {
            g_fixture_path = argv[++i];
        } else if (a == "--write-fixture" && i + 1 < argc) {
            write_fixture = argv[++i];
        } else if (a == "--only" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--fixture PATH] [--write-fixture PATH] [--only N]\n";
            return 2;
        }
    }
    if (!write_fixture.empty()) {
        std::ofstream(write_fixture) << criterion5_observe().dump(2) << '\n';
        std::cout << "wrote " << write_fixture << '\n';
        return 0;
    }

    const std::vector<Criterion> criteria{
        {1, "analytic curve reproduction", 5.0, criterion1},
        {2, "interior minimum, literal target", 1.0, criterion2_literal},
        {2, "interior minimum, calculus solution", 1.0, criterion2_calculus},
        {3, "simulator-model equivalence", 30.0, criterion3},
        {4, "ITR monotonicity and gating audit", 60.0, criterion4},
        {5, "qualitative finding regressions", 120.0, criterion5},
        {6, "fit round-trip, noiseless", 60.0, criterion6_noiseless},
        {6, "fit round-trip, noisy", 60.0, criterion6_noisy},
        {7, "Pareto oracle", 30.0, criterion7},
        {8, "trace integrity", 60.0, criterion8},
        {9, "determinism", 0.0, criterion9},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        if (only && c.id != only) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.limit_s == 0.0 || secs < c.limit_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title << "): " << o.detail
                  << " runtime=" << fmt("%.2f", secs) << "s"
                  << (c.limit_s > 0 ? " (limit " + fmt("%g", c.limit_s) + "s)" : std::string(" (no limit)"))
                  << (in_time ? "" : " OVER TIME LIMIT") << std::endl;
    }
    std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << std::endl;
    return failed == 0 ? 0 : 1;
}
