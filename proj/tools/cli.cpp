#include "cli.hpp"

#include "netpe/codec.hpp"
#include "netpe/fit.hpp"
#include "netpe/model.hpp"
#include "netpe/presets.hpp"
#include "netpe/sim.hpp"
#include "netpe/sweep.hpp"
#include "netpe/trace.hpp"
#include "service/api.hpp"
#include "service/repository.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace netpe::cli {

namespace {

using codec::json;

struct UsageError : Error {
    explicit UsageError(const std::string& m) : Error("usage", m) {}
};

// Optional flag values; unset ones leave the config file (or default) alone.
struct ScenarioFlags {
    std::optional<double> lambda, work_coeff, instructions, f_detect, f_work_max, alpha, beta;
    std::optional<double> p_detect, p_static, p_dyn, p_quiescent;
    std::optional<bool> detect_tracks_work;
    std::optional<double> lo, hi, step;
    std::vector<double> deltas;
};

struct SimFlags {
    std::optional<std::uint64_t> seed, requests;
    std::optional<double> delta, alpha, beta, duration_us, base_ips;
    std::optional<std::uint32_t> itr, poll_budget;
    std::optional<std::string> detection, idle, os, cstates;
    std::optional<double> p_static, p_dyn, p_detect, p_quiescent;
    // workload
    std::optional<std::string> workload, arrivals;
    std::optional<double> lambda, think_us, app_instructions;
    std::optional<std::uint64_t> iterations, request_size, reply_size;
};

template <typename T>
void set_if(const std::optional<T>& v, T& target) {
    if (v) {
        target = *v;
    }
}

void add_scenario_flags(CLI::App* app, ScenarioFlags& f) {
    app->add_option("--lambda", f.lambda, "requests per second");
    app->add_option("--work-coeff", f.work_coeff, "seconds per instruction at delta=1");
    app->add_option("--instructions", f.instructions, "instructions per request");
    app->add_option("--f-detect", f.f_detect, "detection fraction of the interval");
    app->add_option("--f-work-max", f.f_work_max, "work fraction at delta=1");
    app->add_option("--alpha", f.alpha);
    app->add_option("--beta", f.beta);
    app->add_option("--p-detect", f.p_detect, "W");
    app->add_option("--p-static", f.p_static, "W");
    app->add_option("--p-dyn", f.p_dyn, "W");
    app->add_option("--p-quiescent", f.p_quiescent, "W");
    app->add_option("--detect-tracks-work", f.detect_tracks_work);
    app->add_option("--lo", f.lo, "grid start");
    app->add_option("--hi", f.hi, "grid end");
    app->add_option("--step", f.step, "grid step");
    app->add_option("--deltas", f.deltas, "explicit delta grid")->delimiter(',');
}

void add_sim_flags(CLI::App* app, SimFlags& f, bool point) {
    app->add_option("--seed", f.seed);
    if (point) {
        app->add_option("--delta", f.delta, "DVFS setting in (0, 1]");
        app->add_option("--itr", f.itr, "interrupt throttle ticks (2 us each)");
    }
    app->add_option("--alpha", f.alpha);
    app->add_option("--beta", f.beta);
    app->add_option("--p-static", f.p_static, "W");
    app->add_option("--p-dyn", f.p_dyn, "W");
    app->add_option("--p-detect", f.p_detect, "W");
    app->add_option("--p-quiescent", f.p_quiescent, "W");
    app->add_option("--base-ips", f.base_ips, "instructions per second at delta=1");
    app->add_option("--requests", f.requests, "open-loop stop after N requests");
    app->add_option("--duration-us", f.duration_us, "open-loop stop after this much simulated time");
    app->add_option("--detection", f.detection)->check(CLI::IsMember({"interrupt", "hybrid", "poll"}));
    app->add_option("--poll-budget", f.poll_budget, "hybrid poll budget");
    app->add_option("--idle", f.idle)->check(CLI::IsMember({"always_deepest", "latency_aware", "poll"}));
    app->add_option("--os", f.os, "OS preset: libos | linux");
    app->add_option("--cstates", f.cstates, "c-state preset: xeon | none");
    app->add_option("--workload", f.workload)->check(CLI::IsMember({"open", "closed"}));
    app->add_option("--arrivals", f.arrivals)->check(CLI::IsMember({"poisson", "deterministic"}));
    app->add_option("--lambda", f.lambda, "open-loop requests per second");
    app->add_option("--iterations", f.iterations, "closed-loop request count");
    app->add_option("--think-us", f.think_us, "closed-loop client think time");
    app->add_option("--app-instructions", f.app_instructions);
    app->add_option("--request-size", f.request_size, "bytes");
    app->add_option("--reply-size", f.reply_size, "bytes");
}

model::AnalyticScenario apply(const ScenarioFlags& f, model::AnalyticScenario s) {
    set_if(f.lambda, s.lambda);
    set_if(f.work_coeff, s.work_coeff);
    set_if(f.instructions, s.instructions);
    set_if(f.f_detect, s.f_detect);
    set_if(f.f_work_max, s.f_work_max);
    set_if(f.alpha, s.exponents.alpha);
    set_if(f.beta, s.exponents.beta);
    set_if(f.p_detect, s.power.p_detect);
    set_if(f.p_static, s.power.p_static);
    set_if(f.p_dyn, s.power.p_dyn);
    set_if(f.p_quiescent, s.power.p_quiescent);
    set_if(f.detect_tracks_work, s.power.detect_tracks_work);
    // Round-trip through the decoder for field-level validation.
    return codec::decode_scenario(codec::encode(s), "scenario");
}

std::vector<double> apply_grid(const ScenarioFlags& f, std::vector<double> grid) {
    if (!f.deltas.empty()) {
        return codec::decode_delta_grid(json{{"deltas", f.deltas}}, "curve");
    }
    if (f.lo || f.hi || f.step) {
        return codec::decode_delta_grid(json{{"lo", f.lo.value_or(0.05)},
                                             {"hi", f.hi.value_or(1.0)},
                                             {"step", f.step.value_or(0.05)}},
                                        "curve");
    }
    return grid;
}

void apply(const SimFlags& f, sim::SimConfig& c, sim::WorkloadSpec& w) {
    json sim = json::object();
    if (f.seed) sim["seed"] = *f.seed;
    if (f.delta) sim["delta"] = *f.delta;
    if (f.alpha) sim["alpha"] = *f.alpha;
    if (f.beta) sim["beta"] = *f.beta;
    if (f.base_ips) sim["base_ips"] = *f.base_ips;
    json power = json::object();
    if (f.p_static) power["p_static"] = *f.p_static;
    if (f.p_dyn) power["p_dyn"] = *f.p_dyn;
    if (f.p_detect) power["p_detect"] = *f.p_detect;
    if (f.p_quiescent) power["p_quiescent"] = *f.p_quiescent;
    if (!power.empty()) sim["power"] = power;
    if (f.itr) sim["nic"] = {{"itr_ticks", *f.itr}};
    if (f.detection || f.poll_budget) {
        json d = json::object();
        if (f.detection) d["mode"] = *f.detection;
        if (f.poll_budget) d["poll_budget"] = *f.poll_budget;
        sim["detection"] = d;
    }
    if (f.cstates) sim["cstates"] = *f.cstates;
    if (f.idle) sim["idle"] = {{"policy", *f.idle}};
    if (f.os) sim["os"] = *f.os;
    if (f.requests && f.duration_us) {
        throw UsageError("--requests and --duration-us are mutually exclusive");
    }
    if (f.requests) sim["stop"] = {{"requests", *f.requests}};
    if (f.duration_us) sim["stop"] = {{"duration_us", *f.duration_us}};
    c = codec::decode_sim(sim, "sim", c);

    json wl = json::object();
    if (f.workload) wl["type"] = *f.workload;
    if (f.arrivals) wl["arrivals"] = *f.arrivals;
    if (f.lambda) wl["lambda"] = *f.lambda;
    if (f.iterations) wl["iterations"] = *f.iterations;
    if (f.think_us) wl["client_think_us"] = *f.think_us;
    if (f.app_instructions) wl["app_instructions"] = *f.app_instructions;
    if (f.request_size) wl["request_size"] = *f.request_size;
    if (f.reply_size) wl["reply_size"] = *f.reply_size;
    w = codec::decode_workload(wl, "workload", w);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("io", "cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_out(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("io", "cannot write '" + path + "'");
    }
    out << bytes;
    if (!out.flush()) {
        throw Error("io", "short write to '" + path + "'");
    }
}

// Validates bytes as the given kind before they enter a repository.
void check_artifact(service::ArtifactKind kind, const std::string& bytes) {
    switch (kind) {
    case service::ArtifactKind::Scenario:
        codec::decode_config(codec::parse_json(bytes));
        break;
    case service::ArtifactKind::Sweep:
        sweep::sweep_from_string(bytes);
        break;
    case service::ArtifactKind::Fit:
        codec::decode_fit_report(codec::parse_json(bytes));
        break;
    case service::ArtifactKind::Trace:
        trace::parse_string(bytes);
        break;
    }
}

std::string store(const std::string& repo_root, service::ArtifactKind kind, const std::string& bytes,
                  const std::string& name) {
    check_artifact(kind, bytes);
    service::Repository repo(repo_root);
    const auto digest = repo.put(kind, bytes);
    if (!name.empty()) {
        repo.set_name(kind, name, digest);
    }
    return digest;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '"':
            out += "\\\"";
            break;
        case '\\':
            out += "\\\\";
            break;
        case '\n':
            out += "\\n";
            break;
        case '\t':
            out += "\\t";
            break;
        default:
            out.push_back(c);
        }
    }
    return out;
}

} // namespace

std::string error_line(const std::string& code, const std::string& field, const std::string& message) {
    std::string line = "error: code=" + code;
    if (!field.empty()) {
        line += " field=" + field;
    }
    line += " message=\"" + escape(message) + "\"";
    return line;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Energy/latency modeling, simulation and tuning of network request processing"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("-c,--config", config_path, "shared JSON config file");

    ScenarioFlags curve_flags;
    bool optimal = false;
    std::string curve_out;
    auto* curve = app.add_subcommand("model-curve", "normalized energy/latency curve as CSV");
    add_scenario_flags(curve, curve_flags);
    curve->add_flag("--optimal", optimal, "print the energy-optimal delta as JSON instead");
    curve->add_option("-o,--output", curve_out, "CSV path (default stdout)");

    SimFlags sim_flags;
    std::string trace_out, repo_dir, name;
    auto* simulate = app.add_subcommand("simulate", "run one simulation; prints a JSON summary");
    add_sim_flags(simulate, sim_flags, true);
    simulate->add_option("--trace", trace_out, "write the trace stream to this path");
    simulate->add_option("--repo", repo_dir, "also store the trace in this repository");
    simulate->add_option("--name", name, "repository name for the stored artifact");

    SimFlags sweep_sim_flags;
    std::vector<double> sweep_deltas;
    std::vector<std::uint32_t> sweep_itrs;
    std::optional<std::uint32_t> reps;
    std::optional<std::uint64_t> seed_base;
    std::optional<unsigned> threads;
    std::string sweep_out;
    auto* sweep_cmd = app.add_subcommand("sweep", "exhaustive delta x itr grid; prints markers");
    add_sim_flags(sweep_cmd, sweep_sim_flags, false);
    sweep_cmd->add_option("--deltas", sweep_deltas)->delimiter(',');
    sweep_cmd->add_option("--itrs", sweep_itrs)->delimiter(',');
    sweep_cmd->add_option("--reps", reps, "repetitions per cell");
    sweep_cmd->add_option("--seed-base", seed_base);
    sweep_cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
    sweep_cmd->add_option("-o,--output", sweep_out, "sweep file path");
    sweep_cmd->add_option("--repo", repo_dir);
    sweep_cmd->add_option("--name", name);

    std::string sweep_in, fit_out;
    std::optional<std::uint32_t> fit_itr;
    std::optional<double> t_detect, beta_lo, beta_hi;
    auto* fit_cmd = app.add_subcommand("fit", "fit alpha/beta and power constants to a sweep");
    fit_cmd->add_option("--sweep", sweep_in, "sweep file")->required();
    fit_cmd->add_option("--itr", fit_itr, "itr ticks to select from the sweep");
    fit_cmd->add_option("--t-detect", t_detect, "known detection time per request, seconds");
    fit_cmd->add_option("--beta-lo", beta_lo);
    fit_cmd->add_option("--beta-hi", beta_hi);
    fit_cmd->add_option("-o,--output", fit_out, "fit report path");
    fit_cmd->add_option("--repo", repo_dir);
    fit_cmd->add_option("--name", name);

    std::string pareto_in;
    auto* pareto = app.add_subcommand("pareto", "Pareto frontier and markers of a sweep file");
    pareto->add_option("--sweep", pareto_in, "sweep file")->required();

    std::string trace_in;
    std::optional<double> window_us;
    std::size_t win_offset = 0;
    std::optional<std::size_t> win_limit;
    auto* stats = app.add_subcommand("trace-stats", "totals and windowed aggregates of a trace");
    stats->add_option("--trace", trace_in, "trace file")->required();
    stats->add_option("--window-us", window_us, "window width");
    stats->add_option("--offset", win_offset, "first window to print");
    stats->add_option("--limit", win_limit, "number of windows to print");

    std::string store_kind, store_file;
    auto* store_cmd = app.add_subcommand("store", "add an artifact file to a repository");
    store_cmd->add_option("--repo", repo_dir)->required();
    store_cmd->add_option("--kind", store_kind)->required()->check(
        CLI::IsMember({"scenario", "sweep", "fit", "trace"}));
    store_cmd->add_option("file", store_file)->required();
    store_cmd->add_option("--name", name);

    std::string host = "127.0.0.1";
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "HTTP API over a repository");
    serve_cmd->add_option("--repo", repo_dir)->required();
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--port", port);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << error_line("usage", "", e.what()) << '\n';
        return 2;
    }

    try {
        codec::ConfigFile cfg;
        if (!config_path.empty()) {
            cfg = codec::load_config_file(config_path);
        }

        if (curve->parsed()) {
            const auto scenario = apply(curve_flags, cfg.scenario);
            const auto grid = apply_grid(curve_flags, cfg.curve_deltas);
            if (optimal) {
                const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
                const auto d = model::optimal_delta(scenario, *lo, *hi, 1e-9);
                out << json{{"optimal_delta", d.value()},
                            {"norm_latency", model::normalized_latency(scenario, d)},
                            {"norm_energy", model::normalized_energy(scenario, d)}}
                           .dump()
                    << '\n';
                return 0;
            }
            const auto points = model::curve_sweep(scenario, grid);
            std::ostringstream csv;
            model::write_curve_csv(csv, points);
            if (curve_out.empty()) {
                out << csv.str();
            } else {
                write_out(curve_out, csv.str());
            }
            return 0;
        }

        if (simulate->parsed()) {
            apply(sim_flags, cfg.sim, cfg.workload);
            cfg.sim.record_trace = !trace_out.empty() || !repo_dir.empty();
            const auto result = sim::simulate(cfg.sim, cfg.workload);
            json summary = codec::encode_summary(result);
            summary["config_digest"] = codec::config_digest(cfg.sim, cfg.workload);
            if (result.trace) {
                const std::string bytes = trace::to_string(*result.trace);
                if (!trace_out.empty()) {
                    write_out(trace_out, bytes);
                }
                if (!repo_dir.empty()) {
                    summary["trace_digest"] = store(repo_dir, service::ArtifactKind::Trace, bytes, name);
                }
            }
            out << summary.dump(2) << '\n';
            return 0;
        }

        if (sweep_cmd->parsed()) {
            apply(sweep_sim_flags, cfg.sim, cfg.workload);
            json grid = json::object();
            if (!sweep_deltas.empty()) grid["deltas"] = sweep_deltas;
            if (!sweep_itrs.empty()) grid["itr_ticks"] = sweep_itrs;
            if (reps) grid["repetitions"] = *reps;
            if (!grid.empty()) {
                json merged = codec::encode(cfg.sweep.grid);
                merged.update(grid);
                cfg.sweep.grid = codec::decode_grid(merged, "sweep");
            }
            set_if(seed_base, cfg.sweep.seed_base);
            set_if(threads, cfg.sweep.threads);
            if (sweep_out.empty() && repo_dir.empty()) {
                throw UsageError("sweep needs --output and/or --repo");
            }
            sweep::SweepFile file;
            file.grid = cfg.sweep.grid;
            file.seed_base = cfg.sweep.seed_base;
            file.config = cfg.sim;
            file.config.record_trace = false;
            file.workload = cfg.workload;
            file.points = sweep::run_sweep(file.grid, file.config, file.workload,
                                           sweep::RunOptions{file.seed_base, cfg.sweep.threads});
            const std::string bytes = sweep::sweep_to_string(file);
            json summary{{"points", file.points.size()},
                         {"markers", codec::encode(sweep::find_markers(file.points, file.workload.workload_kind()))}};
            if (!sweep_out.empty()) {
                write_out(sweep_out, bytes);
            }
            if (!repo_dir.empty()) {
                summary["digest"] = store(repo_dir, service::ArtifactKind::Sweep, bytes, name);
            }
            out << summary.dump(2) << '\n';
            return 0;
        }

        if (fit_cmd->parsed()) {
            const auto file = sweep::sweep_from_string(slurp(sweep_in));
            std::optional<std::uint32_t> itr = fit_itr ? fit_itr : cfg.fit.itr_ticks;
            std::vector<sweep::SweepPoint> points;
            for (const auto& p : file.points) {
                if (!itr || p.itr.ticks == *itr) {
                    points.push_back(p);
                }
            }
            if (itr && points.empty()) {
                throw ConfigError("fit.itr_ticks", "no sweep points at itr " + std::to_string(*itr));
            }
            if (!itr && !points.empty()) {
                itr = points.front().itr.ticks;
            }
            auto options = cfg.fit.options;
            set_if(beta_lo, options.beta_lo);
            set_if(beta_hi, options.beta_hi);
            const double td = t_detect.value_or(cfg.fit.known_t_detect_s);
            const auto result = fit::fit_scenario(points, file.workload.workload_kind(), td, options);
            json report = codec::encode_fit_report(result, itr);
            const std::string bytes = report.dump(2) + "\n";
            if (!fit_out.empty()) {
                write_out(fit_out, bytes);
            }
            if (!repo_dir.empty()) {
                report["digest"] = store(repo_dir, service::ArtifactKind::Fit, bytes, name);
            }
            out << report.dump(2) << '\n';
            return 0;
        }

        if (pareto->parsed()) {
            const auto file = sweep::sweep_from_string(slurp(pareto_in));
            const auto kind = file.workload.workload_kind();
            const auto lat = sweep::latency_objective(kind);
            json frontier = json::array();
            for (const auto& p : sweep::pareto_front(file.points, lat, sweep::Objective::Energy)) {
                frontier.push_back(codec::encode(p));
            }
            out << json{{"latency_metric", lat == sweep::Objective::P99Latency ? "p99_latency_us" : "total_time_us"},
                        {"markers", codec::encode(sweep::find_markers(file.points, kind))},
                        {"frontier", frontier}}
                       .dump(2)
                << '\n';
            return 0;
        }

        if (stats->parsed()) {
            const auto t = trace::parse_string(slurp(trace_in));
            json j{{"totals", codec::encode(trace::totals(t))}, {"span_us", trace::span_end_us(t)}};
            if (window_us) {
                if (!(*window_us > 0.0)) {
                    throw ConfigError("window_us", "must be > 0");
                }
                const auto windows = trace::aggregate(t, *window_us);
                json arr = json::array();
                const std::size_t end =
                    win_limit ? std::min(windows.size(), win_offset + *win_limit) : windows.size();
                for (std::size_t i = win_offset; i < end; ++i) {
                    arr.push_back(codec::encode(windows[i]));
                }
                j["window_us"] = *window_us;
                j["window_count"] = windows.size();
                j["windows"] = arr;
            }
            out << j.dump(2) << '\n';
            return 0;
        }

        if (store_cmd->parsed()) {
            const auto kind = service::kind_from_name(store_kind);
            out << store(repo_dir, *kind, slurp(store_file), name) << '\n';
            return 0;
        }

        if (serve_cmd->parsed()) {
            service::Repository repo(repo_dir);
            service::ApiService api(repo);
            err << "serving " << repo_dir << " on http://" << host << ":" << port << "/v1\n";
            if (!service::serve(api, host, port)) {
                throw Error("io", "cannot listen on " + host + ":" + std::to_string(port));
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        err << error_line(e.code(), e.field(), e.detail()) << '\n';
        return 2;
    } catch (const UsageError& e) {
        err << error_line(e.code(), "", e.what()) << '\n';
        return 2;
    } catch (const Error& e) {
        err << error_line(e.code(), "", e.what()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << error_line("internal", "", e.what()) << '\n';
        return 1;
    }
    return 0;
}

} // namespace netpe::cli
