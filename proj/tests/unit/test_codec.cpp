#include "netpe/codec.hpp"
#include "netpe/error.hpp"
#include "netpe/presets.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

using namespace netpe;
using namespace netpe::codec;

namespace {

std::string config_error_field(const json& j) {
    try {
        decode_config(j);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<no error>";
}

sim::SimConfig random_sim(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    sim::SimConfig c;
    c.seed = rng();
    c.dvfs = model::DvfsSetting(0.1 + 0.9 * u(rng));
    c.exponents = {u(rng), u(rng) - 0.5};
    c.power = model::PowerModel{u(rng), 5 * u(rng), 30 * u(rng), u(rng), u(rng) < 0.5};
    c.base_ips = 1e9 + 2e9 * u(rng);
    c.base_cycle_hz = 1e9 + 2e9 * u(rng);
    c.os = u(rng) < 0.5 ? sim::presets::libos() : sim::presets::linux_kernel();
    c.os.unwind_instructions = std::floor(1000 * u(rng));
    c.cstates = u(rng) < 0.5 ? sim::presets::xeon_cstates() : sim::CStateModel{};
    if (c.cstates.empty()) {
        c.idle = u(rng) < 0.5 ? sim::IdlePolicy{sim::AlwaysDeepest{}} : sim::IdlePolicy{sim::PollIdle{}};
    } else {
        c.idle = sim::presets::xeon_menu_policy();
    }
    const double d = u(rng);
    if (d < 0.33) {
        c.detection = sim::InterruptDetection{};
    } else if (d < 0.66) {
        c.detection = sim::HybridDetection{static_cast<std::uint32_t>(1 + rng() % 9)};
    } else {
        c.detection = sim::PollDetection{};
    }
    c.nic.itr.ticks = static_cast<std::uint32_t>(rng() % 100);
    c.nic.mtu = 500 + rng() % 9000;
    c.nic.device_poll_batch = static_cast<std::uint32_t>(1 + rng() % 64);
    c.nic.wire_bandwidth = 100.0 + 2000 * u(rng);
    if (u(rng) < 0.5) {
        c.stop = sim::StopCondition{1 + rng() % 10000, std::nullopt};
    } else {
        c.stop = sim::StopCondition{std::nullopt, 1000.0 * u(rng) + 1.0};
    }
    c.record_trace = u(rng) < 0.5;
    return c;
}

sim::WorkloadSpec random_workload(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    sim::WorkloadSpec w;
    if (u(rng) < 0.5) {
        w.kind = sim::OpenLoop{1.0 + 1e5 * u(rng),
                               u(rng) < 0.5 ? sim::ArrivalProcess::Poisson : sim::ArrivalProcess::Deterministic};
    } else {
        w.kind = sim::ClosedLoop{1 + rng() % 1000, 10 * u(rng)};
    }
    w.request_size = 1 + rng() % 100000;
    w.reply_size = 1 + rng() % 100000;
    w.app_instructions = 1e5 * u(rng);
    return w;
}

} // namespace

TEST_CASE("sha256 test vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("defaults decode from an empty object") {
    const auto c = decode_config(json::object());
    const ConfigFile d;
    CHECK(c.sim == d.sim);
    CHECK(c.workload == d.workload);
    CHECK(c.scenario == d.scenario);
    CHECK(c.sweep.grid == sweep::SweepGrid::defaults());
    CHECK(c.curve_deltas.size() == 20);
}

TEST_CASE("unknown keys and wrong types name the dotted path") {
    CHECK(config_error_field(json{{"simm", json::object()}}) == "simm");
    CHECK(config_error_field(json{{"sim", {{"nic", {{"mtux", 1}}}}}}) == "sim.nic.mtux");
    CHECK(config_error_field(json{{"workload", {{"lambda", "fast"}}}}) == "workload.lambda");
    CHECK(config_error_field(json{{"sim", {{"cstates", {{{"name", "C1"}, {"exit_latency_us", 1}}}}}}}) ==
          "sim.cstates[0].idle_power_w");
    CHECK(config_error_field(json{{"scenario", {{"power", {{"p_dyn", true}}}}}}) == "scenario.power.p_dyn");
    CHECK(config_error_field(json{{"sweep", {{"itr_ticks", {1, -2}}}}}) == "sweep.itr_ticks[1]");
    CHECK(config_error_field(json{{"sim", {{"detection", {{"mode", "psychic"}}}}}}) == "sim.detection.mode");
    CHECK(config_error_field(json{{"sim", {{"os", "windows"}}}}) == "sim.os");
    CHECK(config_error_field(json{{"sim", 3}}) == "sim");
}

TEST_CASE("semantic validation names the dotted path") {
    CHECK(config_error_field(json{{"sim", {{"nic", {{"mtu", 0}}}}}}) == "sim.nic.mtu");
    CHECK(config_error_field(json{{"sim", {{"delta", 1.5}}}}) == "sim.delta");
    CHECK(config_error_field(json{{"workload", {{"lambda", -1}}}}) == "workload.lambda");
    CHECK(config_error_field(json{{"scenario", {{"alpha", -1}}}}) == "scenario.alpha");
    CHECK(config_error_field(json{{"sweep", {{"repetitions", 0}}}}) == "sweep.repetitions");
    CHECK(config_error_field(json{{"fit", {{"beta_lo", 2}, {"beta_hi", 1}}}}) == "fit.beta_hi");
    CHECK(config_error_field(json{{"sim", {{"stop", {{"requests", 10}, {"duration_us", 5}}}}}}).rfind("sim.stop", 0) == 0);
    CHECK(config_error_field(json{{"curve", {{"lo", 0.9}, {"hi", 0.1}, {"step", 0.1}}}}).rfind("curve", 0) == 0);
}

TEST_CASE("presets resolve and overrides apply on top") {
    const auto c = decode_config(json{{"sim",
                                       {{"os", {{"preset", "linux"}, {"unwind_instructions", 5}}},
                                        {"cstates", "xeon"},
                                        {"idle", {{"policy", "latency_aware"}}}}}});
    auto expected = sim::presets::linux_kernel();
    expected.unwind_instructions = 5;
    CHECK(c.sim.os == expected);
    CHECK(c.sim.cstates == sim::presets::xeon_cstates());
    CHECK(std::get<sim::LatencyAware>(c.sim.idle) == sim::presets::xeon_menu_policy());
    const auto plain = decode_config(json{{"sim", {{"os", "libos"}, {"cstates", "none"}}}});
    CHECK(plain.sim.os == sim::presets::libos());
    CHECK(plain.sim.cstates.empty());
}

TEST_CASE("partial sections keep unspecified fields") {
    const auto c = decode_config(json{{"sim", {{"nic", {{"itr_ticks", 7}}}}}, {"scenario", {{"beta", 1.5}}}});
    const ConfigFile d;
    CHECK(c.sim.nic.itr.ticks == 7);
    CHECK(c.sim.nic.mtu == d.sim.nic.mtu);
    CHECK(c.scenario.exponents.beta == 1.5);
    CHECK(c.scenario.power == d.scenario.power);
}

TEST_CASE("config encoding round-trips") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 200; ++i) {
        ConfigFile c;
        c.sim = random_sim(rng);
        c.workload = random_workload(rng);
        c.sweep.seed_base = rng() % 1000;
        c.sweep.threads = static_cast<unsigned>(rng() % 8);
        c.fit.itr_ticks = (i % 2) ? std::optional<std::uint32_t>(rng() % 50) : std::nullopt;
        c.fit.known_t_detect_s = 1e-6 * (rng() % 10);
        c.scenario.exponents = {0.25 * (rng() % 4), 0.5 * (rng() % 3)};
        const json j = encode(c);
        const auto back = decode_config(j);
        CHECK(back.sim == c.sim);
        CHECK(back.workload == c.workload);
        CHECK(back.scenario == c.scenario);
        CHECK(back.sweep.grid == c.sweep.grid);
        CHECK(back.sweep.seed_base == c.sweep.seed_base);
        CHECK(back.sweep.threads == c.sweep.threads);
        CHECK(back.fit.itr_ticks == c.fit.itr_ticks);
        CHECK(back.fit.known_t_detect_s == c.fit.known_t_detect_s);
        CHECK(back.fit.options == c.fit.options);
        CHECK(back.curve_deltas == c.curve_deltas);
        CHECK(encode(back) == j);
        // Survives text serialization exactly.
        CHECK(decode_config(parse_json(j.dump())).sim == c.sim);
    }
}

TEST_CASE("schema version") {
    CHECK_THROWS_AS(decode_config(json{{"schema_version", 2}}), VersionError);
    CHECK_NOTHROW(decode_config(json{{"schema_version", 1}}));
}

TEST_CASE("config digest") {
    std::mt19937_64 rng(2);
    const auto c = random_sim(rng);
    const auto w = random_workload(rng);
    const auto d = config_digest(c, w);
    CHECK(d.size() == 64);
    CHECK(d == config_digest(c, w));
    auto traced = c;
    traced.record_trace = !c.record_trace;
    CHECK(config_digest(traced, w) == d);
    auto reseeded = c;
    reseeded.seed += 1;
    CHECK(config_digest(reseeded, w) != d);
    auto other = w;
    other.app_instructions += 1.0;
    CHECK(config_digest(c, other) != d);
    // Stable across a decode of its own encoding.
    CHECK(config_digest(decode_sim(encode(c)), decode_workload(encode(w))) == d);
}

TEST_CASE("delta grids") {
    CHECK(decode_delta_grid(json{{"deltas", {0.5, 1.0}}}, "g") == std::vector<double>{0.5, 1.0});
    const auto r = decode_delta_grid(json{{"lo", 0.5}, {"hi", 1.0}, {"step", 0.25}}, "g");
    REQUIRE(r.size() == 3);
    CHECK(r[1] == doctest::Approx(0.75));
    CHECK(r[2] == 1.0);
    CHECK_THROWS_AS(decode_delta_grid(json{{"deltas", {0.0}}}, "g"), ConfigError);
    // Missing range ends fall back to 0.05 .. 1.0 step 0.05.
    CHECK(decode_delta_grid(json{{"lo", 0.5}}, "g").size() == 11);
    CHECK_THROWS_AS(decode_delta_grid(json{{"deltas", {0.5}}, {"lo", 0.5}}, "g"), ConfigError);
}

TEST_CASE("sweep point and metrics round-trip") {
    sweep::Metrics a;
    a.p99_latency_us = 12.5;
    a.mean_latency_us = 0.1 + 0.2;
    a.total_energy_j = 1.0 / 3.0;
    a.interrupt_count = 17;
    a.energy_time_product = 2.0 / 7.0;
    sweep::Metrics b = a;
    b.total_energy_j = 0.5;
    const auto p = sweep::aggregate_repetitions(model::DvfsSetting(0.45), sim::ItrSetting{14}, {a, b});
    const auto back = decode_point(parse_json(encode(p).dump()), "p");
    CHECK(back == p);
    CHECK(decode_metrics(encode(a), "m") == a);
    CHECK_THROWS_AS(decode_metrics(json{{"bogus", 1}}, "m"), ConfigError);
}

TEST_CASE("fit report round-trip") {
    fit::FitResult r;
    r.alpha_hat = 0.123456789012345;
    r.beta_hat = -0.5;
    r.work_scale_hat = 1e-5;
    r.p_static_hat = 9.0;
    r.p_dyn_hat = 21.0;
    r.time_residual = 1e-12;
    r.power_residual = 0.01;
    r.sample_count = 13;
    r.warnings = {"something"};
    const json j = encode_fit_report(r, 4);
    CHECK(j.at("kind") == "fit_report");
    CHECK(j.at("itr_ticks") == 4);
    CHECK(decode_fit_report(parse_json(j.dump())) == r);
    json future = j;
    future["schema_version"] = 3;
    CHECK_THROWS_AS(decode_fit_report(future), VersionError);
    json wrong = j;
    wrong["kind"] = "sweep";
    CHECK_THROWS(decode_fit_report(wrong));
}

TEST_CASE("parse_json reports byte offsets") {
    CHECK(parse_json("{\"a\":1}").at("a") == 1);
    try {
        parse_json("{\"a\":}", 100);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() >= 100);
        CHECK(e.offset() <= 106);
    }
}

TEST_CASE("config files on disk") {
    const std::string path = "test_codec_config.json";
    {
        std::ofstream out(path);
        out << R"({"sim":{"delta":0.5},"workload":{"type":"closed","iterations":5}})";
    }
    const auto c = load_config_file(path);
    CHECK(c.sim.dvfs.value() == 0.5);
    CHECK(std::get<sim::ClosedLoop>(c.workload.kind).iterations == 5);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_config_file("/nonexistent/config.json"), ConfigError);
}
