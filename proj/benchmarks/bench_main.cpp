#include "api.hpp"
#include "repository.hpp"

#include "netpe/model.hpp"
#include "netpe/presets.hpp"
#include "netpe/sim.hpp"
#include "netpe/sweep.hpp"
#include "netpe/trace.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

using namespace netpe;

static void BM_CurveSweep(benchmark::State& state) {
    const auto grid = model::delta_range(0.05, 1.0, 0.05);
    model::AnalyticScenario s;
    for (auto _ : state) {
        benchmark::DoNotOptimize(model::curve_sweep(s, grid));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}
BENCHMARK(BM_CurveSweep);

static void BM_Simulate(benchmark::State& state) {
    sim::SimConfig c;
    c.os = sim::presets::linux_kernel();
    c.cstates = sim::presets::xeon_cstates();
    c.idle = sim::presets::xeon_menu_policy();
    c.nic.itr = sim::ItrSetting{static_cast<std::uint32_t>(state.range(1))};
    c.stop.requests = static_cast<std::uint64_t>(state.range(0));
    sim::WorkloadSpec w;
    w.kind = sim::OpenLoop{20000.0, sim::ArrivalProcess::Poisson};
    w.app_instructions = 10000.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sim::simulate(c, w));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Simulate)->Args({10000, 0})->Args({10000, 20})->Unit(benchmark::kMillisecond);

static void BM_TraceRoundTrip(benchmark::State& state) {
    sim::SimConfig c;
    c.cstates = sim::presets::xeon_cstates();
    c.stop.requests = 20000;
    c.record_trace = true;
    sim::WorkloadSpec w;
    const auto r = sim::simulate(c, w);
    for (auto _ : state) {
        benchmark::DoNotOptimize(trace::parse_string(trace::to_string(*r.trace)));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(r.trace->records.size()));
}
BENCHMARK(BM_TraceRoundTrip)->Unit(benchmark::kMillisecond);

static void BM_ParetoFront(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(1.0, 100.0);
    std::vector<sweep::SweepPoint> pts;
    for (std::int64_t i = 0; i < state.range(0); ++i) {
        sweep::Metrics m;
        m.p99_latency_us = u(rng);
        m.total_energy_j = u(rng);
        pts.push_back(sweep::aggregate_repetitions(model::DvfsSetting(0.5), sim::ItrSetting{0}, {m}));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(sweep::pareto_front(pts));
    }
}
BENCHMARK(BM_ParetoFront)->Arg(200)->Arg(10000);

static void BM_ApiModelEval(benchmark::State& state) {
    const auto root = std::filesystem::temp_directory_path() / "netpe-bench-repo";
    service::Repository repo(root);
    service::ApiService api(repo);
    service::Request req{"POST", "/v1/model/eval", {}, R"({"scenario":{},"deltas":[0.25,0.5,0.75,1.0]})"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(api.handle(req));
    }
    std::filesystem::remove_all(root);
}
BENCHMARK(BM_ApiModelEval);
BENCHMARK_MAIN();
