#pragma once

/// @file sweep.hpp
/// @brief Exhaustive (Δ × ITR) experiment grids, repetition aggregation,
/// Pareto frontier and marker selection.

#include "netpe/error.hpp"
#include "netpe/sim.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace netpe::sweep {

using model::DvfsSetting;
using sim::ItrSetting;
using sim::WorkloadKind;

inline constexpr int kSchemaVersion = 1;

struct SweepGrid {
    std::vector<DvfsSetting> deltas;
    std::vector<ItrSetting> itrs;
    std::uint32_t repetitions = 10;

    /// Δ 0.40..1.00 step 0.05; ticks {0..6, 8, 10, 14, 20, 28, 50, 100}.
    static SweepGrid defaults();

    void validate() const;

    friend bool operator==(const SweepGrid&, const SweepGrid&) = default;
};

/// Metrics extracted from one simulation run. `energy_time_product` is only
/// defined for closed-loop workloads.
struct Metrics {
    double p99_latency_us = 0.0;
    double mean_latency_us = 0.0;
    double total_energy_j = 0.0;
    std::optional<double> energy_time_product;
    double interrupt_count = 0.0;
    double instructions_executed = 0.0;
    double total_time_us = 0.0;
    double busy_time_us = 0.0;
    double busy_energy_j = 0.0;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

Metrics extract_metrics(const sim::SimResult& result);

struct SweepPoint {
    DvfsSetting delta{1.0};
    ItrSetting itr{};
    Metrics mean;
    Metrics min;
    Metrics max;
    std::vector<Metrics> repetitions;

    friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

/// Aggregates per-repetition metrics into mean / min / max.
SweepPoint aggregate_repetitions(DvfsSetting delta, ItrSetting itr, std::vector<Metrics> reps);

/// A failing grid cell, tagged with its coordinates.
class SweepCellError : public Error {
public:
    SweepCellError(double delta, std::uint32_t ticks, const Error& cause);

    double delta() const noexcept { return delta_; }
    std::uint32_t ticks() const noexcept { return ticks_; }
    const std::string& cause_code() const noexcept { return cause_code_; }

private:
    double delta_;
    std::uint32_t ticks_;
    std::string cause_code_;
};

struct RunOptions {
    std::uint64_t seed_base = 1;
    unsigned threads = 1;  ///< 0 = hardware concurrency
};

/// Runs `grid.repetitions` simulations per (Δ, itr) cell. Repetition r uses
/// seed `seed_base + r` regardless of cell, so results do not depend on
/// enumeration order. Output is Δ-major in grid order.
std::vector<SweepPoint> run_sweep(const SweepGrid& grid, const sim::SimConfig& config_template,
                                  const sim::WorkloadSpec& workload, const RunOptions& options = {});

enum class Objective {
    P99Latency,
    MeanLatency,
    TotalTime,
    Energy,
    EnergyTimeProduct,
};

/// Reads an objective from a point's mean metrics.
double objective_value(const SweepPoint& p, Objective o);

/// Performance objective used for a workload kind: p99 latency for open
/// loop, total time for closed loop.
Objective latency_objective(WorkloadKind kind);

/// Indices of points not strictly dominated in (x, y), both minimized,
/// sorted by x then y then index.
std::vector<std::size_t> pareto_indices(const std::vector<std::pair<double, double>>& xy);

std::vector<SweepPoint> pareto_front(const std::vector<SweepPoint>& points,
                                     Objective latency = Objective::P99Latency,
                                     Objective energy = Objective::Energy);

struct Markers {
    SweepPoint min_energy;
    SweepPoint min_latency;
    std::optional<SweepPoint> best_efficiency;  ///< closed loop only
};

/// Argmin selections; ties go to lower energy, then lower Δ, then lower itr.
Markers find_markers(const std::vector<SweepPoint>& points, WorkloadKind kind);

struct Improvement {
    double speedup_factor;   ///< b / a
    double savings_percent;  ///< (b − a) / b × 100
};

/// Compares a metric value `a` (improved) against baseline `b`.
Improvement relative_improvement(double a, double b);
Improvement relative_improvement(const SweepPoint& a, const SweepPoint& b, Objective metric);

// ---- persistence ---------------------------------------------------------

/// Line-delimited sweep file: one header object, then one object per point
/// (mean/min/max plus raw repetitions).
struct SweepFile {
    int schema_version = kSchemaVersion;
    SweepGrid grid;
    std::uint64_t seed_base = 1;
    sim::SimConfig config;
    sim::WorkloadSpec workload;
    std::vector<SweepPoint> points;

    friend bool operator==(const SweepFile&, const SweepFile&) = default;
};

void write_sweep(std::ostream& out, const SweepFile& file);
std::string sweep_to_string(const SweepFile& file);
/// @throws ParseError / VersionError.
SweepFile read_sweep(std::istream& in);
SweepFile sweep_from_string(const std::string& text);

} // namespace netpe::sweep
