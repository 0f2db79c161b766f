#pragma once

/// @file model.hpp
/// @brief Analytic request-timeline model: time decomposition, DVFS power
/// laws, per-request energy and normalized energy/latency curves.
///
/// Everything here is a pure function of its arguments and is safe to call
/// concurrently.

#include <iosfwd>
#include <span>
#include <vector>

namespace netpe::model {

/// Processor speed as a fraction of the maximum frequency, in (0, 1].
class DvfsSetting {
public:
    /// @throws DomainError unless 0 < delta ≤ 1 and finite.
    explicit DvfsSetting(double delta);

    double value() const noexcept { return delta_; }

    friend bool operator==(DvfsSetting, DvfsSetting) = default;
    friend auto operator<=>(DvfsSetting, DvfsSetting) = default;

private:
    double delta_;
};

/// Sensitivity of work time (alpha) and work power (beta) to Δ.
struct ScalingExponents {
    double alpha = 0.0;
    double beta = 0.0;

    /// @throws DomainError unless alpha > -1, beta > -2, both finite.
    void validate() const;

    friend bool operator==(const ScalingExponents&, const ScalingExponents&) = default;
};

/// The three power regimes of a request cycle. Work power is
/// `p_static + p_dyn * Δ^(2+β)`.
struct PowerModel {
    double p_detect = 0.0;
    double p_static = 10.0;
    double p_dyn = 20.0;
    double p_quiescent = 0.0;
    /// When set, the detection phase draws work power instead of `p_detect`.
    bool detect_tracks_work = true;

    void validate() const;

    friend bool operator==(const PowerModel&, const PowerModel&) = default;
};

/// Per-request stage durations in seconds.
struct TimelineBreakdown {
    double t_detect = 0.0;
    double t_osreq = 0.0;
    double t_app = 0.0;
    double t_idlepolicy = 0.0;
    double t_q = 0.0;

    double t_work() const noexcept { return t_osreq + t_app + t_idlepolicy; }
    double t_latency() const noexcept { return t_detect + t_work(); }
    double delta_t() const noexcept { return t_latency() + t_q; }

    void validate() const;
};

/// An open-loop operating point described by load fractions of the
/// interarrival interval.
struct AnalyticScenario {
    double lambda = 100.0;       ///< requests per second
    double work_coeff = 1e-9;    ///< seconds per instruction at Δ = 1
    double instructions = 1e6;   ///< instructions per request
    double f_detect = 0.1;
    double f_work_max = 0.5;
    ScalingExponents exponents{};
    PowerModel power{};

    void validate() const;

    friend bool operator==(const AnalyticScenario&, const AnalyticScenario&) = default;
};

struct CurvePoint {
    double delta = 1.0;
    double norm_latency = 0.0;
    double norm_energy = 0.0;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// `work_coeff * instructions / Δ^(1+α)`, in seconds.
double work_time(double work_coeff, double instructions, DvfsSetting delta, double alpha);

/// `p_static + p_dyn * Δ^(2+β)`, in watts.
double work_power(const PowerModel& power, DvfsSetting delta, double beta);

/// Power drawn during detection: work power when `detect_tracks_work`,
/// otherwise `p_detect`.
double detect_power(const PowerModel& power, DvfsSetting delta, double beta);

/// Positive part of `1/λ − (t_detect + t_work)`.
double quiescent_time(double lambda, double t_detect, double t_work);

/// Energy of one request cycle in joules (detect + work + quiescent regimes).
double request_energy(const PowerModel& power, const TimelineBreakdown& breakdown,
                      DvfsSetting delta, double beta);

/// Stage durations of `scenario` at `delta`, using the absolute work law for
/// t_work and `f_detect / λ` for t_detect.
TimelineBreakdown breakdown_at(const AnalyticScenario& scenario, DvfsSetting delta);

/// `t_latency / δt = f_detect + f_work_max / Δ^(1+α)`.
double normalized_latency(const AnalyticScenario& scenario, DvfsSetting delta);

/// `E / (1 W · δt)`. With `detect_tracks_work` set and zero quiescent power
/// this is `work_power(Δ) × normalized_latency`; otherwise each regime is
/// weighted by its own power and the quiescent fraction is
/// `[1 − normalized_latency]⁺`.
double normalized_energy(const AnalyticScenario& scenario, DvfsSetting delta);

/// One CurvePoint per grid value, in grid order.
std::vector<CurvePoint> curve_sweep(const AnalyticScenario& scenario,
                                    std::span<const double> delta_grid);

/// Minimizes normalized_energy over [lo, hi] ⊂ (0, 1]: a uniform scan
/// followed by golden-section refinement of the best bracket down to
/// `tolerance` in Δ.
DvfsSetting optimal_delta(const AnalyticScenario& scenario, double lo, double hi,
                          double tolerance);

/// Evenly spaced grid `lo, lo+step, ...` up to `hi` inclusive (within half a
/// step). Values are computed as `lo + i*step` to avoid drift.
std::vector<double> delta_range(double lo, double hi, double step);

/// Writes `delta,norm_latency,norm_energy` CSV with round-trip precision.
void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points);

} // namespace netpe::model
