#pragma once

/// @file fit.hpp
/// @brief Recovers the DVFS scaling exponents and power constants from
/// observed latency and power.

#include "netpe/model.hpp"
#include "netpe/sweep.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace netpe::fit {

using model::DvfsSetting;

struct FitSample {
    DvfsSetting delta{1.0};
    double observed_latency_s = 0.0;
    double observed_mean_power_w = 0.0;  ///< mean over busy intervals
    double known_t_detect_s = 0.0;
};

struct TimeLawFit {
    double alpha_hat = 0.0;
    double work_scale_hat = 0.0;  ///< seconds at Δ = 1 (A · N_i)
    double residual = 0.0;        ///< RMS of log-space residuals
};

struct PowerFitOptions {
    double beta_lo = -1.9;
    double beta_hi = 4.0;
    double width = 1e-6;           ///< golden-section termination width on β
    std::size_t scan_points = 256;  ///< coarse scan before refinement

    friend bool operator==(const PowerFitOptions&, const PowerFitOptions&) = default;
};

/// @throws ConfigError naming the offending option.
void validate_options(const PowerFitOptions& options);

struct PowerLawFit {
    double beta_hat = 0.0;
    double p_static_hat = 0.0;
    double p_dyn_hat = 0.0;
    double residual = 0.0;  ///< RMS of power residuals, watts
    bool clamped = false;   ///< a fitted power came out negative and was clamped to 0
    /// Every (β, residual) evaluated during the search.
    std::vector<std::pair<double, double>> evaluations;
};

struct FitResult {
    double alpha_hat = 0.0;
    double beta_hat = 0.0;
    double work_scale_hat = 0.0;
    double p_static_hat = 0.0;
    double p_dyn_hat = 0.0;
    double time_residual = 0.0;
    double power_residual = 0.0;
    std::size_t sample_count = 0;
    std::vector<std::string> warnings;

    friend bool operator==(const FitResult&, const FitResult&) = default;
};

/// Least-squares line through (log Δ, log t_work) with t_work = latency −
/// t_detect: slope = −(1 + α̂), intercept = log(work scale).
/// @throws FitError with fewer than 3 distinct Δ, nonpositive t_work, or
/// α̂ ≤ −1.
TimeLawFit fit_time_law(std::span<const FitSample> samples);

/// Profiled fit of P = p_static + p_dyn·Δ^(2+β): coarse scan of β over the
/// bracket, golden-section refinement of the best cell and a parabolic
/// polish; inner linear least squares for the two powers.
/// @throws FitError with fewer than 4 distinct Δ.
PowerLawFit fit_power_law(std::span<const FitSample> samples, const PowerFitOptions& options = {});

/// Residual sum of squares of the constrained inner fit at fixed β; exposed
/// for oracles and tests. Returns (ssr, p_static, p_dyn, clamped).
struct InnerFit {
    double ssr;
    double p_static;
    double p_dyn;
    bool clamped;
};
InnerFit fit_powers_at(std::span<const FitSample> samples, double beta);

/// Converts sweep points at a single itr into samples (mean latency; busy
/// energy over busy time) and runs both fits.
/// @throws FitError on mixed itr values or fewer than 4 distinct Δ.
FitResult fit_scenario(const std::vector<sweep::SweepPoint>& points, sim::WorkloadKind kind,
                       double known_t_detect_s = 0.0, const PowerFitOptions& options = {});

std::vector<FitSample> samples_from_sweep(const std::vector<sweep::SweepPoint>& points,
                                          double known_t_detect_s);

} // namespace netpe::fit
