#include "netpe/model.hpp"

#include "netpe/error.hpp"
#include "netpe/numfmt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace netpe::model {

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw DomainError(what);
    }
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

} // namespace

DvfsSetting::DvfsSetting(double delta) : delta_(delta) {
    if (!(std::isfinite(delta) && delta > 0.0 && delta <= 1.0)) {
        throw DomainError("DVFS setting must lie in (0, 1], got " + std::to_string(delta));
    }
}

void ScalingExponents::validate() const {
    require(std::isfinite(alpha) && alpha > -1.0, "alpha must be finite and > -1");
    require(std::isfinite(beta) && beta > -2.0, "beta must be finite and > -2");
}

void PowerModel::validate() const {
    require(finite_nonneg(p_detect), "p_detect must be >= 0");
    require(finite_nonneg(p_static), "p_static must be >= 0");
    require(finite_nonneg(p_dyn), "p_dyn must be >= 0");
    require(finite_nonneg(p_quiescent), "p_quiescent must be >= 0");
}

void TimelineBreakdown::validate() const {
    require(finite_nonneg(t_detect) && finite_nonneg(t_osreq) && finite_nonneg(t_app) &&
                finite_nonneg(t_idlepolicy) && finite_nonneg(t_q),
            "timeline durations must be finite and >= 0");
}

void AnalyticScenario::validate() const {
    require(std::isfinite(lambda) && lambda > 0.0, "lambda must be > 0");
    require(finite_nonneg(work_coeff), "work_coeff must be >= 0");
    require(finite_nonneg(instructions), "instructions must be >= 0");
    require(f_detect >= 0.0 && f_detect <= 1.0, "f_detect must lie in [0, 1]");
    require(f_work_max >= 0.0 && f_work_max <= 1.0, "f_work_max must lie in [0, 1]");
    exponents.validate();
    power.validate();
}

double work_time(double work_coeff, double instructions, DvfsSetting delta, double alpha) {
    require(std::isfinite(alpha) && alpha > -1.0, "alpha must be finite and > -1");
    return work_coeff * instructions / std::pow(delta.value(), 1.0 + alpha);
}

double work_power(const PowerModel& power, DvfsSetting delta, double beta) {
    require(std::isfinite(beta) && beta > -2.0, "beta must be finite and > -2");
    return power.p_static + power.p_dyn * std::pow(delta.value(), 2.0 + beta);
}

double detect_power(const PowerModel& power, DvfsSetting delta, double beta) {
    return power.detect_tracks_work ? work_power(power, delta, beta) : power.p_detect;
}

double quiescent_time(double lambda, double t_detect, double t_work) {
    require(std::isfinite(lambda) && lambda > 0.0, "lambda must be > 0");
    require(finite_nonneg(t_detect) && finite_nonneg(t_work), "durations must be >= 0");
    return std::max(0.0, 1.0 / lambda - (t_detect + t_work));
}

double request_energy(const PowerModel& power, const TimelineBreakdown& breakdown,
                      DvfsSetting delta, double beta) {
    power.validate();
    breakdown.validate();
    return detect_power(power, delta, beta) * breakdown.t_detect +
           work_power(power, delta, beta) * breakdown.t_work() + power.p_quiescent * breakdown.t_q;
}

TimelineBreakdown breakdown_at(const AnalyticScenario& scenario, DvfsSetting delta) {
    scenario.validate();
    TimelineBreakdown b;
    b.t_detect = scenario.f_detect / scenario.lambda;
    b.t_app = work_time(scenario.work_coeff, scenario.instructions, delta,
                        scenario.exponents.alpha);
    b.t_q = quiescent_time(scenario.lambda, b.t_detect, b.t_work());
    return b;
}

double normalized_latency(const AnalyticScenario& scenario, DvfsSetting delta) {
    scenario.validate();
    return scenario.f_detect +
           scenario.f_work_max / std::pow(delta.value(), 1.0 + scenario.exponents.alpha);
}

double normalized_energy(const AnalyticScenario& scenario, DvfsSetting delta) {
    const double latency = normalized_latency(scenario, delta);
    const PowerModel& p = scenario.power;
    const double w = work_power(p, delta, scenario.exponents.beta);
    const double quiescent = p.p_quiescent * std::max(0.0, 1.0 - latency);
    if (p.detect_tracks_work) {
        return w * latency + quiescent;
    }
    const double work_fraction =
        scenario.f_work_max / std::pow(delta.value(), 1.0 + scenario.exponents.alpha);
    return p.p_detect * scenario.f_detect + w * work_fraction + quiescent;
}

std::vector<CurvePoint> curve_sweep(const AnalyticScenario& scenario,
                                    std::span<const double> delta_grid) {
    if (delta_grid.empty()) {
        throw DomainError("curve_sweep needs a nonempty DVFS grid");
    }
    scenario.validate();
    std::vector<CurvePoint> out;
    out.reserve(delta_grid.size());
    for (double d : delta_grid) {
        const DvfsSetting delta{d};
        out.push_back({d, normalized_latency(scenario, delta), normalized_energy(scenario, delta)});
    }
    return out;
}

DvfsSetting optimal_delta(const AnalyticScenario& scenario, double lo, double hi,
                          double tolerance) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 && hi <= 1.0 && lo <= hi)) {
        throw DomainError("optimal_delta range must satisfy 0 < lo <= hi <= 1");
    }
    if (!(tolerance > 0.0)) {
        throw DomainError("optimal_delta tolerance must be > 0");
    }
    scenario.validate();

    auto energy = [&](double d) { return normalized_energy(scenario, DvfsSetting{d}); };

    double best_x = lo;
    double best_e = energy(lo);
    auto consider = [&](double x, double e) {
        if (e < best_e || (e == best_e && x < best_x)) {
            best_x = x;
            best_e = e;
        }
    };

    constexpr int kScan = 256;
    const double step = (hi - lo) / kScan;
    int best_i = 0;
    for (int i = 1; i <= kScan; ++i) {
        const double x = (i == kScan) ? hi : lo + i * step;
        const double e = energy(x);
        if (e < best_e) {
            best_i = i;
        }
        consider(x, e);
    }
    if (step == 0.0) {
        return DvfsSetting{best_x};
    }

    double a = std::max(lo, lo + (best_i - 1) * step);
    double b = std::min(hi, lo + (best_i + 1) * step);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = energy(c);
    double fd = energy(d);
    consider(c, fc);
    consider(d, fd);
    while (b - a > tolerance) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = energy(c);
            consider(c, fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = energy(d);
            consider(d, fd);
        }
    }
    return DvfsSetting{best_x};
}

std::vector<double> delta_range(double lo, double hi, double step) {
    if (!(step > 0.0) || !(lo <= hi)) {
        throw DomainError("delta_range needs lo <= hi and step > 0");
    }
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 0.5));
    for (long i = 0; i <= n; ++i) {
        out.push_back(lo + static_cast<double>(i) * step);
    }
    return out;
}

void write_curve_csv(std::ostream& out, std::span<const CurvePoint> points) {
    out << "delta,norm_latency,norm_energy\n";
    for (const auto& p : points) {
        out << format_double(p.delta) << ',' << format_double(p.norm_latency) << ','
            << format_double(p.norm_energy) << '\n';
    }
}

} // namespace netpe::model
