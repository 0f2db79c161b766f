#include "netpe/fit.hpp"

#include "netpe/error.hpp"
#include "netpe/numfmt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace netpe::fit {

namespace {

std::size_t distinct_deltas(std::span<const FitSample> samples) {
    std::set<double> seen;
    for (const auto& s : samples) {
        seen.insert(s.delta.value());
    }
    return seen.size();
}

struct Line {
    double intercept;
    double slope;
};

// Ordinary least squares on centered data.
Line least_squares(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    return Line{my - slope * mx, slope};
}

double ssr_of(std::span<const double> x, std::span<const double> y, double a, double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - a - b * x[i];
        s += r * r;
    }
    return s;
}

} // namespace

TimeLawFit fit_time_law(std::span<const FitSample> samples) {
    if (distinct_deltas(samples) < 3) {
        throw FitError("time-law fit needs samples at >= 3 distinct delta values");
    }
    std::vector<double> x, y;
    for (const auto& s : samples) {
        const double t_work = s.observed_latency_s - s.known_t_detect_s;
        if (!(std::isfinite(t_work) && t_work > 0.0)) {
            throw FitError("work time (latency - t_detect) must be > 0 at delta=" +
                           format_double(s.delta.value()));
        }
        x.push_back(std::log(s.delta.value()));
        y.push_back(std::log(t_work));
    }
    const Line line = least_squares(x, y);
    TimeLawFit out;
    out.alpha_hat = -line.slope - 1.0;
    out.work_scale_hat = std::exp(line.intercept);
    out.residual = std::sqrt(ssr_of(x, y, line.intercept, line.slope) / static_cast<double>(x.size()));
    // Work time that does not shrink with speed puts α̂ on the -1 boundary.
    if (!(out.alpha_hat > -1.0 + 1e-9)) {
        throw FitError("fitted alpha " + format_double(out.alpha_hat) +
                       " is outside the admissible range alpha > -1");
    }
    return out;
}

InnerFit fit_powers_at(std::span<const FitSample> samples, double beta) {
    std::vector<double> x, y;
    for (const auto& s : samples) {
        x.push_back(std::pow(s.delta.value(), 2.0 + beta));
        y.push_back(s.observed_mean_power_w);
    }
    const Line line = least_squares(x, y);
    if (line.intercept >= 0.0 && line.slope >= 0.0) {
        return InnerFit{ssr_of(x, y, line.intercept, line.slope), line.intercept, line.slope, false};
    }
    // Constrained optimum lies on a boundary: p_static = 0 or p_dyn = 0.
    double sxx = 0.0, sxy = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        sy += y[i];
    }
    const double b_only = std::max(0.0, sxy / sxx);
    const double a_only = std::max(0.0, sy / static_cast<double>(y.size()));
    const double ssr_b = ssr_of(x, y, 0.0, b_only);
    const double ssr_a = ssr_of(x, y, a_only, 0.0);
    if (ssr_b <= ssr_a) {
        return InnerFit{ssr_b, 0.0, b_only, true};
    }
    return InnerFit{ssr_a, a_only, 0.0, true};
}

void validate_options(const PowerFitOptions& options) {
    if (!(options.beta_lo > -2.0)) {
        throw ConfigError("beta_lo", "must be > -2");
    }
    if (!(options.beta_hi > options.beta_lo)) {
        throw ConfigError("beta_hi", "must exceed beta_lo");
    }
    if (!(options.width > 0.0)) {
        throw ConfigError("width", "must be > 0");
    }
    if (options.scan_points < 3) {
        throw ConfigError("scan_points", "must be >= 3");
    }
}

PowerLawFit fit_power_law(std::span<const FitSample> samples, const PowerFitOptions& options) {
    if (distinct_deltas(samples) < 4) {
        throw FitError("power-law fit needs samples at >= 4 distinct delta values");
    }
    validate_options(options);
    const double n = static_cast<double>(samples.size());
    PowerLawFit out;
    double best_beta = options.beta_lo;
    double best_ssr = std::numeric_limits<double>::infinity();
    auto eval = [&](double beta) {
        const InnerFit f = fit_powers_at(samples, beta);
        out.evaluations.emplace_back(beta, std::sqrt(f.ssr / n));
        if (f.ssr < best_ssr) {
            best_ssr = f.ssr;
            best_beta = beta;
        }
        return f.ssr;
    };

    const std::size_t m = options.scan_points;
    const double step = (options.beta_hi - options.beta_lo) / static_cast<double>(m - 1);
    std::size_t best_k = 0;
    double scan_best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
        const double s = eval(options.beta_lo + step * static_cast<double>(k));
        if (s < scan_best) {
            scan_best = s;
            best_k = k;
        }
    }

    double a = options.beta_lo + step * static_cast<double>(best_k == 0 ? 0 : best_k - 1);
    double b = options.beta_lo + step * static_cast<double>(std::min(best_k + 1, m - 1));
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = eval(c);
    double fd = eval(d);
    while (b - a > options.width) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = eval(d);
        }
    }

    // Parabolic polish through the best point and its bracket neighbours.
    for (int iter = 0; iter < 8; ++iter) {
        const double h = std::max(std::abs(best_beta) * 1e-9, 1e-12) * 1e3;
        const double x0 = best_beta - h, x1 = best_beta, x2 = best_beta + h;
        if (x0 <= options.beta_lo || x2 >= options.beta_hi) {
            break;
        }
        const double f0 = fit_powers_at(samples, x0).ssr;
        const double f1 = best_ssr;
        const double f2 = fit_powers_at(samples, x2).ssr;
        const double denom = f0 - 2.0 * f1 + f2;
        if (!(denom > 0.0)) {
            break;
        }
        const double next = x1 - 0.5 * h * (f2 - f0) / denom;
        if (!(next > options.beta_lo && next < options.beta_hi) || next == best_beta) {
            break;
        }
        const double before = best_ssr;
        eval(next);
        if (!(best_ssr < before)) {
            break;
        }
    }

    const InnerFit f = fit_powers_at(samples, best_beta);
    out.beta_hat = best_beta;
    out.p_static_hat = f.p_static;
    out.p_dyn_hat = f.p_dyn;
    out.residual = std::sqrt(f.ssr / n);
    out.clamped = f.clamped;
    return out;
}

std::vector<FitSample> samples_from_sweep(const std::vector<sweep::SweepPoint>& points,
                                          double known_t_detect_s) {
    std::vector<FitSample> out;
    for (const auto& p : points) {
        if (!(p.mean.busy_time_us > 0.0)) {
            throw FitError("sweep point at delta=" + format_double(p.delta.value()) +
                           " has no busy time");
        }
        FitSample s;
        s.delta = p.delta;
        s.observed_latency_s = p.mean.mean_latency_us * 1e-6;
        s.observed_mean_power_w = p.mean.busy_energy_j / (p.mean.busy_time_us * 1e-6);
        s.known_t_detect_s = known_t_detect_s;
        out.push_back(s);
    }
    return out;
}

FitResult fit_scenario(const std::vector<sweep::SweepPoint>& points, sim::WorkloadKind kind,
                       double known_t_detect_s, const PowerFitOptions& options) {
    // Per-request latency is the observable in both workload kinds.
    (void)kind;
    if (points.empty()) {
        throw FitError("no sweep points to fit");
    }
    for (const auto& p : points) {
        if (p.itr != points.front().itr) {
            throw FitError("sweep points span several itr values; select one itr before fitting");
        }
    }
    const auto samples = samples_from_sweep(points, known_t_detect_s);
    if (distinct_deltas(samples) < 4) {
        throw FitError("fit needs sweep points at >= 4 distinct delta values");
    }
    const TimeLawFit t = fit_time_law(samples);
    const PowerLawFit p = fit_power_law(samples, options);
    FitResult r;
    r.alpha_hat = t.alpha_hat;
    r.work_scale_hat = t.work_scale_hat;
    r.time_residual = t.residual;
    r.beta_hat = p.beta_hat;
    r.p_static_hat = p.p_static_hat;
    r.p_dyn_hat = p.p_dyn_hat;
    r.power_residual = p.residual;
    r.sample_count = samples.size();
    if (p.clamped) {
        r.warnings.push_back("constrained fit: a negative fitted power was clamped to 0");
    }
    const double edge = 1e-3 * (options.beta_hi - options.beta_lo);
    if (p.beta_hat - options.beta_lo < edge || options.beta_hi - p.beta_hat < edge) {
        r.warnings.push_back("beta estimate lies at the edge of the search bracket");
    }
    return r;
}

} // namespace netpe::fit
