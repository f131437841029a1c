#include "mpk/scaling_law.hpp"

#include <cmath>
#include <limits>

#include "mpk/error.hpp"

namespace mpk {

namespace {

double residual_loss(double r, const FitOptions& o) {
    if (!o.huber) return r * r;
    const double a = std::abs(r);
    return a <= o.huber_delta ? r * r : 2.0 * o.huber_delta * a - o.huber_delta * o.huber_delta;
}

struct Profile {
    PowerLawFit fit;
    bool ok = false;
};

// Weighted LS for (L_inf, A) at fixed alpha with nonnegativity clamping.
// Huber weights come from a few IRLS passes starting at plain LS.
Profile solve_linear(std::span<const double> c, std::span<const double> loss, double alpha, const FitOptions& o) {
    const std::size_t n = c.size();
    std::vector<double> x(n), w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::pow(c[i], -alpha);

    Profile out;
    out.fit.alpha = alpha;
    const int passes = o.huber ? 8 : 1;
    for (int pass = 0; pass < passes; ++pass) {
        double sw = 0, sx = 0, sy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sw += w[i];
            sx += w[i] * x[i];
            sy += w[i] * loss[i];
        }
        const double mx = sx / sw, my = sy / sw;
        double vxx = 0, vxy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            vxx += w[i] * (x[i] - mx) * (x[i] - mx);
            vxy += w[i] * (x[i] - mx) * (loss[i] - my);
            sxx += w[i] * x[i] * x[i];
            sxy += w[i] * x[i] * loss[i];
        }
        double a = vxx > 0.0 ? vxy / vxx : 0.0;
        double l_inf = my - a * mx;
        bool degenerate = false;
        if (!(a > 0.0)) {
            a = 0.0;
            l_inf = my;
            degenerate = true;
        }
        if (l_inf < 0.0) {
            // Refit A through the origin with L_inf pinned to zero.
            l_inf = 0.0;
            a = sxx > 0.0 ? sxy / sxx : 0.0;
            if (!(a > 0.0)) {
                a = 0.0;
                degenerate = true;
            }
        }
        out.fit.l_inf = l_inf;
        out.fit.a = a;
        out.fit.degenerate = degenerate;
        if (o.huber) {
            for (std::size_t i = 0; i < n; ++i) {
                const double r = std::abs(loss[i] - (l_inf + a * x[i]));
                w[i] = r <= o.huber_delta ? 1.0 : o.huber_delta / r;
            }
        }
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) sse += residual_loss(loss[i] - (out.fit.l_inf + out.fit.a * x[i]), o);
    out.fit.sse = sse;
    out.ok = std::isfinite(sse) && std::isfinite(out.fit.a) && std::isfinite(out.fit.l_inf);
    return out;
}

}  // namespace

PowerLawFit fit_power_law(std::span<const double> c, std::span<const double> loss, const FitOptions& o) {
    if (c.size() != loss.size()) throw InputError("fit_power_law: compute and loss columns differ in length");
    if (c.size() < kMinFitPoints)
        throw InputError("fit_power_law: need at least " + std::to_string(kMinFitPoints) + " points, got " +
                         std::to_string(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!(c[i] > 0.0) || !std::isfinite(c[i])) throw InputError("fit_power_law: compute values must be positive");
        if (i > 0 && !(c[i] > c[i - 1])) throw InputError("fit_power_law: compute values must be strictly increasing");
        if (!(loss[i] > 0.0) || !std::isfinite(loss[i])) throw InputError("fit_power_law: losses must be positive");
    }
    if (o.grid_points < 2 || !(o.alpha_min > 0.0) || !(o.alpha_max > o.alpha_min))
        throw ConfigError("fit_power_law: invalid alpha grid");

    const double log_lo = std::log(o.alpha_min), log_hi = std::log(o.alpha_max);
    std::vector<double> grid(o.grid_points);
    for (std::size_t g = 0; g < grid.size(); ++g)
        grid[g] = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(g) / static_cast<double>(grid.size() - 1));

    std::size_t best = grid.size();
    Profile best_profile;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        auto p = solve_linear(c, loss, grid[g], o);
        if (!p.ok) continue;
        // Strict improvement keeps the lowest alpha on ties.
        if (best == grid.size() || p.fit.sse < best_profile.fit.sse) {
            best = g;
            best_profile = p;
        }
    }
    if (best == grid.size() || (best_profile.fit.a == 0.0 && best_profile.fit.l_inf == 0.0))
        throw NumericalError("fit_power_law: no finite solution with an unclamped constant");

    // Golden-section on [alpha_{g-1}, alpha_{g+1}].
    double lo = grid[best == 0 ? 0 : best - 1];
    double hi = grid[std::min(best + 1, grid.size() - 1)];
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto eval = [&](double alpha) {
        auto p = solve_linear(c, loss, alpha, o);
        return p.ok ? p.fit.sse : std::numeric_limits<double>::infinity();
    };
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = eval(x1), f2 = eval(x2);
    while ((hi - lo) > o.refine_rel_width * 0.5 * (hi + lo)) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    auto refined = solve_linear(c, loss, 0.5 * (lo + hi), o);
    if (refined.ok && refined.fit.sse <= best_profile.fit.sse) best_profile = refined;
    return best_profile.fit;
}

double predict_loss(const PowerLawFit& fit, double c) {
    if (!(c > 0.0)) throw InputError("predict_loss: compute must be positive");
    return fit.l_inf + fit.a * std::pow(c, -fit.alpha);
}

double solve_compute_for_loss(const PowerLawFit& fit, double target) {
    if (!(target > fit.l_inf))
        throw NumericalError("target loss " + std::to_string(target) + " is not above the asymptote " +
                             std::to_string(fit.l_inf));
    if (!(fit.a > 0.0) || !(fit.alpha > 0.0)) throw NumericalError("solve: fit has no decreasing term");
    return std::pow(fit.a / (target - fit.l_inf), 1.0 / fit.alpha);
}

DataRequirement solve_data_constrained(const PowerLawFit& token_fit, double target, double repeat_cap) {
    if (!(repeat_cap >= 1.0)) throw ConfigError("solve_data_constrained: repeat cap must be >= 1");
    DataRequirement out;
    out.tokens = solve_compute_for_loss(token_fit, target);
    out.repeat_cap = repeat_cap;
    out.unique_tokens = out.tokens / repeat_cap;
    return out;
}

double fit_objective(const PowerLawFit& fit, std::span<const double> c, std::span<const double> loss,
                     const FitOptions& options) {
    double sse = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) sse += residual_loss(loss[i] - predict_loss(fit, c[i]), options);
    return sse;
}

nlohmann::json fit_report(const PowerLawFit& fit, const FitOptions& options, std::size_t points) {
    return {
        {"l_inf", fit.l_inf},
        {"a", fit.a},
        {"alpha", fit.alpha},
        {"sse", fit.sse},
        {"degenerate", fit.degenerate},
        {"points", points},
        {"grid", {{"points", options.grid_points}, {"alpha_min", options.alpha_min}, {"alpha_max", options.alpha_max},
                  {"refine_rel_width", options.refine_rel_width}, {"huber", options.huber},
                  {"huber_delta", options.huber_delta}}},
    };
}

}  // namespace mpk
