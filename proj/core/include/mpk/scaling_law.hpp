#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mpk {

/// L(C) = L_inf + A * C^(-alpha). Used with C = compute units or with
/// C = training tokens (the data-constrained form).
struct PowerLawFit {
    double l_inf = 0.0;
    double a = 0.0;
    double alpha = 0.0;
    double sse = 0.0;
    bool degenerate = false;  // A was clamped to its floor
};

struct FitOptions {
    std::size_t grid_points = 200;
    double alpha_min = 0.05;
    double alpha_max = 1.5;
    double refine_rel_width = 1e-6;
    bool huber = false;
    double huber_delta = 1e-3;
};

inline constexpr std::size_t kMinFitPoints = 4;

/// Profile fit: for fixed alpha the model is linear in (L_inf, A), solved by
/// least squares with both clamped to be nonnegative. Alpha is chosen on a
/// log-spaced grid and refined by golden-section search around the best node.
/// Throws InputError for fewer than 4 points, non-positive or non-increasing C,
/// and NumericalError when every grid point is non-finite or fully clamped.
/// A clamped A (e.g. a flat curve) is returned with `degenerate` set.
PowerLawFit fit_power_law(std::span<const double> c, std::span<const double> loss, const FitOptions& options = {});

double predict_loss(const PowerLawFit& fit, double c);

/// Inverse of predict_loss; throws NumericalError when target <= L_inf.
double solve_compute_for_loss(const PowerLawFit& fit, double target);

struct DataRequirement {
    double tokens = 0.0;         // N_d, counting repeats
    double unique_tokens = 0.0;  // N_d / repeat_cap
    double repeat_cap = 4.0;
};

DataRequirement solve_data_constrained(const PowerLawFit& token_fit, double target, double repeat_cap = 4.0);

/// SSE of `fit` on the points (Huber loss when options.huber).
double fit_objective(const PowerLawFit& fit, std::span<const double> c, std::span<const double> loss,
                     const FitOptions& options = {});

nlohmann::json fit_report(const PowerLawFit& fit, const FitOptions& options, std::size_t points);

}  // namespace mpk
