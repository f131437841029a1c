#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mpk {

/// Finite sample space with two sampling distributions and an injective reward.
struct DiscreteSpace {
    std::vector<double> p1;
    std::vector<double> p2;
    std::vector<double> rewards;
};

/// Throws InputError unless p1 and p2 are strictly positive, each sums to 1
/// within 1e-12, all three have the same length and the rewards are distinct.
void validate(const DiscreteSpace& space);

/// Distribution of the highest-reward item among N i.i.d. draws from p:
///   P(argmax = x) = P_X(x)^N - (P_X(x) - p(x))^N,  P_X(x) = sum_{r(y) <= r(x)} p(y).
std::vector<double> argmax_dist_exact(std::span<const double> p, std::span<const double> rewards, std::uint64_t n);

/// Probability that the best of N draws from p1 equals the best of M draws from p2.
double agreement_exact_k1(const DiscreteSpace& space, std::uint64_t n, std::uint64_t m);

struct AgreementEstimate {
    double estimate = 0.0;
    std::uint64_t trials = 0;
    double stderr_ = 0.0;  // sqrt(p(1-p)/trials)
    std::uint64_t seed = 0;
};

/// Monte-Carlo probability that the top-K (by reward) of N draws from p1 and
/// of M draws from p2 agree rank by rank. Trial t uses derive_seed(seed, t), so
/// the estimate does not depend on `workers`.
AgreementEstimate agreement_mc(const DiscreteSpace& space, std::uint64_t n, std::uint64_t m, std::uint64_t k,
                               std::uint64_t trials, std::uint64_t seed, std::size_t workers = 1);

struct SweepRow {
    std::uint64_t n = 0;
    std::uint64_t m = 0;
    std::uint64_t k = 0;
    double agreement = 0.0;
    double stderr_ = 0.0;
    std::string method;  // "exact" or "mc"
};

struct SweepOptions {
    std::uint64_t trials = 10000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

/// One row per ladder size with N = M = size. K = 1 rows are exact; K > 1 rows
/// are Monte-Carlo, rung i seeded with derive_seed(options.seed, i).
std::vector<SweepRow> convergence_sweep(const DiscreteSpace& space, std::uint64_t k,
                                        std::span<const std::uint64_t> ladder, const SweepOptions& options);

std::string sweep_to_csv(std::span<const SweepRow> rows);

}  // namespace mpk
