#include "mpk/topk_theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "mpk/error.hpp"
#include "mpk/parallel.hpp"
#include "mpk/random.hpp"

namespace mpk {

namespace {

void check_distribution(std::span<const double> p, const char* name) {
    if (p.empty()) throw InputError(std::string(name) + ": empty distribution");
    double sum = 0.0;
    for (double v : p) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string(name) + ": probabilities must be positive");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InputError(std::string(name) + ": probabilities must sum to 1");
}

void check_rewards(std::span<const double> rewards, std::size_t size) {
    if (rewards.size() != size) throw InputError("space: rewards and probabilities differ in length");
    std::vector<double> sorted(rewards.begin(), rewards.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (!std::isfinite(sorted[i])) throw InputError("space: rewards must be finite");
        if (i > 0 && sorted[i] == sorted[i - 1]) throw InputError("space: rewards must be pairwise distinct");
    }
}

// Item indices by increasing reward.
std::vector<std::size_t> reward_order(std::span<const double> rewards) {
    std::vector<std::size_t> order(rewards.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return rewards[a] < rewards[b]; });
    return order;
}

// Items of the top-K draws, best first. counts is scratch of size |S|.
void top_items(Rng& rng, std::span<const double> p, std::uint64_t draws, std::uint64_t k,
               std::span<const std::size_t> order_desc, std::vector<std::uint64_t>& counts,
               std::vector<std::size_t>& out) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::uint64_t d = 0; d < draws; ++d) counts[rng.categorical(p)] += 1;
    out.clear();
    for (auto item : order_desc) {
        for (std::uint64_t c = 0; c < counts[item] && out.size() < k; ++c) out.push_back(item);
        if (out.size() == k) break;
    }
}

}  // namespace

void validate(const DiscreteSpace& space) {
    check_distribution(space.p1, "p1");
    check_distribution(space.p2, "p2");
    if (space.p1.size() != space.p2.size()) throw InputError("space: p1 and p2 differ in length");
    check_rewards(space.rewards, space.p1.size());
}

std::vector<double> argmax_dist_exact(std::span<const double> p, std::span<const double> rewards, std::uint64_t n) {
    if (n < 1) throw ConfigError("argmax_dist_exact: N must be >= 1");
    check_distribution(p, "p");
    check_rewards(rewards, p.size());
    if (n == 1) return {p.begin(), p.end()};
    std::vector<double> out(p.size());
    const double nd = static_cast<double>(n);
    double below = 0.0;  // P_X(x) - p(x): mass strictly below the current item
    for (auto item : reward_order(rewards)) {
        const double at_or_below = below + p[item];
        out[item] = std::pow(at_or_below, nd) - std::pow(below, nd);
        below = at_or_below;
    }
    return out;
}

double agreement_exact_k1(const DiscreteSpace& space, std::uint64_t n, std::uint64_t m) {
    validate(space);
    const auto a = argmax_dist_exact(space.p1, space.rewards, n);
    const auto b = argmax_dist_exact(space.p2, space.rewards, m);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

AgreementEstimate agreement_mc(const DiscreteSpace& space, std::uint64_t n, std::uint64_t m, std::uint64_t k,
                               std::uint64_t trials, std::uint64_t seed, std::size_t workers) {
    validate(space);
    if (n < 1 || m < 1) throw ConfigError("agreement_mc: N and M must be >= 1");
    if (k < 1 || k > std::min(n, m)) throw ConfigError("agreement_mc: K must be in [1, min(N, M)]");
    if (trials < 1) throw ConfigError("agreement_mc: trials must be >= 1");

    auto order = reward_order(space.rewards);
    std::reverse(order.begin(), order.end());
    std::vector<std::uint8_t> success(trials, 0);
    parallel_for(trials, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<std::uint64_t> counts(space.p1.size());
        std::vector<std::size_t> top_x, top_y;
        std::vector<double> rx, ry;
        for (std::size_t t = begin; t < end; ++t) {
            Rng rng(derive_seed(seed, t));
            top_items(rng, space.p1, n, k, order, counts, top_x);
            top_items(rng, space.p2, m, k, order, counts, top_y);
            const bool by_rank = top_x == top_y;
            rx.clear();
            ry.clear();
            for (auto i : top_x) rx.push_back(space.rewards[i]);
            for (auto i : top_y) ry.push_back(space.rewards[i]);
            std::sort(rx.begin(), rx.end());
            std::sort(ry.begin(), ry.end());
            const bool as_multiset = rx == ry;
            if (by_rank != as_multiset)
                throw std::logic_error("agreement_mc: rank-wise and multiset comparisons disagree");
            success[t] = by_rank;
        }
    });
    const auto hits = std::accumulate(success.begin(), success.end(), std::uint64_t{0});
    AgreementEstimate out;
    out.trials = trials;
    out.seed = seed;
    out.estimate = static_cast<double>(hits) / static_cast<double>(trials);
    out.stderr_ = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(trials));
    return out;
}

std::vector<SweepRow> convergence_sweep(const DiscreteSpace& space, std::uint64_t k,
                                        std::span<const std::uint64_t> ladder, const SweepOptions& options) {
    validate(space);
    if (ladder.empty()) throw ConfigError("convergence_sweep: empty size ladder");
    for (std::size_t i = 1; i < ladder.size(); ++i)
        if (ladder[i] <= ladder[i - 1]) throw ConfigError("convergence_sweep: ladder must be increasing");
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const auto size = ladder[i];
        SweepRow row{size, size, k, 0.0, 0.0, ""};
        if (k == 1) {
            row.agreement = agreement_exact_k1(space, size, size);
            row.method = "exact";
        } else {
            const auto est = agreement_mc(space, size, size, k, options.trials, derive_seed(options.seed, i),
                                          options.workers);
            row.agreement = est.estimate;
            row.stderr_ = est.stderr_;
            row.method = "mc";
        }
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
    std::string out = "n,m,k,agreement,stderr,method\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%llu,%llu,%llu,%.17g,%.17g,%s\n", static_cast<unsigned long long>(r.n),
                      static_cast<unsigned long long>(r.m), static_cast<unsigned long long>(r.k), r.agreement,
                      r.stderr_, r.method.c_str());
        out += buf;
    }
    return out;
}

}  // namespace mpk
