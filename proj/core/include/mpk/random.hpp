#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace mpk {

/// One step of the splitmix64 generator applied to `x` (golden-ratio increment,
/// then the standard avalanche finalizer).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for the `index`-th independent substream (trials, epochs, workers).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(seed ^ splitmix64(index));
}

/// Seed for a named stage stream, e.g. stream_seed(top, "split").
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view label) noexcept {
    return splitmix64(seed ^ fnv1a64(label));
}

/// mt19937_64 with platform-independent mappings to uniform integers, uniform
/// reals and normals (the std distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) by rejection of the biased tail; n > 0.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal via Box-Muller; the spare variate is cached.
    double normal();

    /// Index drawn from a probability vector by inverse CDF. Mass need not be
    /// exactly normalized; the last positive entry absorbs rounding.
    std::size_t categorical(std::span<const double> probs);

    template <typename It>
    void shuffle(It first, It last) {
        auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            auto j = uniform_index(i);
            using std::swap;
            swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mpk
