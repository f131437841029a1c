#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpk/corpus.hpp"

namespace mpk {

struct SamplingConfig {
    double alpha = 0.5;                 // in (0, 1]
    std::optional<std::uint64_t> k;     // overrides alpha when set
};

/// K = max(1, floor(alpha * N)) unless overridden; throws ConfigError when
/// alpha is out of (0, 1] or K is not in [1, N].
std::uint64_t resolve_k(const SamplingConfig& config, std::size_t n);

struct SelectionResult {
    std::vector<std::uint64_t> indices;  // ascending
    std::uint64_t k = 0;
    double cutoff = 0.0;                 // minimum selected reward
};

/// The K largest rewards under (reward descending, index ascending), found in
/// one pass with a size-K heap.
SelectionResult select_topk(std::span<const double> rewards, const SamplingConfig& config);

/// Same result as select_topk: per-shard top-K on `workers` contiguous shards,
/// then a merge of the shard winners.
SelectionResult select_topk_sharded(std::span<const double> rewards, const SamplingConfig& config,
                                    std::size_t workers);

struct RegionPartition {
    std::vector<std::uint64_t> noise;  // r < 0
    std::vector<std::uint64_t> hard;   // selected, r >= hard threshold, r >= 0
    std::vector<std::uint64_t> easy;   // everything else
    double hard_threshold = 0.0;

    std::size_t total() const noexcept { return noise.size() + hard.size() + easy.size(); }
};

inline constexpr double kDefaultHardQuantile = 0.8;

/// Linear-interpolation quantile (the usual "type 7") of `values`.
double quantile(std::vector<double> values, double q);

RegionPartition partition_regions(std::span<const double> rewards, const SelectionResult& selection,
                                  double hard_quantile = kDefaultHardQuantile);

inline constexpr std::size_t kHistogramBins = 64;

nlohmann::json selection_report(std::span<const double> rewards, const SelectionResult& selection,
                                const RegionPartition& partition,
                                std::span<const InstanceLabel> labels = {});

std::string encode_selection(const SelectionResult& selection);
/// Decodes indices and K; the cutoff is not stored and is left at 0.
SelectionResult decode_selection(std::string_view bytes, const std::string& what);
void save_selection(const std::filesystem::path& path, const SelectionResult& selection);
SelectionResult load_selection(const std::filesystem::path& path);

}  // namespace mpk
