#include "mpk/difference_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "mpk/binary_io.hpp"
#include "mpk/error.hpp"
#include "mpk/parallel.hpp"

namespace mpk {

namespace {

struct Entry {
    double reward;
    std::uint64_t index;
};

// True when a ranks strictly above b.
bool better(const Entry& a, const Entry& b) noexcept {
    return a.reward > b.reward || (a.reward == b.reward && a.index < b.index);
}

// Min-heap on rank: top() is the worst retained entry.
struct WorseFirst {
    bool operator()(const Entry& a, const Entry& b) const noexcept { return better(a, b); }
};

using Heap = std::priority_queue<Entry, std::vector<Entry>, WorseFirst>;

void offer(Heap& heap, std::uint64_t k, const Entry& e) {
    if (heap.size() < k) {
        heap.push(e);
    } else if (better(e, heap.top())) {
        heap.pop();
        heap.push(e);
    }
}

SelectionResult finish(Heap& heap, std::uint64_t k) {
    SelectionResult out;
    out.k = k;
    out.cutoff = heap.top().reward;
    out.indices.reserve(heap.size());
    while (!heap.empty()) {
        out.indices.push_back(heap.top().index);
        heap.pop();
    }
    std::sort(out.indices.begin(), out.indices.end());
    return out;
}

void check_rewards(std::span<const double> rewards) {
    if (rewards.empty()) throw InputError("select_topk: empty reward vector");
    for (double r : rewards)
        if (std::isnan(r)) throw InputError("select_topk: NaN reward");
}

}  // namespace

std::uint64_t resolve_k(const SamplingConfig& config, std::size_t n) {
    if (config.k) {
        if (*config.k < 1 || *config.k > n)
            throw ConfigError("sampler: K=" + std::to_string(*config.k) + " outside [1, " + std::to_string(n) + "]");
        return *config.k;
    }
    if (!(config.alpha > 0.0 && config.alpha <= 1.0)) throw ConfigError("sampler: alpha must be in (0, 1]");
    // The relative nudge keeps products like 0.3 * 10 from flooring to 2.
    const double raw = std::floor(config.alpha * static_cast<double>(n) * (1.0 + 1e-12));
    return std::clamp<std::uint64_t>(static_cast<std::uint64_t>(raw), 1, n);
}

SelectionResult select_topk(std::span<const double> rewards, const SamplingConfig& config) {
    check_rewards(rewards);
    const auto k = resolve_k(config, rewards.size());
    Heap heap;
    for (std::uint64_t i = 0; i < rewards.size(); ++i) offer(heap, k, {rewards[i], i});
    return finish(heap, k);
}

SelectionResult select_topk_sharded(std::span<const double> rewards, const SamplingConfig& config,
                                    std::size_t workers) {
    check_rewards(rewards);
    const auto k = resolve_k(config, rewards.size());
    workers = std::clamp<std::size_t>(workers, 1, rewards.size());
    std::vector<std::vector<Entry>> winners(workers);
    parallel_for(workers, workers, [&](std::size_t wb, std::size_t we) {
        for (std::size_t w = wb; w < we; ++w) {
            const std::size_t begin = rewards.size() * w / workers;
            const std::size_t end = rewards.size() * (w + 1) / workers;
            Heap heap;
            for (std::size_t i = begin; i < end; ++i) offer(heap, k, {rewards[i], i});
            while (!heap.empty()) {
                winners[w].push_back(heap.top());
                heap.pop();
            }
        }
    });
    Heap merged;
    for (const auto& shard : winners)
        for (const auto& e : shard) offer(merged, k, e);
    return finish(merged, k);
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InputError("quantile: empty input");
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile: q must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

RegionPartition partition_regions(std::span<const double> rewards, const SelectionResult& selection,
                                  double hard_quantile) {
    if (!(hard_quantile >= 0.0 && hard_quantile <= 1.0))
        throw ConfigError("partition_regions: hard quantile must be in [0, 1]");
    std::vector<char> selected(rewards.size(), 0);
    std::vector<double> sel_rewards;
    sel_rewards.reserve(selection.indices.size());
    for (auto i : selection.indices) {
        if (i >= rewards.size()) throw InputError("partition_regions: selected index out of range");
        selected[i] = 1;
        sel_rewards.push_back(rewards[i]);
    }
    RegionPartition out;
    out.hard_threshold = sel_rewards.empty() ? 0.0 : quantile(sel_rewards, hard_quantile);
    for (std::uint64_t i = 0; i < rewards.size(); ++i) {
        const double r = rewards[i];
        if (r < 0.0) out.noise.push_back(i);
        else if (selected[i] && r >= out.hard_threshold) out.hard.push_back(i);
        else out.easy.push_back(i);
    }
    return out;
}

nlohmann::json selection_report(std::span<const double> rewards, const SelectionResult& selection,
                                const RegionPartition& partition, std::span<const InstanceLabel> labels) {
    if (!labels.empty() && labels.size() != rewards.size())
        throw InputError("selection_report: labels are not aligned with rewards");
    using nlohmann::json;
    const auto n = rewards.size();
    const auto [mn_it, mx_it] = std::minmax_element(rewards.begin(), rewards.end());
    const double lo = n ? *mn_it : 0.0;
    const double hi = n ? *mx_it : 0.0;
    std::vector<std::uint64_t> bins(kHistogramBins, 0);
    const double width = (hi - lo) / static_cast<double>(kHistogramBins);
    for (double r : rewards) {
        std::size_t b = width > 0.0 ? static_cast<std::size_t>((r - lo) / width) : 0;
        bins[std::min(b, kHistogramBins - 1)] += 1;
    }

    const double denom = n ? static_cast<double>(n) : 1.0;
    json regions = json::object();
    regions["noise"] = {{"count", partition.noise.size()}, {"fraction", partition.noise.size() / denom}};
    regions["hard"] = {{"count", partition.hard.size()}, {"fraction", partition.hard.size() / denom}};
    regions["easy"] = {{"count", partition.easy.size()}, {"fraction", partition.easy.size() / denom}};

    json report = {
        {"n", n},
        {"k", selection.k},
        {"cutoff", selection.cutoff},
        {"hard_threshold", partition.hard_threshold},
        {"histogram", {{"min", lo}, {"max", hi}, {"bins", kHistogramBins}, {"counts", bins}}},
        {"regions", regions},
    };

    if (!labels.empty()) {
        std::vector<char> selected(n, 0);
        for (auto i : selection.indices) selected[i] = 1;
        std::vector<char> region(n, 'e');
        for (auto i : partition.noise) region[i] = 'n';
        for (auto i : partition.hard) region[i] = 'h';
        json by_label = json::object();
        for (auto label : {InstanceLabel::easy, InstanceLabel::hard, InstanceLabel::noise}) {
            std::uint64_t total = 0, kept = 0, in_noise = 0, in_hard = 0, in_easy = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (labels[i] != label) continue;
                ++total;
                kept += selected[i];
                in_noise += region[i] == 'n';
                in_hard += region[i] == 'h';
                in_easy += region[i] == 'e';
            }
            const double t = total ? static_cast<double>(total) : 1.0;
            by_label[to_string(label)] = {
                {"count", total},
                {"selected", kept},
                {"selected_rate", kept / t},
                {"excluded_rate", (total - kept) / t},
                {"region_counts", {{"noise", in_noise}, {"hard", in_hard}, {"easy", in_easy}}},
            };
        }
        // Precision/recall of each diagnostic region against the matching label.
        json agreement = json::object();
        const std::pair<const char*, std::pair<char, InstanceLabel>> pairs[] = {
            {"noise", {'n', InstanceLabel::noise}},
            {"hard", {'h', InstanceLabel::hard}},
            {"easy", {'e', InstanceLabel::easy}},
        };
        for (const auto& [name, rl] : pairs) {
            std::uint64_t tp = 0, in_region = 0, with_label = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const bool a = region[i] == rl.first;
                const bool b = labels[i] == rl.second;
                tp += a && b;
                in_region += a;
                with_label += b;
            }
            agreement[name] = {
                {"precision", in_region ? static_cast<double>(tp) / in_region : 0.0},
                {"recall", with_label ? static_cast<double>(tp) / with_label : 0.0},
            };
        }
        report["labels"] = by_label;
        report["region_vs_label"] = agreement;
    }
    return report;
}

std::string encode_selection(const SelectionResult& s) {
    ByteWriter w;
    w.magic("MPKI");
    w.u32(1);
    w.u64(s.indices.size());
    w.array(std::span<const std::uint64_t>(s.indices));
    return std::move(w).take();
}

SelectionResult decode_selection(std::string_view bytes, const std::string& what) {
    ByteReader r(bytes, what);
    r.expect_magic("MPKI");
    if (auto v = r.u32(); v != 1) throw InputError(what + ": unsupported selection version " + std::to_string(v));
    SelectionResult out;
    out.k = r.u64();
    if (out.k != r.remaining() / 8 || r.remaining() % 8 != 0)
        throw InputError(what + ": K does not match the number of stored indices");
    out.indices.resize(out.k);
    r.array(std::span<std::uint64_t>(out.indices));
    r.expect_end();
    for (std::size_t i = 1; i < out.indices.size(); ++i)
        if (out.indices[i] <= out.indices[i - 1]) throw InputError(what + ": indices not strictly increasing");
    return out;
}

void save_selection(const std::filesystem::path& path, const SelectionResult& selection) {
    write_file_atomic(path, encode_selection(selection));
}

SelectionResult load_selection(const std::filesystem::path& path) {
    return decode_selection(read_file(path), path.string());
}

}  // namespace mpk
