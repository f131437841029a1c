#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mpk/corpus.hpp"
#include "mpk/hash.hpp"
#include "mpk/language_model.hpp"

namespace mpk {

enum class Normalization : std::uint8_t { total = 0, per_token = 1 };

const char* to_string(Normalization n) noexcept;

/// One log-probability per corpus instance, in corpus order.
struct ScoreVector {
    Digest corpus_hash{};
    Normalization normalization = Normalization::total;
    std::vector<double> values;
};

/// r[i] = log p_teacher(x_i) - log p_ref(x_i).
struct RewardVector {
    Digest corpus_hash{};
    Normalization normalization = Normalization::total;
    std::vector<double> values;
};

/// Scores every instance of `corpus` on `workers` threads. Total scores are
/// sums of per-token log-probs; per-token scores divide by the sequence length.
ScoreVector score_corpus(const Scorer& model, const PackedCorpus& corpus, std::size_t workers = 1,
                         Normalization normalization = Normalization::total);

RewardVector compute_rewards(const ScoreVector& teacher, const ScoreVector& reference);

inline constexpr std::size_t kScoreHeaderBytes = 4 + 4 + 1 + 32 + 8;

std::string encode_scores(const ScoreVector& scores);
ScoreVector decode_scores(std::string_view bytes, const std::string& what);
std::string encode_rewards(const RewardVector& rewards);
RewardVector decode_rewards(std::string_view bytes, const std::string& what);

void save_scores(const std::filesystem::path& path, const ScoreVector& scores);
ScoreVector load_scores(const std::filesystem::path& path);
void save_rewards(const std::filesystem::path& path, const RewardVector& rewards);
RewardVector load_rewards(const std::filesystem::path& path);

}  // namespace mpk
