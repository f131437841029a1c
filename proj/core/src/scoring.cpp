#include "mpk/scoring.hpp"

#include <cmath>

#include "mpk/binary_io.hpp"
#include "mpk/error.hpp"
#include "mpk/parallel.hpp"

namespace mpk {

namespace {

constexpr std::uint32_t kVersion = 1;

std::string encode_values(std::string_view magic, Normalization n, const Digest& hash,
                          const std::vector<double>& values) {
    ByteWriter w;
    w.magic(magic);
    w.u32(kVersion);
    w.u8(static_cast<std::uint8_t>(n));
    w.raw(hash);
    w.u64(values.size());
    w.array(std::span<const double>(values));
    return std::move(w).take();
}

template <typename Vec>
Vec decode_values(std::string_view magic, std::string_view bytes, const std::string& what) {
    ByteReader r(bytes, what);
    r.expect_magic(magic);
    if (auto v = r.u32(); v != kVersion) throw InputError(what + ": unsupported version " + std::to_string(v));
    Vec out;
    const auto flag = r.u8();
    if (flag > 1) throw InputError(what + ": bad normalization flag");
    out.normalization = static_cast<Normalization>(flag);
    out.corpus_hash = r.fixed<32>();
    const auto count = r.u64();
    if (count != r.remaining() / sizeof(double) || r.remaining() % sizeof(double) != 0)
        throw InputError(what + ": header count " + std::to_string(count) + " does not match payload");
    out.values.resize(count);
    r.array(std::span<double>(out.values));
    r.expect_end();
    for (double v : out.values)
        if (!std::isfinite(v)) throw InputError(what + ": non-finite value");
    return out;
}

}  // namespace

const char* to_string(Normalization n) noexcept {
    return n == Normalization::total ? "total" : "per_token";
}

ScoreVector score_corpus(const Scorer& model, const PackedCorpus& corpus, std::size_t workers,
                         Normalization normalization) {
    require_same_vocabulary(model.vocabulary(), corpus.vocabulary(), "score_corpus");
    ScoreVector out;
    out.corpus_hash = corpus_digest(corpus);
    out.normalization = normalization;
    out.values.resize(corpus.size());
    const double len = static_cast<double>(corpus.seq_len());
    parallel_for(corpus.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double lp = sequence_log_prob(model, corpus.instance(i));
            if (normalization == Normalization::per_token) lp /= len;
            if (!std::isfinite(lp)) throw NumericalError("score_corpus: non-finite score at instance " + std::to_string(i));
            out.values[i] = lp;
        }
    });
    return out;
}

RewardVector compute_rewards(const ScoreVector& teacher, const ScoreVector& reference) {
    if (teacher.values.size() != reference.values.size())
        throw InputError("compute_rewards: length mismatch (" + std::to_string(teacher.values.size()) + " vs " +
                         std::to_string(reference.values.size()) + ")");
    if (teacher.corpus_hash != reference.corpus_hash)
        throw InputError("compute_rewards: scores were computed on different corpora");
    if (teacher.normalization != reference.normalization)
        throw InputError("compute_rewards: normalization mismatch");
    RewardVector out{teacher.corpus_hash, teacher.normalization, {}};
    out.values.resize(teacher.values.size());
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = teacher.values[i] - reference.values[i];
        if (!std::isfinite(out.values[i])) throw NumericalError("compute_rewards: non-finite reward");
    }
    return out;
}

std::string encode_scores(const ScoreVector& s) {
    return encode_values("MPKS", s.normalization, s.corpus_hash, s.values);
}

ScoreVector decode_scores(std::string_view bytes, const std::string& what) {
    return decode_values<ScoreVector>("MPKS", bytes, what);
}

std::string encode_rewards(const RewardVector& r) {
    return encode_values("MPKR", r.normalization, r.corpus_hash, r.values);
}

RewardVector decode_rewards(std::string_view bytes, const std::string& what) {
    return decode_values<RewardVector>("MPKR", bytes, what);
}

void save_scores(const std::filesystem::path& path, const ScoreVector& scores) {
    write_file_atomic(path, encode_scores(scores));
}

ScoreVector load_scores(const std::filesystem::path& path) {
    return decode_scores(read_file(path), path.string());
}

void save_rewards(const std::filesystem::path& path, const RewardVector& rewards) {
    write_file_atomic(path, encode_rewards(rewards));
}

RewardVector load_rewards(const std::filesystem::path& path) {
    return decode_rewards(read_file(path), path.string());
}

}  // namespace mpk
