#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mpk/hash.hpp"

namespace mpk {

using TokenId = std::uint32_t;

enum class VocabKind : std::uint8_t { byte = 0, word = 1 };

/// Dense token id space. Regular tokens occupy [0, word_count()); the special
/// tokens BOS, EOS, PAD (and UNK for word-level) follow.
///
/// Byte-level: 256 byte values + BOS/EOS/PAD = 259 ids.
/// Word-level: n words ranked by corpus frequency, then BOS/EOS/PAD/UNK.
class Vocabulary {
public:
    static constexpr std::uint32_t kByteVocabSize = 259;

    static Vocabulary bytes();
    static Vocabulary words(std::vector<std::string> words);

    VocabKind kind() const noexcept { return kind_; }
    std::uint32_t size() const noexcept { return size_; }
    std::uint32_t word_count() const noexcept { return regular_; }
    TokenId bos() const noexcept { return regular_; }
    TokenId eos() const noexcept { return regular_ + 1; }
    TokenId pad() const noexcept { return regular_ + 2; }
    std::optional<TokenId> unk() const noexcept;
    bool is_special(TokenId id) const noexcept { return id >= regular_; }

    /// Word-level lookup; nullopt for out-of-vocabulary.
    std::optional<TokenId> find(std::string_view word) const;
    /// Word-level lookup mapping OOV to UNK.
    TokenId encode_word(std::string_view word) const;
    std::span<const std::string> word_list() const noexcept { return words_; }

    /// "token<TAB>id" lines for the regular words; specials are implied.
    std::string to_sidecar() const;
    static Vocabulary from_sidecar(std::string_view text, const std::string& what);

    Digest fingerprint() const;
    bool operator==(const Vocabulary& other) const noexcept {
        return kind_ == other.kind_ && size_ == other.size_ && words_ == other.words_;
    }

private:
    Vocabulary() = default;

    VocabKind kind_ = VocabKind::byte;
    std::uint32_t size_ = 0;
    std::uint32_t regular_ = 0;
    std::vector<std::string> words_;
    std::unordered_map<std::string, TokenId> index_;
};

using VocabularyPtr = std::shared_ptr<const Vocabulary>;

/// Fixed-length token instances over a shared vocabulary. Immutable after
/// construction; safe to share read-only between threads.
class PackedCorpus {
public:
    /// Validates that tokens.size() is a multiple of seq_len and every id is
    /// below the vocabulary size.
    PackedCorpus(VocabularyPtr vocab, std::uint32_t seq_len, std::vector<TokenId> tokens);

    const Vocabulary& vocabulary() const noexcept { return *vocab_; }
    const VocabularyPtr& vocabulary_ptr() const noexcept { return vocab_; }
    std::uint32_t seq_len() const noexcept { return seq_len_; }
    std::size_t size() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }
    std::uint64_t token_count() const noexcept { return tokens_.size(); }

    std::span<const TokenId> instance(std::size_t i) const {
        return std::span<const TokenId>(tokens_).subspan(i * seq_len_, seq_len_);
    }
    std::span<const TokenId> tokens() const noexcept { return tokens_; }

    /// Instances at `indices`, in the given order.
    PackedCorpus subset(std::span<const std::size_t> indices) const;

private:
    VocabularyPtr vocab_;
    std::uint32_t seq_len_;
    std::size_t count_;
    std::vector<TokenId> tokens_;
};

struct TokenStream {
    VocabularyPtr vocab;
    std::vector<TokenId> tokens;
};

/// Byte-level encoding of raw text; the identity on byte values.
std::vector<TokenId> encode_bytes(std::string_view text);
/// Inverse of encode_bytes; special ids are skipped.
std::string decode_bytes(std::span<const TokenId> tokens);

/// Reads each file as one document and concatenates their token streams,
/// inserting EOS between consecutive non-empty documents. Word-level splits on
/// ASCII whitespace and, unless `fixed_vocab` is given, builds the vocabulary
/// from the input (frequency descending, ties lexicographic). Files may be
/// tokenized on `workers` threads; output order is always file order.
TokenStream ingest_and_tokenize(std::span<const std::filesystem::path> paths, VocabKind kind,
                                std::size_t workers = 1, VocabularyPtr fixed_vocab = nullptr);

struct PackResult {
    PackedCorpus corpus;
    std::size_t dropped;  // trailing tokens that did not fill an instance
};

inline constexpr std::uint32_t kDefaultSeqLen = 1024;

PackResult pack_sequences(const TokenStream& stream, std::uint32_t seq_len = kDefaultSeqLen);

struct SplitSpec {
    double fraction = 0.0;
    std::uint64_t seed = 0;
};

struct CorpusSplit {
    PackedCorpus reference;
    PackedCorpus rest;
    std::vector<std::size_t> reference_indices;  // ascending
    std::vector<std::size_t> rest_indices;       // ascending
};

/// Seeded Fisher-Yates shuffle of [0, N); the first round(fraction * N)
/// shuffled indices form the reference subset. Both halves keep corpus order.
CorpusSplit uniform_split(const PackedCorpus& corpus, const SplitSpec& spec);

enum class InstanceLabel : std::uint8_t { easy = 0, hard = 1, noise = 2 };

const char* to_string(InstanceLabel label) noexcept;
InstanceLabel parse_label(std::string_view s);

/// Parameters for the labeled synthetic fixture.
///
/// `world_seed` fixes the generator itself (motifs and topic chains), so
/// corpora drawn with different `seed`s share one underlying language.
struct SyntheticMix {
    double easy_frac = 0.35;
    double hard_frac = 0.5;
    double noise_frac = 0.15;
    std::uint64_t seed = 0;
    std::uint64_t world_seed = 0x5eed;
    std::size_t count = 1000;
    std::uint32_t seq_len = 64;
    std::uint32_t vocab_words = 96;
};

struct SyntheticCorpus {
    PackedCorpus corpus;
    std::vector<InstanceLabel> labels;
};

/// Easy instances cycle through one short motif over a small pool of common
/// words (3% substituted); hard instances walk the second-order chain of one of
/// several topics, each over its own subset of the remaining words; noise
/// instances are i.i.d. uniform words.
SyntheticCorpus synth_corpus(const SyntheticMix& mix);

// --- persistence -----------------------------------------------------------

std::string encode_corpus(const PackedCorpus& corpus);
PackedCorpus decode_corpus(std::string_view bytes, VocabularyPtr vocab, const std::string& what);
/// SHA-256 of the MPKC encoding.
Digest corpus_digest(const PackedCorpus& corpus);

/// Writes `path` and, for word-level vocabularies, the sidecar `path.vocab`.
void save_corpus(const std::filesystem::path& path, const PackedCorpus& corpus);
/// Reads `path`; a sidecar `path.vocab` marks a word-level vocabulary,
/// otherwise the vocabulary must be byte-level.
PackedCorpus load_corpus(const std::filesystem::path& path);
std::filesystem::path vocab_sidecar_path(const std::filesystem::path& corpus_path);

std::string encode_labels(std::span<const InstanceLabel> labels);
std::vector<InstanceLabel> decode_labels(std::string_view text, const std::string& what);

}  // namespace mpk
