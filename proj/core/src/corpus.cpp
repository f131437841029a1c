#include "mpk/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mpk/binary_io.hpp"
#include "mpk/error.hpp"
#include "mpk/parallel.hpp"
#include "mpk/random.hpp"

namespace mpk {

namespace {

constexpr std::uint32_t kCorpusVersion = 1;

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

template <typename Fn>
void for_each_word(std::string_view text, Fn&& fn) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        const std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) fn(text.substr(start, i - start));
    }
}

}  // namespace

// --- Vocabulary --------------------------------------------------------------

Vocabulary Vocabulary::bytes() {
    Vocabulary v;
    v.kind_ = VocabKind::byte;
    v.regular_ = 256;
    v.size_ = kByteVocabSize;
    return v;
}

Vocabulary Vocabulary::words(std::vector<std::string> words) {
    Vocabulary v;
    v.kind_ = VocabKind::word;
    v.regular_ = static_cast<std::uint32_t>(words.size());
    v.size_ = v.regular_ + 4;
    v.words_ = std::move(words);
    v.index_.reserve(v.words_.size());
    for (std::uint32_t i = 0; i < v.regular_; ++i) {
        if (v.words_[i].empty()) throw InputError("vocabulary: empty word at id " + std::to_string(i));
        if (!v.index_.emplace(v.words_[i], i).second)
            throw InputError("vocabulary: duplicate word \"" + v.words_[i] + "\"");
    }
    return v;
}

std::optional<TokenId> Vocabulary::unk() const noexcept {
    if (kind_ == VocabKind::word) return regular_ + 3;
    return std::nullopt;
}

std::optional<TokenId> Vocabulary::find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

TokenId Vocabulary::encode_word(std::string_view word) const {
    if (auto id = find(word)) return *id;
    return regular_ + 3;
}

std::string Vocabulary::to_sidecar() const {
    std::string out;
    for (std::uint32_t i = 0; i < regular_; ++i) {
        out += words_[i];
        out += '\t';
        out += std::to_string(i);
        out += '\n';
    }
    return out;
}

Vocabulary Vocabulary::from_sidecar(std::string_view text, const std::string& what) {
    std::vector<std::string> words;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.rfind('\t');
        if (tab == std::string_view::npos)
            throw InputError(what + ":" + std::to_string(line_no) + ": expected token<TAB>id");
        std::uint64_t id = 0;
        for (char c : line.substr(tab + 1)) {
            if (c < '0' || c > '9')
                throw InputError(what + ":" + std::to_string(line_no) + ": bad id");
            id = id * 10 + static_cast<std::uint64_t>(c - '0');
        }
        if (id != words.size())
            throw InputError(what + ":" + std::to_string(line_no) + ": ids must be dense and ordered");
        words.emplace_back(line.substr(0, tab));
    }
    return Vocabulary::words(std::move(words));
}

Digest Vocabulary::fingerprint() const {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(kind_));
    w.u32(size_);
    for (const auto& s : words_) w.str(s);
    return sha256(w.bytes());
}

// --- PackedCorpus ------------------------------------------------------------

PackedCorpus::PackedCorpus(VocabularyPtr vocab, std::uint32_t seq_len, std::vector<TokenId> tokens)
    : vocab_(std::move(vocab)), seq_len_(seq_len), count_(0), tokens_(std::move(tokens)) {
    if (!vocab_) throw ConfigError("corpus: null vocabulary");
    if (seq_len_ < 1) throw ConfigError("corpus: seq_len must be positive");
    if (tokens_.size() % seq_len_ != 0)
        throw InputError("corpus: token count " + std::to_string(tokens_.size()) +
                         " is not a multiple of seq_len " + std::to_string(seq_len_));
    count_ = tokens_.size() / seq_len_;
    const auto v = vocab_->size();
    for (std::size_t i = 0; i < tokens_.size(); ++i)
        if (tokens_[i] >= v)
            throw InputError("corpus: token id " + std::to_string(tokens_[i]) + " at offset " +
                             std::to_string(i) + " exceeds vocabulary size " + std::to_string(v));
}

PackedCorpus PackedCorpus::subset(std::span<const std::size_t> indices) const {
    std::vector<TokenId> out;
    out.reserve(indices.size() * seq_len_);
    for (auto i : indices) {
        if (i >= count_) throw InputError("corpus subset: index " + std::to_string(i) + " out of range");
        auto inst = instance(i);
        out.insert(out.end(), inst.begin(), inst.end());
    }
    return PackedCorpus(vocab_, seq_len_, std::move(out));
}

// --- tokenization ------------------------------------------------------------

std::vector<TokenId> encode_bytes(std::string_view text) {
    std::vector<TokenId> out(text.size());
    std::transform(text.begin(), text.end(), out.begin(),
                   [](char c) { return static_cast<TokenId>(static_cast<unsigned char>(c)); });
    return out;
}

std::string decode_bytes(std::span<const TokenId> tokens) {
    std::string out;
    out.reserve(tokens.size());
    for (auto t : tokens)
        if (t < 256) out.push_back(static_cast<char>(static_cast<unsigned char>(t)));
    return out;
}

TokenStream ingest_and_tokenize(std::span<const std::filesystem::path> paths, VocabKind kind,
                                std::size_t workers, VocabularyPtr fixed_vocab) {
    if (fixed_vocab && fixed_vocab->kind() != kind)
        throw ConfigError("ingest: fixed vocabulary kind does not match requested kind");

    std::vector<std::string> docs(paths.size());
    parallel_for(paths.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) docs[i] = read_file(paths[i]);
    });

    VocabularyPtr vocab = fixed_vocab;
    if (!vocab) {
        if (kind == VocabKind::byte) {
            vocab = std::make_shared<const Vocabulary>(Vocabulary::bytes());
        } else {
            std::map<std::string, std::uint64_t, std::less<>> counts;
            for (const auto& d : docs)
                for_each_word(d, [&](std::string_view w) {
                    auto it = counts.find(w);
                    if (it == counts.end()) counts.emplace(std::string(w), 1);
                    else ++it->second;
                });
            std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
            // std::map iteration is lexicographic, so a stable sort on count
            // leaves ties in lexicographic order.
            std::stable_sort(ranked.begin(), ranked.end(),
                             [](const auto& a, const auto& b) { return a.second > b.second; });
            std::vector<std::string> words;
            words.reserve(ranked.size());
            for (auto& [w, c] : ranked) words.push_back(std::move(w));
            vocab = std::make_shared<const Vocabulary>(Vocabulary::words(std::move(words)));
        }
    }

    std::vector<std::vector<TokenId>> per_doc(docs.size());
    parallel_for(docs.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if (kind == VocabKind::byte) {
                per_doc[i] = encode_bytes(docs[i]);
            } else {
                for_each_word(docs[i], [&](std::string_view w) { per_doc[i].push_back(vocab->encode_word(w)); });
            }
        }
    });

    TokenStream out{vocab, {}};
    bool first = true;
    for (auto& toks : per_doc) {
        if (toks.empty()) continue;
        if (!first) out.tokens.push_back(vocab->eos());
        out.tokens.insert(out.tokens.end(), toks.begin(), toks.end());
        first = false;
    }
    return out;
}

PackResult pack_sequences(const TokenStream& stream, std::uint32_t seq_len) {
    if (seq_len < 2) throw ConfigError("pack_sequences: seq_len must be >= 2, got " + std::to_string(seq_len));
    if (!stream.vocab) throw ConfigError("pack_sequences: stream has no vocabulary");
    const std::size_t count = stream.tokens.size() / seq_len;
    const std::size_t used = count * seq_len;
    std::vector<TokenId> tokens(stream.tokens.begin(), stream.tokens.begin() + static_cast<std::ptrdiff_t>(used));
    return PackResult{PackedCorpus(stream.vocab, seq_len, std::move(tokens)), stream.tokens.size() - used};
}

CorpusSplit uniform_split(const PackedCorpus& corpus, const SplitSpec& spec) {
    if (corpus.empty()) throw InputError("uniform_split: corpus is empty");
    if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0))
        throw ConfigError("uniform_split: fraction must lie in [0, 1]");
    const std::size_t n = corpus.size();
    const auto n_ref = static_cast<std::size_t>(std::llround(spec.fraction * static_cast<double>(n)));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed);
    rng.shuffle(order.begin(), order.end());

    std::vector<std::size_t> ref(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_ref));
    std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(n_ref), order.end());
    std::sort(ref.begin(), ref.end());
    std::sort(rest.begin(), rest.end());
    auto ref_corpus = corpus.subset(ref);
    auto rest_corpus = corpus.subset(rest);
    return CorpusSplit{std::move(ref_corpus), std::move(rest_corpus), std::move(ref), std::move(rest)};
}

// --- labels ------------------------------------------------------------------

const char* to_string(InstanceLabel label) noexcept {
    switch (label) {
        case InstanceLabel::easy: return "easy";
        case InstanceLabel::hard: return "hard";
        case InstanceLabel::noise: return "noise";
    }
    return "?";
}

InstanceLabel parse_label(std::string_view s) {
    if (s == "easy") return InstanceLabel::easy;
    if (s == "hard") return InstanceLabel::hard;
    if (s == "noise") return InstanceLabel::noise;
    throw InputError("unknown instance label \"" + std::string(s) + "\"");
}

std::string encode_labels(std::span<const InstanceLabel> labels) {
    std::string out;
    for (auto l : labels) {
        out += to_string(l);
        out += '\n';
    }
    return out;
}

std::vector<InstanceLabel> decode_labels(std::string_view text, const std::string& what) {
    std::vector<InstanceLabel> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) continue;
        try {
            out.push_back(parse_label(line));
        } catch (const InputError& e) {
            throw InputError(what + ": " + e.what());
        }
    }
    return out;
}

// --- persistence -------------------------------------------------------------

std::string encode_corpus(const PackedCorpus& corpus) {
    ByteWriter w;
    w.magic("MPKC");
    w.u32(kCorpusVersion);
    w.u32(corpus.vocabulary().size());
    w.u32(corpus.seq_len());
    w.u64(corpus.size());
    w.array(corpus.tokens());
    return std::move(w).take();
}

PackedCorpus decode_corpus(std::string_view bytes, VocabularyPtr vocab, const std::string& what) {
    ByteReader r(bytes, what);
    r.expect_magic("MPKC");
    if (auto v = r.u32(); v != kCorpusVersion)
        throw InputError(what + ": unsupported corpus version " + std::to_string(v));
    const auto vocab_size = r.u32();
    const auto seq_len = r.u32();
    const auto count = r.u64();
    if (vocab->size() != vocab_size)
        throw InputError(what + ": header vocab_size " + std::to_string(vocab_size) +
                         " does not match vocabulary size " + std::to_string(vocab->size()));
    if (seq_len == 0) throw InputError(what + ": seq_len is zero");
    if (count > r.remaining() / (sizeof(TokenId) * seq_len))
        throw InputError(what + ": truncated token payload");
    std::vector<TokenId> tokens(count * seq_len);
    r.array(std::span<TokenId>(tokens));
    r.expect_end();
    return PackedCorpus(std::move(vocab), seq_len, std::move(tokens));
}

Digest corpus_digest(const PackedCorpus& corpus) { return sha256(encode_corpus(corpus)); }

std::filesystem::path vocab_sidecar_path(const std::filesystem::path& corpus_path) {
    auto p = corpus_path;
    p += ".vocab";
    return p;
}

void save_corpus(const std::filesystem::path& path, const PackedCorpus& corpus) {
    const auto sidecar = vocab_sidecar_path(path);
    if (corpus.vocabulary().kind() == VocabKind::word) {
        write_file_atomic(sidecar, corpus.vocabulary().to_sidecar());
    } else {
        // A leftover sidecar would make the byte-level corpus load as word-level.
        std::error_code ec;
        std::filesystem::remove(sidecar, ec);
    }
    write_file_atomic(path, encode_corpus(corpus));
}

PackedCorpus load_corpus(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const auto sidecar = vocab_sidecar_path(path);
    VocabularyPtr vocab;
    if (std::filesystem::exists(sidecar)) {
        vocab = std::make_shared<const Vocabulary>(Vocabulary::from_sidecar(read_file(sidecar), sidecar.string()));
    } else {
        vocab = std::make_shared<const Vocabulary>(Vocabulary::bytes());
    }
    return decode_corpus(bytes, std::move(vocab), path.string());
}

}  // namespace mpk
