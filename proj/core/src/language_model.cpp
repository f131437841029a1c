#include "mpk/language_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mpk/binary_io.hpp"
#include "mpk/error.hpp"
#include "mpk/parallel.hpp"
#include "mpk/random.hpp"

namespace mpk {

namespace {

constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint8_t kKindNGram = 0;
constexpr std::uint8_t kKindNeural = 1;

void encode_vocab(ByteWriter& w, const Vocabulary& vocab) {
    w.u8(static_cast<std::uint8_t>(vocab.kind()));
    w.u32(vocab.size());
    if (vocab.kind() == VocabKind::word) {
        w.u32(vocab.word_count());
        for (const auto& s : vocab.word_list()) w.str(s);
    }
}

VocabularyPtr decode_vocab(ByteReader& r, const std::string& what) {
    const auto kind = r.u8();
    const auto size = r.u32();
    if (kind == static_cast<std::uint8_t>(VocabKind::byte)) {
        if (size != Vocabulary::kByteVocabSize) throw InputError(what + ": bad byte vocabulary size");
        return std::make_shared<const Vocabulary>(Vocabulary::bytes());
    }
    if (kind != static_cast<std::uint8_t>(VocabKind::word)) throw InputError(what + ": unknown vocabulary kind");
    const auto n = r.u32();
    if (n > r.remaining()) throw InputError(what + ": truncated vocabulary");
    std::vector<std::string> words;
    words.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) words.push_back(r.str());
    auto vocab = std::make_shared<const Vocabulary>(Vocabulary::words(std::move(words)));
    if (vocab->size() != size) throw InputError(what + ": vocabulary size mismatch");
    return vocab;
}

void encode_ngram(ByteWriter& w, const NGramModel& m) {
    const auto& p = m.params();
    w.u32(p.order);
    for (double l : p.lambdas) w.f64(l);
    w.f64(p.add_k);
    w.array(m.unigram_counts());
    for (std::uint32_t j = 2; j <= p.order; ++j) {
        // Sorted by packed key so the encoding is independent of hash order.
        std::map<std::string, const NGramModel::Successors*> sorted;
        for (const auto& [key, s] : m.table(j)) sorted.emplace(key, &s);
        w.u64(sorted.size());
        for (const auto& [key, s] : sorted) {
            w.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(key.data()), key.size()));
            w.u32(static_cast<std::uint32_t>(s->tokens.size()));
            for (std::size_t k = 0; k < s->tokens.size(); ++k) {
                w.u32(s->tokens[k]);
                w.u64(s->counts[k]);
            }
        }
    }
}

std::unique_ptr<Scorer> decode_ngram(ByteReader& r, VocabularyPtr vocab, const std::string& what) {
    NGramParams p;
    p.order = r.u32();
    if (p.order < 1 || p.order > 64) throw InputError(what + ": implausible n-gram order");
    p.lambdas.resize(p.order);
    for (auto& l : p.lambdas) l = r.f64();
    p.add_k = r.f64();
    auto model = std::make_unique<NGramModel>(vocab, p);
    std::vector<std::uint64_t> unigram(vocab->size());
    r.array(std::span<std::uint64_t>(unigram));
    for (TokenId v = 0; v < unigram.size(); ++v)
        if (unigram[v] > 0) model->add_count({}, v, unigram[v]);
    std::vector<TokenId> ctx;
    for (std::uint32_t j = 2; j <= p.order; ++j) {
        const auto contexts = r.u64();
        ctx.resize(j - 1);
        for (std::uint64_t c = 0; c < contexts; ++c) {
            r.array(std::span<TokenId>(ctx));
            const auto succ = r.u32();
            for (std::uint32_t k = 0; k < succ; ++k) {
                const auto tok = r.u32();
                const auto cnt = r.u64();
                if (tok >= vocab->size()) throw InputError(what + ": token id out of range");
                for (auto t : ctx)
                    if (t >= vocab->size()) throw InputError(what + ": context id out of range");
                model->add_count(ctx, tok, cnt);
            }
        }
    }
    return model;
}

}  // namespace

double Scorer::log_prob(std::span<const TokenId> context, TokenId next) const {
    std::vector<double> dist(vocabulary().size());
    next_token_dist(context, dist);
    if (next >= dist.size()) throw InputError("log_prob: token id out of range");
    return std::log(dist[next]);
}

void require_same_vocabulary(const Vocabulary& a, const Vocabulary& b, std::string_view where) {
    if (!(a == b))
        throw InputError(std::string(where) + ": vocabulary mismatch (sizes " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
}

double sequence_log_prob(const Scorer& model, std::span<const TokenId> seq) {
    const auto v = model.vocabulary().size();
    std::vector<TokenId> ctx;
    ctx.reserve(seq.size() + 1);
    ctx.push_back(model.vocabulary().bos());
    double total = 0.0;
    for (TokenId x : seq) {
        if (x >= v)
            throw InputError("sequence_log_prob: token id " + std::to_string(x) + " >= vocabulary size " +
                             std::to_string(v));
        total += model.log_prob(ctx, x);
        ctx.push_back(x);
    }
    return total;
}

double per_token_loss(const Scorer& model, const PackedCorpus& corpus, std::size_t workers) {
    if (corpus.empty()) throw InputError("per_token_loss: corpus is empty");
    std::vector<double> per_instance(corpus.size());
    const double len = static_cast<double>(corpus.seq_len());
    parallel_for(corpus.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) per_instance[i] = -sequence_log_prob(model, corpus.instance(i)) / len;
    });
    double sum = 0.0;
    for (double x : per_instance) sum += x;
    return sum / static_cast<double>(corpus.size());
}

std::vector<TokenId> generate(const Scorer& model, std::span<const TokenId> prefix, std::size_t length,
                              std::uint64_t seed) {
    if (length < 1) throw ConfigError("generate: length must be >= 1");
    Rng rng(seed);
    std::vector<TokenId> ctx;
    ctx.reserve(prefix.size() + length + 1);
    ctx.push_back(model.vocabulary().bos());
    ctx.insert(ctx.end(), prefix.begin(), prefix.end());
    std::vector<double> dist(model.vocabulary().size());
    std::vector<TokenId> out;
    out.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
        model.next_token_dist(ctx, dist);
        const auto tok = static_cast<TokenId>(rng.categorical(dist));
        out.push_back(tok);
        ctx.push_back(tok);
    }
    return out;
}

std::string encode_model(const Scorer& model) {
    ByteWriter w;
    w.magic("MPKM");
    w.u32(kModelVersion);
    if (const auto* ng = dynamic_cast<const NGramModel*>(&model)) {
        w.u8(kKindNGram);
        encode_vocab(w, ng->vocabulary());
        encode_ngram(w, *ng);
    } else if (const auto* nn = dynamic_cast<const NeuralBigramModel*>(&model)) {
        w.u8(kKindNeural);
        encode_vocab(w, nn->vocabulary());
        w.u32(nn->dim());
        w.array(nn->parameters());
    } else {
        throw ConfigError("encode_model: unsupported scorer kind " + std::string(model.kind_name()));
    }
    return std::move(w).take();
}

std::unique_ptr<Scorer> decode_model(std::string_view bytes, const std::string& what) {
    ByteReader r(bytes, what);
    r.expect_magic("MPKM");
    if (auto v = r.u32(); v != kModelVersion)
        throw InputError(what + ": unsupported model version " + std::to_string(v));
    const auto kind = r.u8();
    auto vocab = decode_vocab(r, what);
    std::unique_ptr<Scorer> model;
    if (kind == kKindNGram) {
        model = decode_ngram(r, vocab, what);
    } else if (kind == kKindNeural) {
        const auto dim = r.u32();
        if (dim == 0) throw InputError(what + ": zero embedding dimension");
        auto nn = std::make_unique<NeuralBigramModel>(vocab, dim);
        r.array(nn->parameters());
        model = std::move(nn);
    } else {
        throw InputError(what + ": unknown model kind " + std::to_string(kind));
    }
    r.expect_end();
    return model;
}

void save_model(const std::filesystem::path& path, const Scorer& model) {
    write_file_atomic(path, encode_model(model));
}

std::unique_ptr<Scorer> load_model(const std::filesystem::path& path) {
    return decode_model(read_file(path), path.string());
}

}  // namespace mpk
