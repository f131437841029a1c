#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "mpk/error.hpp"
#include "mpk/language_model.hpp"

namespace mpk {

void validate(const NGramParams& params) {
    if (params.order < 1) throw ConfigError("ngram: order must be >= 1");
    if (params.lambdas.size() != params.order)
        throw ConfigError("ngram: expected " + std::to_string(params.order) + " interpolation weights, got " +
                          std::to_string(params.lambdas.size()));
    double sum = 0.0;
    for (double l : params.lambdas) {
        if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("ngram: interpolation weights must be >= 0");
        sum += l;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("ngram: interpolation weights must sum to 1");
    if (!(params.add_k >= 0.0) || !std::isfinite(params.add_k)) throw ConfigError("ngram: add_k must be >= 0");
}

NGramModel::NGramModel(VocabularyPtr vocab, NGramParams params)
    : vocab_(std::move(vocab)), params_(std::move(params)) {
    validate(params_);
    unigram_.assign(vocab_->size(), 0);
    tables_.resize(params_.order - 1);
}

std::string NGramModel::pack_key(std::span<const TokenId> ids) {
    std::string key(ids.size_bytes(), '\0');
    std::memcpy(key.data(), ids.data(), ids.size_bytes());
    return key;
}

std::string NGramModel::context_key(std::span<const TokenId> context, std::uint32_t len) const {
    std::vector<TokenId> ids(len, vocab_->bos());
    const std::size_t take = std::min<std::size_t>(len, context.size());
    std::copy(context.end() - static_cast<std::ptrdiff_t>(take), context.end(),
              ids.end() - static_cast<std::ptrdiff_t>(take));
    return pack_key(ids);
}

const NGramModel::Successors* NGramModel::lookup(std::span<const TokenId> context, std::uint32_t len) const {
    const auto& table = tables_[len - 1];
    auto it = table.find(context_key(context, len));
    if (it == table.end() || it->second.total == 0) return nullptr;
    return &it->second;
}

double NGramModel::unigram_prob(TokenId v) const noexcept {
    const double denom = static_cast<double>(unigram_total_) + params_.add_k * static_cast<double>(vocab_->size());
    return (static_cast<double>(unigram_[v]) + params_.add_k) / denom;
}

void NGramModel::add_count(std::span<const TokenId> context, TokenId next, std::uint64_t count) {
    if (next >= vocab_->size()) throw InputError("ngram: token id out of range");
    if (context.empty()) {
        unigram_[next] += count;
        unigram_total_ += count;
        return;
    }
    if (context.size() >= params_.order) throw InputError("ngram: context longer than order - 1");
    auto& s = tables_[context.size() - 1][pack_key(context)];
    auto it = std::lower_bound(s.tokens.begin(), s.tokens.end(), next);
    const auto pos = it - s.tokens.begin();
    if (it == s.tokens.end() || *it != next) {
        s.tokens.insert(it, next);
        s.counts.insert(s.counts.begin() + pos, 0);
    }
    s.counts[static_cast<std::size_t>(pos)] += count;
    s.total += count;
}

void NGramModel::add_instance(std::span<const TokenId> instance) {
    std::vector<TokenId> ctx;
    ctx.reserve(instance.size() + params_.order);
    ctx.assign(std::max<std::uint32_t>(params_.order - 1, 1), vocab_->bos());
    for (TokenId x : instance) {
        add_count({}, x, 1);
        for (std::uint32_t len = 1; len < params_.order; ++len)
            add_count(std::span<const TokenId>(ctx.data() + ctx.size() - len, len), x, 1);
        ctx.push_back(x);
    }
}

std::uint64_t NGramModel::count(std::span<const TokenId> context, TokenId next) const {
    if (context.empty()) return next < unigram_.size() ? unigram_[next] : 0;
    if (context.size() >= params_.order) return 0;
    const auto& table = tables_[context.size() - 1];
    auto it = table.find(pack_key(context));
    if (it == table.end()) return 0;
    const auto& s = it->second;
    auto t = std::lower_bound(s.tokens.begin(), s.tokens.end(), next);
    if (t == s.tokens.end() || *t != next) return 0;
    return s.counts[static_cast<std::size_t>(t - s.tokens.begin())];
}

double NGramModel::log_prob(std::span<const TokenId> context, TokenId next) const {
    if (next >= vocab_->size()) throw InputError("ngram: token id out of range");
    double cur = unigram_prob(next);
    double acc = params_.lambdas[0] * cur;
    for (std::uint32_t j = 2; j <= params_.order; ++j) {
        if (const auto* s = lookup(context, j - 1)) {
            auto t = std::lower_bound(s->tokens.begin(), s->tokens.end(), next);
            const bool hit = t != s->tokens.end() && *t == next;
            cur = hit ? static_cast<double>(s->counts[static_cast<std::size_t>(t - s->tokens.begin())]) /
                            static_cast<double>(s->total)
                      : 0.0;
        }
        acc += params_.lambdas[j - 1] * cur;
    }
    return std::log(acc);
}

void NGramModel::next_token_dist(std::span<const TokenId> context, std::span<double> out) const {
    const std::size_t v = vocab_->size();
    std::vector<double> cur(v);
    for (std::size_t i = 0; i < v; ++i) {
        cur[i] = unigram_prob(static_cast<TokenId>(i));
        out[i] = params_.lambdas[0] * cur[i];
    }
    for (std::uint32_t j = 2; j <= params_.order; ++j) {
        if (const auto* s = lookup(context, j - 1)) {
            std::fill(cur.begin(), cur.end(), 0.0);
            const double total = static_cast<double>(s->total);
            for (std::size_t k = 0; k < s->tokens.size(); ++k)
                cur[s->tokens[k]] = static_cast<double>(s->counts[k]) / total;
        }
        const double lambda = params_.lambdas[j - 1];
        for (std::size_t i = 0; i < v; ++i) out[i] += lambda * cur[i];
    }
}

std::uint64_t NGramModel::parameter_count() const noexcept {
    std::uint64_t n = unigram_.size();
    for (const auto& table : tables_)
        for (const auto& [key, s] : table) n += s.tokens.size();
    return n;
}

NGramModel train_ngram(const PackedCorpus& corpus, const NGramParams& params) {
    validate(params);
    if (corpus.empty()) throw InputError("train_ngram: corpus is empty");
    NGramModel model(corpus.vocabulary_ptr(), params);
    for (std::size_t i = 0; i < corpus.size(); ++i) model.add_instance(corpus.instance(i));
    return model;
}

}  // namespace mpk
