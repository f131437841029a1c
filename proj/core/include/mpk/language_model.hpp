#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mpk/corpus.hpp"

namespace mpk {

/// Autoregressive next-token model over a fixed vocabulary.
///
/// Contexts passed to the scorer always start with BOS followed by the
/// already-seen tokens of the instance, i.e. [BOS, x_1, ..., x_{t-1}].
/// Implementations must be safe to call concurrently on a const object.
class Scorer {
public:
    virtual ~Scorer() = default;

    virtual std::string_view kind_name() const noexcept = 0;
    virtual const VocabularyPtr& vocabulary_ptr() const noexcept = 0;
    const Vocabulary& vocabulary() const noexcept { return *vocabulary_ptr(); }

    /// Writes p(. | context) into `out` (size = vocabulary size).
    virtual void next_token_dist(std::span<const TokenId> context, std::span<double> out) const = 0;

    /// Natural log of p(next | context).
    virtual double log_prob(std::span<const TokenId> context, TokenId next) const;

    /// Number of stored parameters (n-gram: count entries; neural: reals).
    virtual std::uint64_t parameter_count() const noexcept = 0;

    /// Feature-extractor hook: the token's embedding row, when the model has one.
    virtual std::optional<std::span<const double>> embedding(TokenId) const { return std::nullopt; }
};

// --- interpolated n-gram ---------------------------------------------------

struct NGramParams {
    std::uint32_t order = 2;
    std::vector<double> lambdas{0.5, 0.5};  // lambdas[j] weights order j+1
    double add_k = 0.01;                    // additive smoothing at the unigram level
};

/// Jelinek-Mercer interpolated n-gram.
///
///   p(v | h) = sum_j lambda_j * p~_j(v | h)
///
/// p~_1 is the add-k unigram; for j >= 2, p~_j is the MLE conditional on the
/// last j-1 tokens of h, or p~_{j-1} when that context was never observed.
/// Contexts shorter than j-1 are left-padded with BOS.
class NGramModel final : public Scorer {
public:
    struct Successors {
        std::uint64_t total = 0;
        std::vector<TokenId> tokens;         // ascending
        std::vector<std::uint64_t> counts;   // aligned with tokens
    };
    using ContextTable = std::unordered_map<std::string, Successors>;

    NGramModel(VocabularyPtr vocab, NGramParams params);

    std::string_view kind_name() const noexcept override { return "ngram"; }
    const VocabularyPtr& vocabulary_ptr() const noexcept override { return vocab_; }
    void next_token_dist(std::span<const TokenId> context, std::span<double> out) const override;
    double log_prob(std::span<const TokenId> context, TokenId next) const override;
    std::uint64_t parameter_count() const noexcept override;

    const NGramParams& params() const noexcept { return params_; }
    std::span<const std::uint64_t> unigram_counts() const noexcept { return unigram_; }
    std::uint64_t unigram_total() const noexcept { return unigram_total_; }
    /// Table for order j (j >= 2), keyed by the packed (j-1)-token context.
    const ContextTable& table(std::uint32_t order) const { return tables_.at(order - 2); }

    /// Count of `next` after `context` at order context.size()+1.
    std::uint64_t count(std::span<const TokenId> context, TokenId next) const;

    void add_instance(std::span<const TokenId> instance);
    void add_count(std::span<const TokenId> context, TokenId next, std::uint64_t count);

    static std::string pack_key(std::span<const TokenId> ids);

private:
    std::string context_key(std::span<const TokenId> context, std::uint32_t len) const;
    const Successors* lookup(std::span<const TokenId> context, std::uint32_t len) const;
    double unigram_prob(TokenId v) const noexcept;

    VocabularyPtr vocab_;
    NGramParams params_;
    std::vector<std::uint64_t> unigram_;
    std::uint64_t unigram_total_ = 0;
    std::vector<ContextTable> tables_;
};

void validate(const NGramParams& params);

/// Counts every instance of `corpus` (BOS-padded contexts) into an n-gram.
NGramModel train_ngram(const PackedCorpus& corpus, const NGramParams& params);

// --- neural bigram ---------------------------------------------------------

/// logits(prev) = W * E[prev] + b; softmax over the vocabulary.
///
/// Parameters live in one contiguous vector laid out as [E (V x d), W (V x d), b (V)],
/// row-major, so optimizers and gradient checks can treat them uniformly.
class NeuralBigramModel final : public Scorer {
public:
    NeuralBigramModel(VocabularyPtr vocab, std::uint32_t dim);

    /// E and W ~ N(0, scale^2), b = 0.
    static NeuralBigramModel initialized(VocabularyPtr vocab, std::uint32_t dim, std::uint64_t seed,
                                         double scale = 0.02);

    std::string_view kind_name() const noexcept override { return "neural"; }
    const VocabularyPtr& vocabulary_ptr() const noexcept override { return vocab_; }
    void next_token_dist(std::span<const TokenId> context, std::span<double> out) const override;
    double log_prob(std::span<const TokenId> context, TokenId next) const override;
    std::uint64_t parameter_count() const noexcept override { return params_.size(); }
    std::optional<std::span<const double>> embedding(TokenId token) const override;

    std::uint32_t dim() const noexcept { return dim_; }
    std::uint32_t vocab_size() const noexcept { return vocab_size_; }

    std::span<const double> parameters() const noexcept { return params_; }
    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> embedding_matrix() const noexcept;
    std::span<const double> output_matrix() const noexcept;
    std::span<const double> bias() const noexcept;

    void logits(TokenId prev, std::span<double> out) const;

private:
    VocabularyPtr vocab_;
    std::uint32_t vocab_size_;
    std::uint32_t dim_;
    std::vector<double> params_;
};

/// In-place softmax; returns log of the normalizer (log-sum-exp).
double softmax_inplace(std::span<double> logits);

/// Gradient of -log softmax(logits)[target] with respect to the logits: q - onehot.
std::vector<double> softmax_xent_logit_grad(std::span<const double> logits, TokenId target);

enum class LossKind : std::uint8_t { cross_entropy, forward_kld };

struct TrainConfig {
    double learning_rate = 0.5;
    std::uint32_t epochs = 1;
    std::uint32_t batch_size = 16;
    std::uint64_t seed = 0;
    std::uint32_t dim = 16;
    double init_scale = 0.02;
};

void validate(const TrainConfig& config);

struct StepInfo {
    std::uint64_t step = 0;     // 1-based optimizer step
    std::uint64_t total_steps = 0;
    std::uint32_t epoch = 0;    // 0-based
    std::uint64_t tokens = 0;   // tokens consumed by this step
    double loss = 0.0;          // batch loss before the update
};

/// Called after each optimizer step; return false to stop training.
using StepHook = std::function<bool(const StepInfo&, const NeuralBigramModel&)>;

struct NeuralTrainResult {
    NeuralBigramModel model;
    std::vector<double> loss_curve;  // one batch loss per optimizer step
    std::uint64_t steps = 0;
    std::uint64_t tokens = 0;
};

/// Plain minibatch SGD on the instance-averaged per-token loss. For
/// LossKind::forward_kld `teacher` supplies the target distributions and the
/// per-position loss is KL(p_teacher || q). Instances are visited in a seeded
/// per-epoch shuffle; the last batch of an epoch may be short.
NeuralTrainResult train_neural(const PackedCorpus& corpus, const TrainConfig& config,
                               const StepHook& hook = {}, LossKind loss = LossKind::cross_entropy,
                               const Scorer* teacher = nullptr);

/// Instance-averaged per-token loss of `model` on `batch`; fills `grad`
/// (size = parameter_count) when non-empty.
double batch_loss_and_grad(const NeuralBigramModel& model, const PackedCorpus& batch,
                           std::span<const std::size_t> instances, std::span<double> grad,
                           LossKind loss = LossKind::cross_entropy, const Scorer* teacher = nullptr);

/// Maximum over all parameters of |analytic - numeric| / max(|analytic|, |numeric|),
/// numeric gradients by central differences with step `eps`. Pairs where both
/// magnitudes are below 1e-10 count as agreeing.
double grad_check(const NeuralBigramModel& model, const PackedCorpus& batch, double eps = 1e-5,
                  LossKind loss = LossKind::cross_entropy, const Scorer* teacher = nullptr);

// --- scoring primitives ----------------------------------------------------

/// Sum over t of log p(x_t | BOS, x_<t), in nats.
double sequence_log_prob(const Scorer& model, std::span<const TokenId> seq);

/// Mean over instances of the mean per-token negative log-likelihood.
double per_token_loss(const Scorer& model, const PackedCorpus& corpus, std::size_t workers = 1);

/// Ancestral sampling of `length` tokens after BOS + prefix (prefix excluded).
std::vector<TokenId> generate(const Scorer& model, std::span<const TokenId> prefix, std::size_t length,
                              std::uint64_t seed);

void require_same_vocabulary(const Vocabulary& a, const Vocabulary& b, std::string_view where);

// --- persistence -----------------------------------------------------------

std::string encode_model(const Scorer& model);
std::unique_ptr<Scorer> decode_model(std::string_view bytes, const std::string& what);
void save_model(const std::filesystem::path& path, const Scorer& model);
std::unique_ptr<Scorer> load_model(const std::filesystem::path& path);

}  // namespace mpk
