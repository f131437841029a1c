#include <algorithm>
#include <cmath>
#include <numeric>

#include "mpk/error.hpp"
#include "mpk/language_model.hpp"
#include "mpk/random.hpp"

namespace mpk {

NeuralBigramModel::NeuralBigramModel(VocabularyPtr vocab, std::uint32_t dim)
    : vocab_(std::move(vocab)), vocab_size_(vocab_->size()), dim_(dim) {
    if (dim_ == 0) throw ConfigError("neural: dim must be positive");
    params_.assign(2 * static_cast<std::size_t>(vocab_size_) * dim_ + vocab_size_, 0.0);
}

NeuralBigramModel NeuralBigramModel::initialized(VocabularyPtr vocab, std::uint32_t dim, std::uint64_t seed,
                                                 double scale) {
    NeuralBigramModel m(std::move(vocab), dim);
    Rng rng(seed);
    const std::size_t weights = 2 * static_cast<std::size_t>(m.vocab_size_) * dim;
    for (std::size_t i = 0; i < weights; ++i) m.params_[i] = scale * rng.normal();
    return m;
}

std::span<const double> NeuralBigramModel::embedding_matrix() const noexcept {
    return std::span<const double>(params_).subspan(0, static_cast<std::size_t>(vocab_size_) * dim_);
}

std::span<const double> NeuralBigramModel::output_matrix() const noexcept {
    const std::size_t vd = static_cast<std::size_t>(vocab_size_) * dim_;
    return std::span<const double>(params_).subspan(vd, vd);
}

std::span<const double> NeuralBigramModel::bias() const noexcept {
    return std::span<const double>(params_).subspan(2 * static_cast<std::size_t>(vocab_size_) * dim_, vocab_size_);
}

std::optional<std::span<const double>> NeuralBigramModel::embedding(TokenId token) const {
    if (token >= vocab_size_) throw InputError("neural: token id out of range");
    return embedding_matrix().subspan(static_cast<std::size_t>(token) * dim_, dim_);
}

void NeuralBigramModel::logits(TokenId prev, std::span<double> out) const {
    const auto h = embedding_matrix().subspan(static_cast<std::size_t>(prev) * dim_, dim_);
    const auto w = output_matrix();
    const auto b = bias();
    for (std::uint32_t v = 0; v < vocab_size_; ++v) {
        const double* row = w.data() + static_cast<std::size_t>(v) * dim_;
        double acc = b[v];
        for (std::uint32_t k = 0; k < dim_; ++k) acc += row[k] * h[k];
        out[v] = acc;
    }
}

void NeuralBigramModel::next_token_dist(std::span<const TokenId> context, std::span<double> out) const {
    const TokenId prev = context.empty() ? vocab_->bos() : context.back();
    logits(prev, out);
    softmax_inplace(out);
}

double NeuralBigramModel::log_prob(std::span<const TokenId> context, TokenId next) const {
    if (next >= vocab_size_) throw InputError("neural: token id out of range");
    const TokenId prev = context.empty() ? vocab_->bos() : context.back();
    std::vector<double> z(vocab_size_);
    logits(prev, z);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    return z[next] - mx - std::log(sum);
}

double softmax_inplace(std::span<double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (auto& v : logits) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : logits) v /= sum;
    return mx + std::log(sum);
}

std::vector<double> softmax_xent_logit_grad(std::span<const double> logits, TokenId target) {
    if (target >= logits.size()) throw InputError("softmax_xent_logit_grad: target out of range");
    std::vector<double> q(logits.begin(), logits.end());
    softmax_inplace(q);
    q[target] -= 1.0;
    return q;
}

void validate(const TrainConfig& config) {
    if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate))
        throw ConfigError("train: learning_rate must be finite and >= 0");
    if (config.epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (config.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (config.dim < 1) throw ConfigError("train: dim must be >= 1");
    if (!(config.init_scale >= 0.0)) throw ConfigError("train: init_scale must be >= 0");
}

double batch_loss_and_grad(const NeuralBigramModel& model, const PackedCorpus& batch,
                           std::span<const std::size_t> instances, std::span<double> grad, LossKind loss,
                           const Scorer* teacher) {
    if (instances.empty()) throw InputError("batch_loss_and_grad: empty batch");
    if (loss == LossKind::forward_kld && teacher == nullptr)
        throw ConfigError("forward-KLD loss requires a teacher");
    const std::size_t v_size = model.vocab_size();
    const std::size_t dim = model.dim();
    const std::size_t vd = v_size * dim;
    const bool want_grad = !grad.empty();
    if (want_grad) {
        if (grad.size() != model.parameter_count()) throw InputError("batch_loss_and_grad: gradient size mismatch");
        std::fill(grad.begin(), grad.end(), 0.0);
    }
    const auto params = model.parameters();
    const double* emb = params.data();
    const double* out_w = params.data() + vd;

    const double len = static_cast<double>(batch.seq_len());
    const double pos_scale = 1.0 / (static_cast<double>(instances.size()) * len);
    const TokenId bos = batch.vocabulary().bos();

    std::vector<double> raw(v_size);
    std::vector<double> z(v_size);
    std::vector<double> target(v_size);
    std::vector<double> g(v_size);
    std::vector<TokenId> ctx;
    double total = 0.0;
    for (auto idx : instances) {
        const auto seq = batch.instance(idx);
        ctx.assign(1, bos);
        TokenId prev = bos;
        double inst_loss = 0.0;
        for (TokenId x : seq) {
            model.logits(prev, raw);
            std::copy(raw.begin(), raw.end(), z.begin());
            const double lse = softmax_inplace(z);  // z now holds q
            double pos_loss = 0.0;
            if (loss == LossKind::cross_entropy) {
                pos_loss = lse - raw[x];
                std::fill(target.begin(), target.end(), 0.0);
                target[x] = 1.0;
            } else {
                teacher->next_token_dist(ctx, target);
                for (std::size_t v = 0; v < v_size; ++v)
                    if (target[v] > 0.0) pos_loss += target[v] * (std::log(target[v]) - (raw[v] - lse));
            }
            inst_loss += pos_loss;
            if (want_grad) {
                for (std::size_t v = 0; v < v_size; ++v) g[v] = (z[v] - target[v]) * pos_scale;
                const double* h = emb + static_cast<std::size_t>(prev) * dim;
                double* d_emb = grad.data() + static_cast<std::size_t>(prev) * dim;
                double* d_w = grad.data() + vd;
                double* d_b = grad.data() + 2 * vd;
                for (std::size_t v = 0; v < v_size; ++v) {
                    const double gv = g[v];
                    if (gv == 0.0) continue;
                    d_b[v] += gv;
                    const double* w_row = out_w + v * dim;
                    double* dw_row = d_w + v * dim;
                    for (std::size_t k = 0; k < dim; ++k) {
                        dw_row[k] += gv * h[k];
                        d_emb[k] += gv * w_row[k];
                    }
                }
            }
            ctx.push_back(x);
            prev = x;
        }
        total += inst_loss / len;
    }
    return total / static_cast<double>(instances.size());
}

NeuralTrainResult train_neural(const PackedCorpus& corpus, const TrainConfig& config, const StepHook& hook,
                               LossKind loss, const Scorer* teacher) {
    validate(config);
    if (corpus.empty()) throw InputError("train_neural: corpus is empty");
    if (loss == LossKind::forward_kld) {
        if (teacher == nullptr) throw ConfigError("train_neural: forward-KLD loss requires a teacher");
        require_same_vocabulary(teacher->vocabulary(), corpus.vocabulary(), "train_neural");
    }

    NeuralTrainResult result{
        NeuralBigramModel::initialized(corpus.vocabulary_ptr(), config.dim, stream_seed(config.seed, "init"),
                                       config.init_scale),
        {}, 0, 0};
    auto& model = result.model;

    const std::size_t n = corpus.size();
    const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const std::uint64_t total_steps = static_cast<std::uint64_t>(steps_per_epoch) * config.epochs;
    const auto shuffle_base = stream_seed(config.seed, "shuffle");

    std::vector<double> grad(model.parameter_count());
    std::vector<std::size_t> order(n);
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(shuffle_base, epoch));
        rng.shuffle(order.begin(), order.end());
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            std::span<const std::size_t> batch(order.data() + start, end - start);
            const double batch_loss = batch_loss_and_grad(model, corpus, batch, grad, loss, teacher);
            const std::uint64_t step = result.steps + 1;
            if (!std::isfinite(batch_loss)) throw TrainingError(step, "non-finite loss");
            auto params = model.parameters();
            for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.learning_rate * grad[i];

            const std::uint64_t step_tokens = batch.size() * static_cast<std::uint64_t>(corpus.seq_len());
            result.steps = step;
            result.tokens += step_tokens;
            result.loss_curve.push_back(batch_loss);
            if (hook && !hook(StepInfo{step, total_steps, epoch, step_tokens, batch_loss}, model)) return result;
        }
    }
    return result;
}

double grad_check(const NeuralBigramModel& model, const PackedCorpus& batch, double eps, LossKind loss,
                  const Scorer* teacher) {
    if (!(eps > 0.0)) throw ConfigError("grad_check: eps must be positive");
    if (batch.empty()) throw InputError("grad_check: empty batch");
    std::vector<std::size_t> all(batch.size());
    std::iota(all.begin(), all.end(), std::size_t{0});

    std::vector<double> analytic(model.parameter_count());
    batch_loss_and_grad(model, batch, all, analytic, loss, teacher);

    NeuralBigramModel probe = model;
    auto params = probe.parameters();
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + eps;
        const double up = batch_loss_and_grad(probe, batch, all, {}, loss, teacher);
        params[i] = saved - eps;
        const double down = batch_loss_and_grad(probe, batch, all, {}, loss, teacher);
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
        if (scale < 1e-10) continue;
        worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
    }
    return worst;
}

}  // namespace mpk
