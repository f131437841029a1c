#include <doctest.h>

#include <cmath>
#include <numeric>

#include "frozen_values.hpp"
#include "mpk/error.hpp"
#include "mpk/language_model.hpp"
#include "mpk/random.hpp"
#include "temp_dir.hpp"

using namespace mpk;

namespace {

PackedCorpus abc_corpus() {
    auto vocab = std::make_shared<const Vocabulary>(Vocabulary::words({"a", "b", "c"}));
    return PackedCorpus(vocab, 4, {0, 1, 0, 2, 1, 1, 0, 0});
}

PackedCorpus small_synthetic(std::uint64_t seed, std::size_t count = 60) {
    SyntheticMix mix;
    mix.seed = seed;
    mix.count = count;
    mix.seq_len = 12;
    mix.vocab_words = 24;
    return synth_corpus(mix).corpus;
}

double dist_sum(const Scorer& m, std::span<const TokenId> ctx) {
    std::vector<double> d(m.vocabulary().size());
    m.next_token_dist(ctx, d);
    return std::accumulate(d.begin(), d.end(), 0.0);
}

}  // namespace

TEST_CASE("interpolated bigram matches exact rational arithmetic") {
    const auto corpus = abc_corpus();
    const auto model = train_ngram(corpus, NGramParams{2, {0.3, 0.7}, 0.5});
    const std::vector<TokenId> query{0, 1, 2, 6};
    CHECK(sequence_log_prob(model, query) == doctest::Approx(oracle::kBigramQueryLogProb).epsilon(1e-12));
    // Context "c" (id 2) was never followed by anything: the bigram level falls back to the unigram.
    const std::vector<TokenId> ctx{corpus.vocabulary().bos(), 2};
    CHECK(std::exp(model.log_prob(ctx, 0)) == doctest::Approx(oracle::kBigramUnseenContextProb).epsilon(1e-12));
}

TEST_CASE("n-gram distributions are normalized for every order") {
    const auto corpus = small_synthetic(1);
    Rng rng(4);
    for (std::uint32_t order = 1; order <= 4; ++order) {
        NGramParams p{order, std::vector<double>(order, 1.0 / order), 0.01};
        const auto model = train_ngram(corpus, p);
        for (int t = 0; t < 20; ++t) {
            std::vector<TokenId> ctx{corpus.vocabulary().bos()};
            const auto len = rng.uniform_index(6);
            for (std::size_t i = 0; i < len; ++i)
                ctx.push_back(static_cast<TokenId>(rng.uniform_index(corpus.vocabulary().word_count())));
            CHECK(dist_sum(model, ctx) == doctest::Approx(1.0).epsilon(1e-12));
            std::vector<double> d(corpus.vocabulary().size());
            model.next_token_dist(ctx, d);
            const auto probe = static_cast<TokenId>(rng.uniform_index(d.size()));
            CHECK(std::exp(model.log_prob(ctx, probe)) == doctest::Approx(d[probe]).epsilon(1e-12));
        }
    }
}

TEST_CASE("n-gram parameter validation") {
    const auto corpus = abc_corpus();
    CHECK_THROWS_AS(train_ngram(corpus, NGramParams{2, {0.5, 0.6}, 0.01}), ConfigError);
    CHECK_THROWS_AS(train_ngram(corpus, NGramParams{3, {0.5, 0.5}, 0.01}), ConfigError);
    CHECK_THROWS_AS(train_ngram(corpus, NGramParams{2, {0.5, 0.5}, -1.0}), ConfigError);
    CHECK_THROWS_AS(train_ngram(corpus, NGramParams{0, {}, 0.01}), ConfigError);
}

TEST_CASE("scoring out-of-range ids is an input error") {
    const auto model = train_ngram(abc_corpus(), NGramParams{});
    const std::vector<TokenId> bad{0, 99};
    CHECK_THROWS_AS(sequence_log_prob(model, bad), InputError);
}

TEST_CASE("neural bigram gradients match central differences") {
    const auto corpus = small_synthetic(2, 6);
    const auto model = NeuralBigramModel::initialized(corpus.vocabulary_ptr(), 5, 17, 0.3);
    CHECK(grad_check(model, corpus, 1e-5, LossKind::cross_entropy) < 1e-4);
    const auto teacher = train_ngram(corpus, NGramParams{});
    CHECK(grad_check(model, corpus, 1e-5, LossKind::forward_kld, &teacher) < 1e-4);
}

TEST_CASE("neural distributions are normalized and log_prob agrees") {
    const auto corpus = small_synthetic(3, 5);
    const auto model = NeuralBigramModel::initialized(corpus.vocabulary_ptr(), 4, 1, 0.5);
    const std::vector<TokenId> ctx{corpus.vocabulary().bos(), 3};
    CHECK(dist_sum(model, ctx) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> d(corpus.vocabulary().size());
    model.next_token_dist(ctx, d);
    CHECK(std::exp(model.log_prob(ctx, 7)) == doctest::Approx(d[7]).epsilon(1e-12));
}

TEST_CASE("training reduces loss and is deterministic") {
    const auto corpus = small_synthetic(4);
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 3;
    cfg.seed = 5;
    const auto a = train_neural(corpus, cfg);
    const auto b = train_neural(corpus, cfg);
    CHECK(encode_model(a.model) == encode_model(b.model));
    CHECK(a.loss_curve.back() < a.loss_curve.front());
    const std::size_t steps_per_epoch = (corpus.size() + cfg.batch_size - 1) / cfg.batch_size;
    CHECK(a.steps == steps_per_epoch * cfg.epochs);
    CHECK(a.tokens == corpus.token_count() * cfg.epochs);
}

TEST_CASE("forward-KLD training requires a teacher over the same vocabulary") {
    const auto corpus = small_synthetic(5, 10);
    CHECK_THROWS_AS(train_neural(corpus, TrainConfig{}, {}, LossKind::forward_kld, nullptr), ConfigError);
    const auto other = train_ngram(abc_corpus(), NGramParams{});
    CHECK_THROWS_AS(train_neural(corpus, TrainConfig{}, {}, LossKind::forward_kld, &other), InputError);
}

TEST_CASE("generation is seeded and stays in the vocabulary") {
    const auto corpus = small_synthetic(6);
    const auto model = train_ngram(corpus, NGramParams{3, {0.2, 0.3, 0.5}, 0.01});
    const auto a = generate(model, {}, 30, 8);
    CHECK(a == generate(model, {}, 30, 8));
    CHECK(a != generate(model, {}, 30, 9));
    for (auto t : a) CHECK(t < corpus.vocabulary().size());
}

TEST_CASE("model files round-trip byte-identically") {
    const auto corpus = small_synthetic(7);
    const auto ngram = train_ngram(corpus, NGramParams{3, {0.1, 0.3, 0.6}, 0.01});
    const auto bytes = encode_model(ngram);
    const auto back = decode_model(bytes, "m");
    CHECK(encode_model(*back) == bytes);
    CHECK(back->parameter_count() == ngram.parameter_count());
    const auto seq = corpus.instance(3);
    CHECK(sequence_log_prob(*back, seq) == sequence_log_prob(ngram, seq));

    const auto neural = NeuralBigramModel::initialized(corpus.vocabulary_ptr(), 6, 3);
    const auto nbytes = encode_model(neural);
    CHECK(encode_model(*decode_model(nbytes, "n")) == nbytes);
    CHECK_THROWS_AS(decode_model(nbytes.substr(0, nbytes.size() - 3), "n"), InputError);
    CHECK_THROWS_AS(decode_model(nbytes + "x", "n"), InputError);
}

TEST_CASE("per-token loss is worker independent") {
    const auto corpus = small_synthetic(8, 200);
    const auto model = train_ngram(corpus, NGramParams{});
    const double one = per_token_loss(model, corpus, 1);
    CHECK(per_token_loss(model, corpus, 4) == one);
    CHECK(per_token_loss(model, corpus, 8) == one);
}
