#include <doctest.h>

#include "mpk/error.hpp"
#include "mpk/language_model.hpp"
#include "mpk/scoring.hpp"

using namespace mpk;

namespace {

PackedCorpus corpus_with_seed(std::uint64_t seed) {
    SyntheticMix mix;
    mix.seed = seed;
    mix.count = 150;
    mix.seq_len = 16;
    return synth_corpus(mix).corpus;
}

}  // namespace

TEST_CASE("scores are sequence log-probs, per-token scores divide by L") {
    const auto corpus = corpus_with_seed(1);
    const auto model = train_ngram(corpus, NGramParams{});
    const auto total = score_corpus(model, corpus);
    const auto per_token = score_corpus(model, corpus, 1, Normalization::per_token);
    REQUIRE(total.values.size() == corpus.size());
    CHECK(total.corpus_hash == corpus_digest(corpus));
    for (std::size_t i = 0; i < corpus.size(); i += 17) {
        CHECK(total.values[i] == sequence_log_prob(model, corpus.instance(i)));
        CHECK(per_token.values[i] == doctest::Approx(total.values[i] / 16.0).epsilon(1e-15));
    }
}

TEST_CASE("scores are identical across worker counts") {
    const auto corpus = corpus_with_seed(2);
    const auto model = train_ngram(corpus, NGramParams{3, {0.1, 0.3, 0.6}, 0.01});
    const auto one = encode_scores(score_corpus(model, corpus, 1));
    CHECK(encode_scores(score_corpus(model, corpus, 4)) == one);
    CHECK(encode_scores(score_corpus(model, corpus, 8)) == one);
}

TEST_CASE("rewards are teacher minus reference and check alignment") {
    const auto corpus = corpus_with_seed(3);
    const auto teacher = train_ngram(corpus, NGramParams{3, {0.1, 0.3, 0.6}, 0.01});
    const auto reference = train_ngram(corpus, NGramParams{1, {1.0}, 1.0});
    const auto t = score_corpus(teacher, corpus);
    const auto r = score_corpus(reference, corpus);
    const auto rewards = compute_rewards(t, r);
    for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(rewards.values[i] == t.values[i] - r.values[i]);

    auto shorter = r;
    shorter.values.pop_back();
    CHECK_THROWS_AS(compute_rewards(t, shorter), InputError);
    auto other_corpus = r;
    other_corpus.corpus_hash[0] ^= 1;
    CHECK_THROWS_AS(compute_rewards(t, other_corpus), InputError);
    const auto per_token = score_corpus(reference, corpus, 1, Normalization::per_token);
    CHECK_THROWS_AS(compute_rewards(t, per_token), InputError);
}

TEST_CASE("scoring with a foreign vocabulary is an input error") {
    const auto corpus = corpus_with_seed(4);
    auto vocab = std::make_shared<const Vocabulary>(Vocabulary::words({"p", "q"}));
    const auto other = train_ngram(PackedCorpus(vocab, 2, {0, 1, 1, 0}), NGramParams{});
    CHECK_THROWS_AS(score_corpus(other, corpus), InputError);
}

TEST_CASE("score and reward files round-trip with header + 8N bytes") {
    const auto corpus = corpus_with_seed(5);
    const auto model = train_ngram(corpus, NGramParams{});
    const auto s = score_corpus(model, corpus);
    const auto bytes = encode_scores(s);
    CHECK(bytes.size() == kScoreHeaderBytes + 8 * corpus.size());
    CHECK(encode_scores(decode_scores(bytes, "s")) == bytes);
    const auto r = compute_rewards(s, s);
    const auto rbytes = encode_rewards(r);
    CHECK(encode_rewards(decode_rewards(rbytes, "r")) == rbytes);
    CHECK_THROWS_AS(decode_rewards(bytes, "wrong magic"), InputError);
    CHECK_THROWS_AS(decode_scores(bytes.substr(0, bytes.size() - 8), "short"), InputError);
}
