#include <doctest.h>

#include "mpk/error.hpp"
#include "mpk/student_training.hpp"

using namespace mpk;

namespace {

PackedCorpus fixture(std::uint64_t seed, std::size_t count = 64) {
    SyntheticMix mix;
    mix.seed = seed;
    mix.count = count;
    mix.seq_len = 8;
    mix.vocab_words = 16;
    return synth_corpus(mix).corpus;
}

TrainOptions options(std::uint32_t epochs) {
    TrainOptions o;
    o.config.dim = 4;
    o.config.batch_size = 8;
    o.config.epochs = epochs;
    o.config.seed = 3;
    return o;
}

}  // namespace

TEST_CASE("default epochs follow the sampling ratio") {
    CHECK(default_epochs(1.0) == 1);
    CHECK(default_epochs(0.5) == 2);
    CHECK(default_epochs(0.25) == 4);
    CHECK(default_epochs(0.3) == 3);
    CHECK(default_epochs(0.9) == 1);
}

TEST_CASE("eval schedule hits every tenth and the final step") {
    CHECK(eval_schedule(100) == std::vector<std::uint64_t>{10, 20, 30, 40, 50, 60, 70, 80, 90, 100});
    CHECK(eval_schedule(5) == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(eval_schedule(1) == std::vector<std::uint64_t>{1});
    CHECK(eval_schedule(23) == std::vector<std::uint64_t>{2, 4, 6, 9, 11, 13, 16, 18, 20, 23});
}

TEST_CASE("cross-entropy compute is 6 N tokens") {
    const auto corpus = fixture(1);
    const auto eval = fixture(2, 16);
    auto o = options(2);
    o.eval = &eval;
    const auto r = pretrain_ce(corpus, o);
    const auto n = r.model.parameter_count();
    CHECK(r.run.tokens == 2 * corpus.token_count());
    CHECK(r.run.compute_units == 6 * n * r.run.tokens);
    CHECK(r.run.curve.size() == eval_schedule(r.run.steps).size());
    CHECK(r.run.curve.back().compute_units == r.run.compute_units);
    CHECK(r.run.curve.back().loss == eval_loss(r.model, eval));
}

TEST_CASE("one epoch of pretraining reproduces plain SGD training") {
    const auto corpus = fixture(3);
    const auto o = options(1);
    const auto r = pretrain_ce(corpus, o);
    const auto plain = train_neural(corpus, o.config);
    CHECK(encode_model(r.model) == encode_model(plain.model));
}

TEST_CASE("distillation compute adds the teacher forward pass") {
    const auto corpus = fixture(4);
    const auto teacher = train_ngram(corpus, NGramParams{2, {0.3, 0.7}, 0.01});
    const auto r = train_forward_kld(teacher, corpus, options(1));
    CHECK(r.run.method == TrainMethod::forward_kld);
    CHECK(r.run.compute_units ==
          (6 * r.model.parameter_count() + 2 * teacher.parameter_count()) * r.run.tokens);
}

TEST_CASE("compute budget halts at the crossing step") {
    const auto corpus = fixture(5);
    const auto teacher = train_ngram(corpus, NGramParams{2, {0.3, 0.7}, 0.01});
    auto o = options(4);
    const auto unbounded = train_forward_kld(teacher, corpus, o);
    const std::uint64_t per_step_units = unbounded.run.compute_units / unbounded.run.steps;
    o.compute_budget = per_step_units * 5 + 1;
    const auto halted = train_forward_kld(teacher, corpus, o);
    CHECK(halted.run.steps == 6);
    CHECK(halted.run.compute_units == per_step_units * 6);
    o.compute_budget = per_step_units * 5;
    CHECK(train_forward_kld(teacher, corpus, o).run.steps == 5);
}

TEST_CASE("curve CSV round-trips and rejects garbage") {
    const std::vector<CurvePoint> curve{{10, 4.5}, {20, 4.25}, {123456789012345ULL, 0.1 + 0.2}};
    const auto csv = curve_to_csv(curve);
    CHECK(csv.rfind("compute_units,loss_nats_per_token\n", 0) == 0);
    const auto back = curve_from_csv(csv, "c");
    REQUIRE(back.size() == 3);
    CHECK(back[2].compute_units == curve[2].compute_units);
    CHECK(back[2].loss == curve[2].loss);
    CHECK(curve_to_csv(back) == csv);
    CHECK_THROWS_AS(curve_from_csv("compute_units,loss_nats_per_token\n1,abc\n", "c"), InputError);
    CHECK_THROWS_AS(curve_from_csv("wrong,header\n", "c"), InputError);
}

TEST_CASE("generated corpora are seeded per sequence") {
    const auto corpus = fixture(6);
    const auto teacher = train_ngram(corpus, NGramParams{});
    const auto a = generate_corpus(teacher, 10, 8, 42);
    CHECK(encode_corpus(a) == encode_corpus(generate_corpus(teacher, 10, 8, 42)));
    const auto more = generate_corpus(teacher, 12, 8, 42);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(std::equal(a.instance(i).begin(), a.instance(i).end(), more.instance(i).begin()));
}
