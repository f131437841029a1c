#include <benchmark/benchmark.h>

#include <numeric>

#include "mpk/language_model.hpp"

namespace {

void BM_TrainingStep(benchmark::State& state) {
    mpk::SyntheticMix mix;
    mix.count = 16;
    const auto batch = mpk::synth_corpus(mix).corpus;
    const auto model = mpk::NeuralBigramModel::initialized(batch.vocabulary_ptr(),
                                                           static_cast<std::uint32_t>(state.range(0)), 1);
    const auto teacher = mpk::train_ngram(batch, mpk::NGramParams{});
    const auto loss = state.range(1) == 0 ? mpk::LossKind::cross_entropy : mpk::LossKind::forward_kld;
    std::vector<std::size_t> all(batch.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<double> grad(model.parameter_count());
    for (auto _ : state)
        benchmark::DoNotOptimize(mpk::batch_loss_and_grad(model, batch, all, grad, loss, &teacher));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.token_count()));
}
BENCHMARK(BM_TrainingStep)->ArgsProduct({{16, 64}, {0, 1}})->ArgNames({"dim", "kld"});

}  // namespace
