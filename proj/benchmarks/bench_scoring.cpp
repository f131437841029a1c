#include <benchmark/benchmark.h>

#include "mpk/scoring.hpp"

namespace {

mpk::SyntheticCorpus fixture() {
    mpk::SyntheticMix mix;
    mix.count = 2000;
    mix.seq_len = 64;
    return mpk::synth_corpus(mix);
}

void BM_ScoreTrigram(benchmark::State& state) {
    const auto data = fixture();
    const auto model = mpk::train_ngram(data.corpus, mpk::NGramParams{3, {0.1, 0.3, 0.6}, 0.01});
    const auto workers = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(mpk::score_corpus(model, data.corpus, workers));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.corpus.token_count()));
}
BENCHMARK(BM_ScoreTrigram)->Arg(1)->Arg(4)->Arg(8)->UseRealTime();

void BM_TrainTrigram(benchmark::State& state) {
    const auto data = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(mpk::train_ngram(data.corpus, mpk::NGramParams{3, {0.1, 0.3, 0.6}, 0.01}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.corpus.token_count()));
}
BENCHMARK(BM_TrainTrigram);

}  // namespace
