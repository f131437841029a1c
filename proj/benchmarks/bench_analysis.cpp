#include <benchmark/benchmark.h>

#include "mpk/analysis.hpp"

namespace {

void BM_VendiScore(benchmark::State& state) {
    mpk::SyntheticMix mix;
    mix.count = static_cast<std::size_t>(state.range(0));
    const auto features = mpk::extract_features(nullptr, mpk::synth_corpus(mix).corpus, mpk::FeatureKind::counts);
    const auto kernel = mpk::cosine_kernel(features);
    for (auto _ : state) benchmark::DoNotOptimize(mpk::vendi_score(kernel, features.n));
}
BENCHMARK(BM_VendiScore)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_FitLinearHead(benchmark::State& state) {
    mpk::SyntheticMix mix;
    mix.count = 4000;
    const auto data = mpk::synth_corpus(mix);
    const auto features = mpk::extract_features(nullptr, data.corpus, mpk::FeatureKind::counts);
    std::vector<double> target(features.n);
    for (std::size_t i = 0; i < target.size(); ++i) target[i] = static_cast<double>(data.labels[i]);
    for (auto _ : state) benchmark::DoNotOptimize(mpk::fit_linear_head(features, target, 1e-3));
}
BENCHMARK(BM_FitLinearHead)->Unit(benchmark::kMillisecond);

}  // namespace
