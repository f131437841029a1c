#include <benchmark/benchmark.h>

#include <vector>

#include "mpk/difference_sampler.hpp"
#include "mpk/random.hpp"

namespace {

std::vector<double> rewards(std::size_t n) {
    mpk::Rng rng(1);
    std::vector<double> r(n);
    for (auto& x : r) x = rng.normal();
    return r;
}

void BM_SelectTopK(benchmark::State& state) {
    const auto r = rewards(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(mpk::select_topk(r, {0.5, {}}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SelectTopK)->Arg(1 << 14)->Arg(1 << 18)->Arg(1 << 20);

void BM_SelectTopKSharded(benchmark::State& state) {
    const auto r = rewards(1 << 20);
    const auto workers = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(mpk::select_topk_sharded(r, {0.5, {}}, workers));
    state.SetItemsProcessed(state.iterations() * (1 << 20));
}
BENCHMARK(BM_SelectTopKSharded)->Arg(1)->Arg(4)->Arg(8)->UseRealTime();

}  // namespace
