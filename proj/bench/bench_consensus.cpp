#include "mgsim/ratio_consensus.hpp"
#include "oracles.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace mgsim;

namespace {

struct Fixture {
    CommGraph graph;
    std::vector<ConsensusState> states;
};

Fixture make(std::size_t n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::vector<double> y0(n);
    for (auto& y : y0) y = u(rng);
    return {CommGraph::from_links(n, oracle::random_strong_links(n, 8 * n, rng)), consensus_init(y0)};
}

void BM_round_parallel(benchmark::State& st) {
    const auto f = make(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(maxmin_round(mix_round(f.states, f.graph), f.graph));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_round_reference(benchmark::State& st) {
    const auto f = make(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st)
        benchmark::DoNotOptimize(reference::maxmin_round(reference::mix_round(f.states, f.graph), f.graph));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_consensus_epsilon(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const auto f = make(n);
    std::vector<double> y0;
    for (const auto& s : f.states) y0.push_back(s.y);
    const ConsensusConfig cfg{1e-6, diameter(f.graph), 100000};
    for (auto _ : st) benchmark::DoNotOptimize(consensus_epsilon(y0, f.graph, cfg));
}

} // namespace

BENCHMARK(BM_round_parallel)->RangeMultiplier(4)->Range(64, 65536);
BENCHMARK(BM_round_reference)->RangeMultiplier(4)->Range(64, 65536);
BENCHMARK(BM_consensus_epsilon)->Arg(10)->Arg(100)->Arg(1000);

BENCHMARK_MAIN();
