#include <benchmark/benchmark.h>

#include "summachine/generator.hpp"
#include "summachine/product.hpp"
#include "summachine/reachability.hpp"
#include "summachine/unfolding.hpp"

using namespace summachine;

namespace {

void set_sizes(benchmark::State& state, const SumMachine& sum, const ProductMachine* pm) {
    state.counters["sum_nodes"] = static_cast<double>(sum.stats.total_nodes);
    state.counters["d"] = sum.stats.coupling_factor;
    if (pm)
        state.counters["product_states"] = static_cast<double>(pm->state_count());
}

void BM_UnfoldChains(benchmark::State& state) {
    const SystemSpec spec = independent_chain_family(static_cast<std::size_t>(state.range(0)), 4);
    for (auto _ : state)
        benchmark::DoNotOptimize(unfold(spec));
    set_sizes(state, unfold(spec), nullptr);
}
BENCHMARK(BM_UnfoldChains)->DenseRange(2, 8, 2);

void BM_ProductChains(benchmark::State& state) {
    const SystemSpec spec = independent_chain_family(static_cast<std::size_t>(state.range(0)), 4);
    for (auto _ : state)
        benchmark::DoNotOptimize(build_product(spec));
    const ProductMachine pm = build_product(spec);
    set_sizes(state, unfold(spec), &pm);
}
BENCHMARK(BM_ProductChains)->DenseRange(2, 8, 2);

void BM_UnfoldRing(benchmark::State& state) {
    const SystemSpec spec = token_ring_family(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(unfold(spec));
    set_sizes(state, unfold(spec), nullptr);
}
BENCHMARK(BM_UnfoldRing)->RangeMultiplier(2)->Range(2, 64);

void BM_UnfoldParallel(benchmark::State& state) {
    UnfoldOptions o;
    o.mode = UnfoldMode::parallel;
    o.threads = static_cast<std::size_t>(state.range(1));
    const SystemSpec spec = token_ring_family(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(unfold(spec, o));
}
BENCHMARK(BM_UnfoldParallel)->Args({32, 1})->Args({32, 4})->Args({64, 4});

// Full-vector reachability of a random reachable-looking target.
void BM_Reach(benchmark::State& state) {
    GenParams p;
    p.seed = 7;
    p.machines = static_cast<std::size_t>(state.range(0));
    p.states = 5;
    p.coupling = 2;
    p.width = 2;
    const SystemSpec spec = generate_system(p);
    const SumMachine sum = unfold(spec);
    ReachQuery q;
    for (std::size_t i = 0; i < spec.size(); ++i)
        q.targets[i] = StateId{spec.machines[i].state_count() - 1};
    for (auto _ : state)
        benchmark::DoNotOptimize(global_reachable(sum, q));
    set_sizes(state, sum, nullptr);
}
BENCHMARK(BM_Reach)->DenseRange(3, 6, 1);

} // namespace

BENCHMARK_MAIN();
