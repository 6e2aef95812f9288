#include <benchmark/benchmark.h>

#include "dpre/collision.hpp"
#include "dpre/field.hpp"
#include "dpre/polymer.hpp"
#include "dpre/renewal.hpp"
#include "dpre/rng.hpp"

using namespace dpre;

static void BM_Philox(benchmark::State& state) {
    PhiloxCounter c{0, 0, 0, 0};
    const PhiloxKey k{0xdeadbeefu, 0x12345678u};
    for (auto _ : state) {
        c = philox4x32(c, k);
        benchmark::DoNotOptimize(c);
    }
    state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(BM_Philox);

static void BM_Evolve(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const int n = static_cast<int>(state.range(1));
    const EnvLaw env = EnvLaw::gaussian();
    const WalkLaw w = make_simple_walk(d);
    EvolveOptions o;
    o.keep_rows = false;
    o.track_overlap = false;
    o.compute_leak = false;
    std::uint32_t r = 0;
    for (auto _ : state) {
        const CounterField f(env, d, 1, r++);
        benchmark::DoNotOptimize(evolve(f.fn(), w, env, 1.0, n, o).log_w.back());
    }
}
BENCHMARK(BM_Evolve)->Args({1, 64})->Args({1, 512})->Args({2, 64})->Args({3, 32})->Unit(benchmark::kMillisecond);

static void BM_KernelIteration(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const int k = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(iterate_kernel(make_simple_walk(d), k).step(k).sum());
}
BENCHMARK(BM_KernelIteration)->Args({1, 1024})->Args({2, 128})->Args({3, 48})->Unit(benchmark::kMillisecond);

static void BM_ClosedFormReturns(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(simple_return_probabilities(3, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_ClosedFormReturns)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_IntersectionRenewal(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(intersection_renewal(make_simple_walk(1), static_cast<int>(state.range(0))).defect);
}
BENCHMARK(BM_IntersectionRenewal)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
