#include <benchmark/benchmark.h>

#include <random>

#include "exptwist/girsanov.hpp"
#include "exptwist/value_surface.hpp"

using namespace exptwist;

namespace {

std::vector<double> random_costs(std::size_t n) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(0.0, 4.0);
    std::vector<double> costs(n);
    for (auto& c : costs) c = unif(rng);
    return costs;
}

}  // namespace

static void BM_NormalizeWeights(benchmark::State& state) {
    const auto costs = random_costs(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto ens = normalize_weights(costs);
        benchmark::DoNotOptimize(ens.z_hat);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            state.range(0));
}
BENCHMARK(BM_NormalizeWeights)->Range(1 << 10, 1 << 18);

static void BM_VariationalReport(benchmark::State& state) {
    const auto ens = normalize_weights(random_costs(1 << 16));
    for (auto _ : state) {
        auto report = variational_report(ens);
        benchmark::DoNotOptimize(report.gap);
    }
}
BENCHMARK(BM_VariationalReport);

static void BM_SurfaceInterpolation(benchmark::State& state) {
    SpaceBox box;
    box.lo = Vec::Constant(1, -4.0);
    box.hi = Vec::Constant(1, 4.0);
    box.nodes_per_axis = {41};
    ValueSurface surface({0.0, 0.25, 0.5, 0.75, 1.0}, box);
    Vec x(1);
    double t = 0.0;
    for (auto _ : state) {
        x(0) = -3.9 + std::fmod(t * 7.77, 7.8);
        benchmark::DoNotOptimize(surface.value_at(std::fmod(t, 1.0), x));
        t += 0.0137;
    }
}
BENCHMARK(BM_SurfaceInterpolation);

BENCHMARK_MAIN();
