#include <benchmark/benchmark.h>

#include "exptwist/families.hpp"
#include "exptwist/oracles.hpp"
#include "exptwist/sampler.hpp"
#include "exptwist/twist.hpp"

using namespace exptwist;

static void BM_ReferencePaths(benchmark::State& state) {
    const auto model = make_model("bm", {{"sigma", 1.0}});
    const TimeGrid grid(1.0, static_cast<std::size_t>(state.range(0)));
    std::size_t iteration = 0;
    for (auto _ : state) {
        double sink = 0.0;
        for_each_path(model, grid, 256, {iteration++, 0}, {},
                      [&](std::size_t, const Path& p) { sink += p.terminal()(0); },
                      1);
        benchmark::DoNotOptimize(sink);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 256 *
                            state.range(0));
}
BENCHMARK(BM_ReferencePaths)->Arg(100)->Arg(1000);

static void BM_TwistedPaths(benchmark::State& state) {
    const oracles::GaussianQuadratic oracle;
    const TwistedModel twisted{make_model("bm", {{"sigma", 1.0}}),
                               oracle.as_value()};
    const TimeGrid grid(1.0, static_cast<std::size_t>(state.range(0)));
    std::size_t iteration = 0;
    for (auto _ : state) {
        double sink = 0.0;
        for_each_twisted_path(
            twisted, grid, 256, {iteration++, 0},
            [&](std::size_t, const Path& p) { sink += p.terminal()(0); }, 1);
        benchmark::DoNotOptimize(sink);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 256 *
                            state.range(0));
}
BENCHMARK(BM_TwistedPaths)->Arg(100)->Arg(1000);

static void BM_JumpThinning(benchmark::State& state) {
    const auto model = make_model("poisson_unit", {{"lambda", 2.0}});
    const TimeGrid grid(1.0, 1000);
    std::size_t iteration = 0;
    for (auto _ : state) {
        std::size_t sink = 0;
        for_each_path(model, grid, 256, {iteration++, 0}, {},
                      [&](std::size_t, const Path& p) { sink += p.jump_marks.size(); },
                      1);
        benchmark::DoNotOptimize(sink);
    }
}
BENCHMARK(BM_JumpThinning);
