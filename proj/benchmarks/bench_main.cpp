#include <benchmark/benchmark.h>

#include "mfm/dividends.hpp"
#include "mfm/market.hpp"
#include "mfm/strategy.hpp"

namespace {

using namespace mfm;

void BM_SampleBrownian(benchmark::State& state) {
    const TimeGrid grid = make_grid(0.0, 5.0, 1e-3);
    std::uint64_t stream = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_brownian(grid, static_cast<std::size_t>(state.range(0)), {1, stream++, 0}));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.n_steps) * state.range(0));
}
BENCHMARK(BM_SampleBrownian)->Arg(1)->Arg(3);

void BM_WrightFisherMarketPath(benchmark::State& state) {
    const TimeGrid grid = make_grid(0.0, 5.0, 1e-3);
    const Strategy lambda = Strategy::constant({0.3, 0.7});
    std::uint64_t stream = 0;
    for (auto _ : state) {
        const RngSpec rng{1, stream++, 0};
        benchmark::DoNotOptimize(simulate_market_path(WrightFisherSpec{0.5, 0.5}, lambda,
                                                      MarketParams{2, 0.2, std::nullopt},
                                                      sample_brownian(grid, 1, rng), rng));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.n_steps));
}
BENCHMARK(BM_WrightFisherMarketPath)->Unit(benchmark::kMillisecond);

void BM_SimplexMarketPath(benchmark::State& state) {
    const TimeGrid grid = make_grid(0.0, 5.0, 1e-3);
    const MartingaleRSpec model{3, 3, SimplexVolatility{0.5}, {0.2, 0.3, 0.5}};
    const Strategy lambda = Strategy::constant({0.5, 0.25, 0.25});
    std::uint64_t stream = 0;
    for (auto _ : state) {
        const RngSpec rng{1, stream++, 0};
        benchmark::DoNotOptimize(simulate_market_path(model, lambda, MarketParams{3, 0.2, std::nullopt},
                                                      sample_brownian(grid, 3, rng), rng));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.n_steps));
}
BENCHMARK(BM_SimplexMarketPath)->Unit(benchmark::kMillisecond);

void BM_NestedMcEstimate(benchmark::State& state) {
    const LinearDriftSpec model{1.0, 0.5, 0.3, 0.9};
    const std::vector<double> start{0.9, 0.1};
    const auto inner = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_mu_nested_mc(model, start, 0.0, 1.0, 8.0, inner, 1e-2, {1, 0, 0}));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 800);
}
BENCHMARK(BM_NestedMcEstimate)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ProjectToSimplex(benchmark::State& state) {
    const std::vector<double> v{0.7, -0.01, 0.31, 0.0};
    for (auto _ : state) benchmark::DoNotOptimize(project_to_simplex(v, kSimplexFloor, 0.0));
}
BENCHMARK(BM_ProjectToSimplex);

} // namespace
BENCHMARK_MAIN();
