#include <gtest/gtest.h>

#include <cmath>

#include "mfm/error.hpp"
#include "mfm/market.hpp"

namespace {

using namespace mfm;

PathSeries filled(const TimeGrid& g, std::vector<std::vector<double>> per_channel_fn_values) {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (std::size_t c = 0; c < per_channel_fn_values.size(); ++c) {
        labels.push_back("c" + std::to_string(c));
        values.insert(values.end(), per_channel_fn_values[c].begin(), per_channel_fn_values[c].end());
    }
    return PathSeries(g, labels, values);
}

PathSeries constant_series(const TimeGrid& g, std::vector<double> levels) {
    std::vector<std::vector<double>> v;
    for (double x : levels) v.emplace_back(g.points(), x);
    return filled(g, v);
}

RatioDiagnostics wf_path(const Strategy& s, double sigma, const TimeGrid& g, std::uint64_t i, double rho = 0.2) {
    const RngSpec rng{17, i, 0};
    return simulate_market_path(WrightFisherSpec{sigma, 0.5}, s, MarketParams{2, rho, std::nullopt},
                                sample_brownian(g, 1, rng), rng);
}

TEST(Wealth, RepresentativeWealth) {
    const TimeGrid g = make_grid(0.0, 1.0, 0.25);
    const auto V2 = representative_wealth(constant_series(g, {1.0}), 0.5);
    for (double v : V2.channel(0)) EXPECT_EQ(v, 2.0);
    const auto V1 = representative_wealth(constant_series(g, {1.0}), 1.0);
    for (double v : V1.channel(0)) EXPECT_EQ(v, 1.0);
    PathSeries xb(g, {"X_bar"});
    for (std::size_t k = 0; k < g.points(); ++k) xb.at(0, k) = 1.0 + g.time(k);
    const auto V = representative_wealth(xb, 2.0);
    for (std::size_t k = 0; k < g.points(); ++k) EXPECT_DOUBLE_EQ(V.at(0, k), (1.0 + g.time(k)) / 2.0);
}

TEST(Wealth, NonPositiveTotalIntensityThrows) {
    const TimeGrid g = make_grid(0.0, 1.0, 0.25);
    EXPECT_THROW(representative_wealth(constant_series(g, {0.0}), 1.0), AssumptionViolation);
}

TEST(Prices, DirectFormula) {
    const TimeGrid g = make_grid(0.0, 1.0, 0.5);
    const auto S1 = prices(constant_series(g, {0.5, 0.5}), constant_series(g, {2.0}));
    EXPECT_EQ(S1.column(1), (std::vector<double>{1.0, 1.0}));
    const auto S2 = prices(constant_series(g, {0.2, 0.8}), constant_series(g, {10.0}));
    EXPECT_EQ(S2.column(0), (std::vector<double>{2.0, 8.0}));
}

TEST(Prices, SumToMarketWealth) {
    const TimeGrid g = make_grid(0.0, 5.0, 1e-2);
    const auto d = wf_path(Strategy::optimal(), 0.5, g, 0);
    for (std::size_t k = 0; k < g.points(); ++k) {
        EXPECT_NEAR(d.S.at(0, k) + d.S.at(1, k), d.V.at(0, k), 1e-12);
    }
}

TEST(Prices, InadmissibleMuThrows) {
    const TimeGrid g = make_grid(0.0, 1.0, 0.5);
    EXPECT_THROW(prices(constant_series(g, {1.0, 0.0}), constant_series(g, {1.0})), AssumptionViolation);
}

TEST(SmallAgent, MarketCopyPreservesRatio) {
    const TimeGrid g = make_grid(0.0, 5.0, 1e-3);
    for (std::uint64_t i = 0; i < 5; ++i) {
        const auto d = wf_path(Strategy::optimal(), 0.5, g, i);
        for (double r : d.ratio.channel(0)) ASSERT_NEAR(r, d.initial_ratio, 1e-10);
    }
}

TEST(SmallAgent, InitialRatioFromW0) {
    const TimeGrid g = make_grid(0.0, 1.0, 1e-2);
    const RngSpec rng{1, 0, 0};
    const auto d = simulate_market_path(WrightFisherSpec{0.5, 0.5}, Strategy::optimal(), MarketParams{2, 0.5, 3.0},
                                        sample_brownian(g, 1, rng), rng);
    // V_0 = 1 / 0.5 = 2
    EXPECT_DOUBLE_EQ(d.initial_ratio, 1.5);
    EXPECT_DOUBLE_EQ(d.W.at(0, 0), 3.0);
    for (double r : d.ratio.channel(0)) ASSERT_NEAR(r, 1.5, 1e-10);
}

TEST(SmallAgent, DeterministicConstantWeights) {
    const TimeGrid g = make_grid(0.0, 5.0, 1e-3);
    const auto d = wf_path(Strategy::constant({0.3, 0.7}), 0.0, g, 0);
    for (double w : d.W.channel(0)) ASSERT_NEAR(w, d.W.at(0, 0), 1e-10);
}

TEST(SmallAgent, ConstantWeightsSupermartingale) {
    const TimeGrid g = make_grid(0.0, 1.0, 1e-3);
    const std::size_t n = 10000;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = wf_path(Strategy::constant({0.3, 0.7}), 0.5, g, i).ratio.at(0, g.n_steps);
        sum += r;
        sum_sq += r * r;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / (n - 1.0));
    EXPECT_LE(mean, 1.0 + 3.0 * se);
}

TEST(LProcess, MartingaleModelIncrementsAreDiscountedMu) {
    const TimeGrid g = make_grid(0.0, 2.0, 1e-3);
    const double rho = 0.2;
    const auto d = wf_path(Strategy::constant({0.3, 0.7}), 0.5, g, 3, rho);
    for (std::size_t k = 0; k < g.n_steps; ++k) {
        const double dL = d.L.at(0, k + 1) - d.L.at(0, k);
        const double expected = std::exp(-rho * g.time(k)) * (d.mu.at(0, k + 1) - d.mu.at(0, k));
        ASSERT_NEAR(dL, expected, 1e-14);
    }
}

TEST(LProcess, ZeroVolatilityGivesZero) {
    const TimeGrid g = make_grid(0.0, 2.0, 1e-3);
    const auto d = wf_path(Strategy::constant({0.3, 0.7}), 0.0, g, 0);
    for (double x : d.L.values()) EXPECT_EQ(x, 0.0);
    for (double x : d.Z.values()) EXPECT_EQ(x, 0.0);
    for (double x : d.G.values()) EXPECT_EQ(x, 0.0);
}

TEST(LProcess, ComponentsSumToZero) {
    const TimeGrid g = make_grid(0.0, 5.0, 1e-3);
    const RngSpec rng{2, 0, 0};
    const MartingaleRSpec model{3, 3, SimplexVolatility{0.5}, {0.2, 0.3, 0.5}};
    const auto d = simulate_market_path(model, Strategy::constant({0.5, 0.25, 0.25}), MarketParams{3, 0.2, std::nullopt},
                                        sample_brownian(g, 3, rng), rng);
    for (std::size_t k = 0; k < g.points(); ++k) {
        ASSERT_LE(std::abs(d.L.at(0, k) + d.L.at(1, k) + d.L.at(2, k)), 1e-12);
    }
}

TEST(LProcess, LinearDriftDriftTermCancelsMuDrift) {
    // sum over assets still vanishes when mu != R
    const TimeGrid g = make_grid(0.0, 3.0, 1e-3);
    const RngSpec rng{2, 0, 0};
    const auto d = simulate_market_path(LinearDriftSpec{1.0, 0.5, 0.3, 0.9}, Strategy::constant({0.5, 0.5}),
                                        MarketParams{2, 1.0, std::nullopt}, sample_brownian(g, 1, rng), rng);
    for (std::size_t k = 0; k < g.points(); ++k) ASSERT_LE(std::abs(d.L.at(0, k) + d.L.at(1, k)), 1e-12);
}

TEST(ZProcess, MarketCopyGivesZero) {
    const TimeGrid g = make_grid(0.0, 5.0, 1e-3);
    const auto d = wf_path(Strategy::optimal(), 0.5, g, 1);
    for (double z : d.Z.channel(0)) ASSERT_LE(std::abs(z), 1e-12);
    // pairwise covariation terms cancel only to rounding
    for (double x : d.G.channel(0)) ASSERT_LE(x, 1e-16);
}

TEST(ZProcess, TwoFormsAgree) {
    // With left-point discounting the martingale and drift forms of dZ are the
    // same sum, so they agree to rounding at every step size.
    const TimeGrid g = make_grid(0.0, 5.0, 1e-3);
    const RngSpec rng{4, 0, 0};
    const auto d = simulate_market_path(LinearDriftSpec{1.0, 0.5, 0.3, 0.9}, Strategy::constant({0.3, 0.7}),
                                        MarketParams{2, 1.0, std::nullopt}, sample_brownian(g, 1, rng), rng);
    EXPECT_LE(d.z_form_discrepancy, 1e-12);
    const auto wf = wf_path(Strategy::constant({0.3, 0.7}), 0.5, g, 2);
    EXPECT_LE(wf.z_form_discrepancy, 1e-12);
}

TEST(GProcess, EqualsQuadraticVariationOfZ) {
    const TimeGrid g = make_grid(0.0, 5.0, 1e-3);
    for (std::uint64_t i = 0; i < 5; ++i) {
        const auto d = wf_path(Strategy::constant({0.3, 0.7}), 0.5, g, i);
        EXPECT_LE(max_relative_discrepancy(d.G, d.QV), 1e-9);
        for (std::size_t k = 1; k < g.points(); ++k) ASSERT_GE(d.G.at(0, k), d.G.at(0, k - 1));
    }
}

TEST(GProcess, WrightFisherClosedForm) {
    const TimeGrid g = make_grid(0.0, 40.0, 1e-3);
    std::vector<double> rel;
    for (std::uint64_t i = 0; i < 30; ++i) {
        const auto d = wf_path(Strategy::constant({0.3, 0.7}), 0.5, g, i);
        const auto cf = wright_fisher_g_closed_form(d.lambda, d.dividends.R, 0.5);
        rel.push_back(std::abs(d.G.at(0, g.n_steps) / cf.at(0, g.n_steps) - 1.0));
    }
    std::sort(rel.begin(), rel.end());
    EXPECT_LE(rel[rel.size() / 2], 1e-2);
}

TEST(StochasticExponential, ZeroZ) {
    const TimeGrid g = make_grid(0.0, 1.0, 0.1);
    const auto e = stochastic_exponential(constant_series(g, {0.0}), constant_series(g, {0.0}), 0.7);
    for (double x : e.channel(0)) EXPECT_EQ(x, 0.7);
}

TEST(StochasticExponential, DeterministicZ) {
    const TimeGrid g = make_grid(0.0, 1.0, 0.1);
    PathSeries Z(g, {"Z"});
    for (std::size_t k = 0; k < g.points(); ++k) Z.at(0, k) = g.time(k);
    const auto e = stochastic_exponential(Z, constant_series(g, {0.0}));
    for (std::size_t k = 0; k < g.points(); ++k) EXPECT_NEAR(e.at(0, k), std::exp(g.time(k)), 1e-15);
}

TEST(StochasticExponential, ItoConsistencyImprovesWithDt) {
    const TimeGrid fine = make_grid(0.0, 5.0, 5e-4);
    double err_coarse = 0.0, err_fine = 0.0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const RngSpec rng{23, i, 0};
        const auto driver = sample_brownian(fine, 1, rng);
        for (int level = 0; level < 2; ++level) {
            const auto d = simulate_market_path(WrightFisherSpec{0.5, 0.5}, Strategy::constant({0.3, 0.7}),
                                                MarketParams{2, 0.2, std::nullopt},
                                                level == 0 ? driver.coarsen(2) : driver, rng);
            const auto e = stochastic_exponential(d.Z, d.QV, d.initial_ratio);
            double worst = 0.0;
            for (std::size_t k = 0; k < d.ratio.points(); ++k) {
                worst = std::max(worst, std::abs(std::log(d.ratio.at(0, k)) - std::log(e.at(0, k))));
            }
            (level == 0 ? err_coarse : err_fine) = std::max(level == 0 ? err_coarse : err_fine, worst);
        }
    }
    EXPECT_GE(err_coarse / err_fine, 1.3);
}

TEST(Discrepancy, ScaleFloor) {
    const TimeGrid g = make_grid(0.0, 1.0, 0.5);
    EXPECT_EQ(max_relative_discrepancy(constant_series(g, {0.0}), constant_series(g, {0.0})), 0.0);
    EXPECT_NEAR(max_relative_discrepancy(constant_series(g, {1.0}), constant_series(g, {1.1})), 0.1 / 1.1, 1e-15);
    EXPECT_THROW(max_relative_discrepancy(constant_series(g, {1.0}), constant_series(make_grid(0.0, 1.0, 0.25), {1.0})),
                 ShapeError);
}

} // namespace
