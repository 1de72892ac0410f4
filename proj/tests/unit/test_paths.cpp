#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mfm/error.hpp"
#include "mfm/paths.hpp"

namespace {

using namespace mfm;

TEST(TimeGrid, QuarterSteps) {
    const TimeGrid g = make_grid(0.0, 1.0, 0.25);
    ASSERT_EQ(g.n_steps, 4u);
    const double expected[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (std::size_t k = 0; k < g.points(); ++k) EXPECT_DOUBLE_EQ(g.time(k), expected[k]);
}

TEST(TimeGrid, SingleStep) { EXPECT_EQ(make_grid(0.0, 1.0, 1.0).n_steps, 1u); }

TEST(TimeGrid, FiveThousandSteps) { EXPECT_EQ(make_grid(0.0, 5.0, 0.001).n_steps, 5000u); }

TEST(TimeGrid, RejectsBadInput) {
    EXPECT_THROW(make_grid(0.0, 1.0, 0.0), ConfigError);
    EXPECT_THROW(make_grid(0.0, 1.0, -0.1), ConfigError);
    EXPECT_THROW(make_grid(1.0, 1.0, 0.1), ConfigError);
    EXPECT_THROW(make_grid(2.0, 1.0, 0.1), ConfigError);
}

TEST(TimeGrid, IndexOf) {
    const TimeGrid g = make_grid(0.0, 5.0, 1e-3);
    EXPECT_EQ(g.index_of(1.25), std::optional<std::size_t>(1250));
    EXPECT_EQ(g.index_of(1.2505), std::nullopt);
}

TEST(Brownian, Deterministic) {
    const TimeGrid g = make_grid(0.0, 1.0, 0.01);
    const auto a = sample_brownian(g, 1, {42, 0, 0});
    const auto b = sample_brownian(g, 1, {42, 0, 0});
    for (std::size_t k = 0; k < g.n_steps; ++k) ASSERT_EQ(a.increment(0, k), b.increment(0, k));
}

TEST(Brownian, IncrementVariance) {
    // 10^5 draws: 1000 paths x 100 steps at dt = 0.01
    const TimeGrid g = make_grid(0.0, 1.0, 0.01);
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (std::uint64_t p = 0; p < 1000; ++p) {
        const auto path = sample_brownian(g, 1, {42, p, 0});
        for (double x : path.dimension(0)) {
            const double s = x * x;
            sum += s;
            sum_sq += s * s;
            ++n;
        }
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    EXPECT_NEAR(mean, 0.01, 3.0 * se);
}

TEST(Brownian, IndependentStreams) {
    const TimeGrid g = make_grid(0.0, 100.0, 0.01);
    const auto a = sample_brownian(g, 1, {3, 0, 0});
    const auto b = sample_brownian(g, 1, {3, 1, 0});
    const auto x = a.dimension(0);
    const auto y = b.dimension(0);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += x[k] * y[k];
        sxx += x[k] * x[k];
        syy += y[k] * y[k];
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    EXPECT_LT(std::abs(corr), 3.0 / std::sqrt(static_cast<double>(x.size())));
}

TEST(Brownian, DimensionsAreIndependent) {
    const TimeGrid g = make_grid(0.0, 100.0, 0.01);
    const auto p = sample_brownian(g, 2, {3, 0, 0});
    const auto x = p.dimension(0);
    const auto y = p.dimension(1);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += x[k] * y[k];
        sxx += x[k] * x[k];
        syy += y[k] * y[k];
    }
    EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 3.0 / std::sqrt(static_cast<double>(x.size())));
}

TEST(Brownian, CoarsenSumsIncrements) {
    const TimeGrid g = make_grid(0.0, 1.0, 0.01);
    const auto fine = sample_brownian(g, 2, {9, 0, 0});
    const auto coarse = fine.coarsen(4);
    ASSERT_EQ(coarse.grid().n_steps, 25u);
    EXPECT_DOUBLE_EQ(coarse.grid().dt, 0.04);
    for (std::size_t d = 0; d < 2; ++d) {
        for (std::size_t k = 0; k < 25; ++k) {
            const double s = fine.increment(d, 4 * k) + fine.increment(d, 4 * k + 1) +
                             fine.increment(d, 4 * k + 2) + fine.increment(d, 4 * k + 3);
            EXPECT_NEAR(coarse.increment(d, k), s, 1e-15);
        }
    }
    EXPECT_THROW(fine.coarsen(3), ShapeError);
}

TEST(Brownian, LevelsStartAtZero) {
    const TimeGrid g = make_grid(0.0, 1.0, 0.1);
    const auto p = sample_brownian(g, 1, {1, 0, 0});
    const auto lv = p.levels(0);
    EXPECT_EQ(lv.at(0, 0), 0.0);
    EXPECT_NEAR(lv.at(0, 10), std::accumulate(p.dimension(0).begin(), p.dimension(0).end(), 0.0), 1e-14);
}

PathSeries ramp(const TimeGrid& g) {
    PathSeries s(g, {"t"});
    for (std::size_t k = 0; k < g.points(); ++k) s.at(0, k) = g.time(k);
    return s;
}

TEST(Covariation, ConstantPathGivesZero) {
    const TimeGrid g = make_grid(0.0, 1.0, 1e-3);
    PathSeries c(g, {"c"});
    for (std::size_t k = 0; k < g.points(); ++k) c.at(0, k) = 3.0;
    const auto b = sample_brownian(g, 1, {1, 0, 0}).levels(0);
    const auto cov = realized_covariation(c, 0, b, 0);
    for (double x : cov.channel(0)) EXPECT_EQ(x, 0.0);
}

TEST(Covariation, RampTerminalValue) {
    const TimeGrid g = make_grid(0.0, 1.0, 1e-3);
    const auto r = ramp(g);
    const auto cov = realized_covariation(r, 0, r, 0);
    EXPECT_NEAR(cov.at(0, g.n_steps), 1e-3, 1e-15);
}

TEST(Covariation, BrownianQuadraticVariationIsT) {
    const TimeGrid g = make_grid(0.0, 1.0, 1e-3);
    double sum = 0.0, sum_sq = 0.0;
    const int n = 1000;
    for (int p = 0; p < n; ++p) {
        const auto b = sample_brownian(g, 1, {11, static_cast<std::uint64_t>(p), 0}).levels(0);
        const double qv = realized_covariation(b, 0, b, 0).at(0, g.n_steps);
        sum += qv;
        sum_sq += qv * qv;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / n);
    EXPECT_NEAR(mean, 1.0, 3.0 * se);
}

TEST(Covariation, SelfCovariationNeverDecreases) {
    const TimeGrid g = make_grid(0.0, 1.0, 1e-3);
    const auto b = sample_brownian(g, 1, {5, 0, 0}).levels(0);
    const auto qv = realized_covariation(b, 0, b, 0);
    for (std::size_t k = 1; k < g.points(); ++k) ASSERT_GE(qv.at(0, k), qv.at(0, k - 1));
}

TEST(Covariation, Symmetric) {
    const TimeGrid g = make_grid(0.0, 1.0, 1e-2);
    const auto p = sample_brownian(g, 2, {5, 0, 0});
    const auto a = p.levels(0);
    const auto b = p.levels(1);
    const auto ab = realized_covariation(a, 0, b, 0);
    const auto ba = realized_covariation(b, 0, a, 0);
    EXPECT_EQ(ab.values(), ba.values());
}

TEST(Covariation, GridMismatchThrows) {
    const auto a = ramp(make_grid(0.0, 1.0, 0.1));
    const auto b = ramp(make_grid(0.0, 1.0, 0.05));
    EXPECT_THROW(realized_covariation(a, 0, b, 0), ShapeError);
}

TEST(PathSeries, ColumnRoundTrip) {
    const TimeGrid g = make_grid(0.0, 1.0, 0.5);
    PathSeries s(g, {"a", "b"});
    const std::vector<double> col{1.0, 2.0};
    s.set_column(1, col);
    EXPECT_EQ(s.column(1), col);
    EXPECT_EQ(s.at(1, 1), 2.0);
    EXPECT_EQ(s.select(1).at(0, 1), 2.0);
}

TEST(Kahan, RecoversSmallTerms) {
    KahanSum k;
    k.add(1.0);
    for (int i = 0; i < 1000000; ++i) k.add(1e-16);
    EXPECT_NEAR(k.value(), 1.0 + 1e-10, 1e-15);
}

} // namespace
