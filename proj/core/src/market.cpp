#include "mfm/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfm/error.hpp"

namespace mfm {

namespace {

void require_same_grid(const PathSeries& a, const PathSeries& b, const char* what) {
    if (!(a.grid() == b.grid())) throw ShapeError(std::string(what) + ": series are on different grids");
}

void require_same_width(const PathSeries& a, const PathSeries& b, const char* what) {
    require_same_grid(a, b, what);
    if (a.channels() != b.channels()) throw ShapeError(std::string(what) + ": channel counts differ");
}

std::vector<std::string> labels(const char* prefix, std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + 1));
    return out;
}

} // namespace

void validate(const MarketParams& params) {
    if (params.n_assets < 2) throw ConfigError("need at least two assets", "market.n_assets");
    if (!(params.rho > 0.0) || !std::isfinite(params.rho)) {
        throw ConfigError("consumption rate must be positive", "market.rho");
    }
    if (params.w0 && (!(*params.w0 > 0.0) || !std::isfinite(*params.w0))) {
        throw ConfigError("initial wealth must be positive", "market.w0");
    }
}

double initial_ratio(const MarketParams& params, double x_bar0) {
    if (!params.w0) return 1.0;
    return *params.w0 * params.rho / x_bar0;
}

PathSeries representative_wealth(const PathSeries& X_bar, double rho) {
    if (!(rho > 0.0)) throw ConfigError("consumption rate must be positive", "market.rho");
    PathSeries V(X_bar.grid(), {"V"});
    const auto total = X_bar.channel(0);
    auto out = V.channel(0);
    for (std::size_t k = 0; k < total.size(); ++k) {
        if (!(total[k] > 0.0)) {
            throw AssumptionViolation("total dividend intensity is not positive at t = " +
                                      std::to_string(X_bar.grid().time(k)));
        }
        out[k] = total[k] / rho;
    }
    return V;
}

PathSeries prices(const PathSeries& mu, const PathSeries& V) {
    require_same_grid(mu, V, "prices");
    PathSeries S(mu.grid(), labels("S", mu.channels()));
    const auto v = V.channel(0);
    for (std::size_t c = 0; c < mu.channels(); ++c) {
        const auto weights = mu.channel(c);
        auto out = S.channel(c);
        for (std::size_t k = 0; k < weights.size(); ++k) {
            if (!(weights[k] >= kSimplexFloor)) {
                throw AssumptionViolation("representative strategy is not admissible: mu" +
                                          std::to_string(c + 1) + " below the floor at t = " +
                                          std::to_string(mu.grid().time(k)));
            }
            out[k] = weights[k] * v[k];
        }
    }
    return S;
}

SmallAgentWealth evolve_small_agent(const PathSeries& lambda, const PathSeries& mu,
                                    const DividendPaths& paths, const MarketParams& params) {
    require_same_width(lambda, mu, "evolve_small_agent");
    require_same_width(mu, paths.X, "evolve_small_agent");
    const PathSeries V = representative_wealth(paths.X_bar, params.rho);
    const PathSeries S = prices(mu, V);
    const TimeGrid& grid = paths.grid;
    const std::size_t n = mu.channels();
    const double dt = grid.dt;

    SmallAgentWealth out{PathSeries(grid, {"W"}), false, std::nullopt};
    auto W = out.W.channel(0);
    W[0] = params.w0 ? *params.w0 : V.at(0, 0);
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        double gain = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double holding = lambda.at(i, k) * W[k] / S.at(i, k);
            gain += holding * (S.at(i, k + 1) - S.at(i, k) + paths.X.at(i, k) * dt);
        }
        W[k + 1] = W[k] + gain - params.rho * W[k] * dt;
        if (!(W[k + 1] > 0.0)) {
            out.excluded = true;
            out.failure_step = k;
            std::fill(W.begin() + static_cast<std::ptrdiff_t>(k + 1), W.end(), 0.0);
            break;
        }
    }
    return out;
}

PathSeries compute_L(const PathSeries& mu, const PathSeries& R, double rho) {
    require_same_width(mu, R, "compute_L");
    const TimeGrid& grid = mu.grid();
    PathSeries L(grid, labels("L", mu.channels()));
    for (std::size_t c = 0; c < mu.channels(); ++c) {
        const auto m = mu.channel(c);
        const auto r = R.channel(c);
        auto out = L.channel(c);
        KahanSum acc;
        for (std::size_t k = 0; k < grid.n_steps; ++k) {
            const double discount = std::exp(-rho * grid.time(k));
            acc.add(discount * ((m[k + 1] - m[k]) - rho * (m[k] - r[k]) * grid.dt));
            out[k + 1] = acc.value();
        }
    }
    return L;
}

ZSeries compute_Z(const PathSeries& lambda, const PathSeries& mu, const PathSeries& L, double rho,
                  const PathSeries& R) {
    require_same_width(lambda, mu, "compute_Z");
    require_same_width(mu, L, "compute_Z");
    require_same_width(mu, R, "compute_Z");
    const TimeGrid& grid = mu.grid();
    const std::size_t n = mu.channels();
    PathSeries Z(grid, {"Z"});
    PathSeries Z_alt(grid, {"Z_drift_form"});
    auto z = Z.channel(0);
    auto z_alt = Z_alt.channel(0);
    KahanSum acc;
    KahanSum acc_alt;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        const double growth = std::exp(rho * grid.time(k));
        double dz = 0.0;
        double dz_alt = 0.0;
        double drift = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double tilt = lambda.at(i, k) / mu.at(i, k);
            dz += tilt * (L.at(i, k + 1) - L.at(i, k));
            dz_alt += tilt * (mu.at(i, k + 1) - mu.at(i, k));
            drift += tilt * R.at(i, k);
        }
        acc.add(growth * dz);
        acc_alt.add(dz_alt + rho * (drift - 1.0) * grid.dt);
        z[k + 1] = acc.value();
        z_alt[k + 1] = acc_alt.value();
    }
    ZSeries out{Z, realized_covariation(Z, 0, Z, 0), Z_alt, 0.0};
    for (std::size_t k = 0; k < grid.points(); ++k) {
        out.max_form_discrepancy = std::max(out.max_form_discrepancy, std::abs(z[k] - z_alt[k]));
    }
    return out;
}

PathSeries compute_G(const PathSeries& lambda, const PathSeries& mu, const PathSeries& L, double rho) {
    require_same_width(lambda, mu, "compute_G");
    require_same_width(mu, L, "compute_G");
    const TimeGrid& grid = mu.grid();
    const std::size_t n = mu.channels();
    PathSeries G(grid, {"G"});
    auto g = G.channel(0);
    std::vector<double> tilt(n);
    std::vector<double> dL(n);
    KahanSum acc;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        const double growth2 = std::exp(2.0 * rho * grid.time(k));
        for (std::size_t i = 0; i < n; ++i) {
            tilt[i] = lambda.at(i, k) / mu.at(i, k);
            dL[i] = L.at(i, k + 1) - L.at(i, k);
        }
        double term = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) term += tilt[i] * tilt[j] * dL[i] * dL[j];
        }
        // the double sum is a square; negative values are rounding residue
        term = std::max(term, 0.0) * growth2;
        acc.add(term);
        g[k + 1] = std::max(acc.value(), g[k]);
    }
    return G;
}

PathSeries wright_fisher_g_closed_form(const PathSeries& lambda, const PathSeries& R, double sigma) {
    require_same_grid(lambda, R, "wright_fisher_g_closed_form");
    const TimeGrid& grid = R.grid();
    PathSeries G(grid, {"G_closed_form"});
    auto g = G.channel(0);
    KahanSum acc;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        const double gap = lambda.at(0, k) - R.at(0, k);
        acc.add(sigma * sigma * gap * gap * grid.dt);
        g[k + 1] = acc.value();
    }
    return G;
}

PathSeries stochastic_exponential(const PathSeries& Z, const PathSeries& QV, double initial_ratio) {
    require_same_grid(Z, QV, "stochastic_exponential");
    PathSeries out(Z.grid(), {"exp(Z-QV/2)"});
    const auto z = Z.channel(0);
    const auto qv = QV.channel(0);
    auto e = out.channel(0);
    for (std::size_t k = 0; k < z.size(); ++k) e[k] = initial_ratio * std::exp(z[k] - 0.5 * qv[k]);
    return out;
}

double max_relative_discrepancy(const PathSeries& a, const PathSeries& b, double scale_floor) {
    require_same_width(a, b, "max_relative_discrepancy");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        const double x = a.values()[i];
        const double y = b.values()[i];
        const double scale = std::max({std::abs(x), std::abs(y), scale_floor});
        worst = std::max(worst, std::abs(x - y) / scale);
    }
    return worst;
}

RatioDiagnostics simulate_market_path(const DividendModelSpec& model, const Strategy& strategy,
                                      const MarketParams& params, const BrownianPath& driver,
                                      const RngSpec& rng) {
    DividendPaths dividends = simulate(model, driver);
    const StrategyContext context{&model, params.rho, rng};
    PathSeries mu = strategy_path(Strategy::optimal(), dividends, context);
    PathSeries lambda = strategy_path(strategy, dividends, context);

    PathSeries V = representative_wealth(dividends.X_bar, params.rho);
    PathSeries S = prices(mu, V);
    SmallAgentWealth wealth = evolve_small_agent(lambda, mu, dividends, params);

    PathSeries ratio(dividends.grid, {"W/V"});
    for (std::size_t k = 0; k < dividends.grid.points(); ++k) {
        ratio.at(0, k) = wealth.W.at(0, k) / V.at(0, k);
    }
    PathSeries L = compute_L(mu, dividends.R, params.rho);
    ZSeries z = compute_Z(lambda, mu, L, params.rho, dividends.R);
    PathSeries G = compute_G(lambda, mu, L, params.rho);
    const double ratio0 = initial_ratio(params, dividends.X_bar.at(0, 0));

    return RatioDiagnostics{std::move(dividends), std::move(mu), std::move(lambda), std::move(V),
                            std::move(S), std::move(wealth.W), std::move(ratio), std::move(L),
                            std::move(z.Z), std::move(z.QV), std::move(G), ratio0,
                            z.max_form_discrepancy, wealth.excluded};
}

} // namespace mfm
