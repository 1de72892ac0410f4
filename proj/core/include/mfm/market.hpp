#pragma once

#include <cstddef>
#include <optional>

#include "mfm/dividends.hpp"
#include "mfm/paths.hpp"
#include "mfm/strategy.hpp"

namespace mfm {

/// Market constants. Share supplies s^n are fixed to 1 and not stored.
struct MarketParams {
    std::size_t n_assets = 2;
    double rho = 0.2;
    /// Small-agent initial wealth; defaults to V_0 so that W_0/V_0 = 1.
    std::optional<double> w0;

    friend bool operator==(const MarketParams&, const MarketParams&) = default;
};

void validate(const MarketParams& params);

/// W_0/V_0 = w0 rho / X_bar_0.
double initial_ratio(const MarketParams& params, double x_bar0);

/// V_t = X_bar_t / rho. Throws AssumptionViolation if X_bar <= 0 anywhere.
PathSeries representative_wealth(const PathSeries& X_bar, double rho);

/// S^n_t = mu^n_t V_t. Throws AssumptionViolation if any mu^n is below the
/// simplex floor (inadmissible strategy).
PathSeries prices(const PathSeries& mu, const PathSeries& V);

struct SmallAgentWealth {
    PathSeries W;
    /// W reached <= 0 (a discretization artifact); remaining points are 0.
    bool excluded = false;
    std::optional<std::size_t> failure_step;
};

/// Explicit Euler recursion of the small agent's wealth:
///   W_{k+1} = W_k + sum_n (lambda^n_k W_k / S^n_k)(S^n_{k+1} - S^n_k + X^n_k dt) - rho W_k dt.
/// Left-point weights and prices against forward price increments make
/// W_k / V_k constant when lambda = mu, up to rounding.
SmallAgentWealth evolve_small_agent(const PathSeries& lambda, const PathSeries& mu,
                                    const DividendPaths& paths, const MarketParams& params);

/// dL^n = e^{-rho t}(dmu^n - rho (mu^n - R^n) dt), L_0 = 0, with the
/// discount taken at the left end of each step. Only meaningful when mu is
/// the growth-optimal strategy.
PathSeries compute_L(const PathSeries& mu, const PathSeries& R, double rho);

struct ZSeries {
    /// dZ = e^{rho t} sum_n (lambda^n / mu^n) dL^n.
    PathSeries Z;
    /// realized_covariation(Z, Z).
    PathSeries QV;
    /// dZ = sum_n (lambda^n / mu^n) dmu^n + rho (sum_n lambda^n R^n / mu^n - 1) dt.
    PathSeries Z_drift_form;
    double max_form_discrepancy = 0.0;
};

ZSeries compute_Z(const PathSeries& lambda, const PathSeries& mu, const PathSeries& L, double rho,
                  const PathSeries& R);

/// G_t = sum_{i,j} sum_k e^{2 rho t_k} lambda^i lambda^j / (mu^i mu^j) dL^i dL^j,
/// accumulated from pairwise covariation increments. Never decreases.
PathSeries compute_G(const PathSeries& lambda, const PathSeries& mu, const PathSeries& L, double rho);

/// sigma^2 * left-point Riemann sum of (lambda^1 - R^1)^2, the closed form of
/// G in the two-asset Wright-Fisher model.
PathSeries wright_fisher_g_closed_form(const PathSeries& lambda, const PathSeries& R, double sigma);

/// ratio_0 * exp(Z_t - QV_t / 2).
PathSeries stochastic_exponential(const PathSeries& Z, const PathSeries& QV, double initial_ratio = 1.0);

/// Relative gap |a - b| / max(|a|, |b|, scale_floor), maximized over the grid.
/// scale_floor keeps identically-zero series (lambda = mu) from dividing
/// rounding noise by rounding noise.
double max_relative_discrepancy(const PathSeries& a, const PathSeries& b, double scale_floor = 1e-15);

struct RatioDiagnostics {
    DividendPaths dividends;
    PathSeries mu;
    PathSeries lambda;
    PathSeries V;
    PathSeries S;
    PathSeries W;
    PathSeries ratio;
    PathSeries L;
    PathSeries Z;
    PathSeries QV;
    PathSeries G;
    double initial_ratio = 1.0;
    double z_form_discrepancy = 0.0;
    bool excluded = false;
};

/// Full per-path pipeline: dividends from `driver`, representative agents on
/// the closed-form optimal strategy, small agent on `strategy`.
RatioDiagnostics simulate_market_path(const DividendModelSpec& model, const Strategy& strategy,
                                      const MarketParams& params, const BrownianPath& driver,
                                      const RngSpec& rng);

} // namespace mfm
