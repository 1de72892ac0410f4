#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "mfm/dividends.hpp"
#include "mfm/paths.hpp"
#include "mfm/rng.hpp"
#include "mfm/simplex.hpp"

namespace mfm {

/// Clamp-and-renormalize onto the simplex. Inputs already on the simplex
/// (components >= floor, sum within 1e-12 of 1) are returned unchanged.
/// Throws InvalidStrategy when no component is positive.
std::vector<double> validate_simplex(std::span<const double> v, double floor = kSimplexFloor);

/// Growth-optimal weights when R is a martingale: mu = R.
std::vector<double> optimal_mu_martingale(std::span<const double> R);

/// Growth-optimal weights for the linear-drift model. Substituting the
/// conditional mean theta + (R1 - theta) e^{-kappa (s - t)} into the
/// discounted-expectation integral gives
///   mu1 = theta + (R1 - theta) rho / (rho + kappa).
std::vector<double> optimal_mu_linear_drift(double r1, double kappa, double theta, double rho);

/// Closed-form optimal weights for any built-in Markov model at state R.
std::vector<double> optimal_mu(const DividendModelSpec& model, std::span<const double> R, double rho);

struct MuEstimate {
    std::vector<double> values;
    /// e^{-rho (T - t)}: bound on the error from truncating the integral at T.
    double truncation_bias_bound = 1.0;
    std::vector<double> mc_standard_error;
};

/// Nested Monte Carlo estimate of the growth-optimal weights at (t, state).
///
/// Each inner path is an Euler path of the model from `state` over [t, T]
/// with step `dt`. Its contribution is
///   int_t^T rho e^{rho (t - s)} R_s ds + e^{-rho (T - t)} R_T,
/// where the integral treats R as piecewise linear between grid points and
/// integrates the exponential kernel exactly. The kernel weights therefore
/// sum to 1 - e^{-rho (T - t)} and each contribution lies on the simplex.
///
/// `horizon` is the absolute truncation time T > t. Inner path m draws from
/// rng.with_substream(m + 1).
/// Throws UnsupportedModel for models that are not Markovian in R.
MuEstimate estimate_mu_nested_mc(const DividendModelSpec& model, std::span<const double> state,
                                 double t, double rho, double horizon, std::size_t inner_paths,
                                 double dt, const RngSpec& rng);

/// w(t) = amplitude * e^{-decay_rate t}; decay_rate = 0 gives a constant.
struct PerturbationWeight {
    double amplitude = 1.0;
    double decay_rate = 1.0;

    double operator()(double t) const { return amplitude * std::exp(-decay_rate * t); }
    friend bool operator==(const PerturbationWeight&, const PerturbationWeight&) = default;
};

class Strategy;

struct ConstantStrategy {
    std::vector<double> weights;
    friend bool operator==(const ConstantStrategy&, const ConstantStrategy&) = default;
};

/// Growth-optimal weights from the model's closed form.
struct OptimalClosedForm {
    friend bool operator==(const OptimalClosedForm&, const OptimalClosedForm&) = default;
};

/// Growth-optimal weights from nested Monte Carlo at every evaluation, with
/// horizon T = t + lookahead. The same inner random streams are reused at
/// every evaluation time.
struct OptimalNestedMC {
    double lookahead = 8.0;
    std::size_t inner_paths = 1000;
    double inner_dt = 1e-2;
    friend bool operator==(const OptimalNestedMC&, const OptimalNestedMC&) = default;
};

/// lambda_t = validate_simplex(base(t) + w(t) * direction), sum(direction) = 0.
struct PerturbedStrategy {
    std::shared_ptr<const Strategy> base;
    std::vector<double> direction;
    PerturbationWeight weight;
};

class Strategy {
public:
    using Kind = std::variant<ConstantStrategy, OptimalClosedForm, OptimalNestedMC, PerturbedStrategy>;

    Strategy() : kind_(OptimalClosedForm{}) {}
    explicit Strategy(Kind kind) : kind_(std::move(kind)) {}

    static Strategy constant(std::vector<double> weights);
    static Strategy optimal() { return Strategy(OptimalClosedForm{}); }
    static Strategy nested_mc(double lookahead, std::size_t inner_paths, double inner_dt);

    const Kind& kind() const noexcept { return kind_; }

    friend bool operator==(const Strategy& a, const Strategy& b);

private:
    Kind kind_;
};

/// Throws ConfigError unless sum(direction) = 0 (to 1e-12) and sizes agree.
Strategy perturbed_strategy(Strategy base, std::vector<double> direction, PerturbationWeight weight);

/// Everything a strategy may need besides (t, state).
struct StrategyContext {
    const DividendModelSpec* model = nullptr;
    double rho = 1.0;
    /// Outer-path stream; nested estimators derive inner substreams from it.
    RngSpec rng{};
};

std::vector<double> evaluate(const Strategy& strategy, double t, std::span<const double> state,
                             const StrategyContext& context);

/// Strategy weights at every grid point of `paths`, evaluated on R.
PathSeries strategy_path(const Strategy& strategy, const DividendPaths& paths,
                         const StrategyContext& context);

} // namespace mfm
