#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mfm/paths.hpp"
#include "mfm/simplex.hpp"

namespace mfm {

/// dX1 = sigma X1 (1 - X1) dB, X2 = 1 - X1 (two assets, one driver).
struct WrightFisherSpec {
    double sigma = 0.5;
    double x0 = 0.5;

    friend bool operator==(const WrightFisherSpec&, const WrightFisherSpec&) = default;
};

/// Constant N x K diffusion matrix. Every column must sum to zero.
struct ConstantVolatility {
    std::vector<std::vector<double>> matrix;

    friend bool operator==(const ConstantVolatility&, const ConstantVolatility&) = default;
};

/// N = 2, K = 1: sigma_t = sigma R1 (1 - R1) (+1, -1). Equivalent to the
/// Wright-Fisher model.
struct LogisticVolatility {
    double sigma = 0.5;

    friend bool operator==(const LogisticVolatility&, const LogisticVolatility&) = default;
};

/// K = N: sigma_t^{nk} = sigma R^n (delta_nk - R^k). Columns sum to zero for
/// any state on the simplex.
struct SimplexVolatility {
    double sigma = 0.5;

    friend bool operator==(const SimplexVolatility&, const SimplexVolatility&) = default;
};

/// N = 2, K = 1: the logistic volatility evaluated at R_{t - lag} (R_0 before
/// t = lag). The current state does not determine the law of the future, so
/// this variant is not Markovian in R.
struct DelayedLogisticVolatility {
    double sigma = 0.5;
    double lag = 1.0;

    friend bool operator==(const DelayedLogisticVolatility&, const DelayedLogisticVolatility&) = default;
};

using VolatilitySpec =
    std::variant<ConstantVolatility, LogisticVolatility, SimplexVolatility, DelayedLogisticVolatility>;

/// dR = sigma_t dB on the simplex.
struct MartingaleRSpec {
    std::size_t n_assets = 2;
    std::size_t n_drivers = 1;
    VolatilitySpec volatility = LogisticVolatility{};
    std::vector<double> r0{0.5, 0.5};

    friend bool operator==(const MartingaleRSpec&, const MartingaleRSpec&) = default;
};

/// dR1 = kappa (theta - R1) dt + sigma R1 (1 - R1) dB, R2 = 1 - R1.
struct LinearDriftSpec {
    double kappa = 1.0;
    double theta = 0.5;
    double sigma = 0.3;
    double r0 = 0.9;

    friend bool operator==(const LinearDriftSpec&, const LinearDriftSpec&) = default;
};

using DividendModelSpec = std::variant<WrightFisherSpec, MartingaleRSpec, LinearDriftSpec>;

/// Throws ConfigError naming the offending parameter.
void validate(const DividendModelSpec& spec);

std::size_t asset_count(const DividendModelSpec& spec);
std::size_t driver_dims(const DividendModelSpec& spec);
/// Whether the current relative intensities determine the law of the future.
bool is_markov(const DividendModelSpec& spec);
/// Whether R is a martingale, in which case the growth-optimal strategy is R itself.
bool is_martingale(const DividendModelSpec& spec);
std::vector<double> initial_state(const DividendModelSpec& spec);
std::string model_name(const DividendModelSpec& spec);

/// Dividend intensities X (N channels), their total X_bar (1 channel) and
/// relative intensities R = X / X_bar (N channels) on a common grid.
struct DividendPaths {
    TimeGrid grid;
    PathSeries X;
    PathSeries R;
    PathSeries X_bar;

    /// Builds X_bar and R from X. R is NaN wherever X_bar <= 0; such paths
    /// fail check_assumptions.
    static DividendPaths from_intensities(PathSeries X);
};

DividendPaths simulate_wright_fisher(const WrightFisherSpec& spec, const BrownianPath& driver);
DividendPaths simulate_wright_fisher(const WrightFisherSpec& spec, const TimeGrid& grid,
                                     const RngSpec& rng);
DividendPaths simulate_martingale_R(const MartingaleRSpec& spec, const BrownianPath& driver);
DividendPaths simulate_martingale_R(const MartingaleRSpec& spec, const TimeGrid& grid,
                                    const RngSpec& rng);
DividendPaths simulate_linear_drift_R(const LinearDriftSpec& spec, const BrownianPath& driver);
DividendPaths simulate_linear_drift_R(const LinearDriftSpec& spec, const TimeGrid& grid,
                                      const RngSpec& rng);

/// Dispatches on the model variant.
DividendPaths simulate(const DividendModelSpec& spec, const BrownianPath& driver);

/// One Euler step of a Markovian model from `state` (a simplex vector),
/// written in place. Throws UnsupportedModel for non-Markov variants.
void advance_state(const DividendModelSpec& spec, std::span<double> state,
                   std::span<const double> dB, double dt);

struct AssumptionReport {
    bool total_intensity_positive = true;
    /// Discrete proxy only: every asset's R^n exceeds floor/2 somewhere on
    /// the path. The real condition concerns the conditional law of the
    /// infinite future and cannot be checked from one finite path.
    bool every_asset_active = true;
    std::optional<std::size_t> first_nonpositive_total;
    std::vector<std::size_t> inactive_assets;

    bool passed() const noexcept { return total_intensity_positive && every_asset_active; }
};

AssumptionReport check_assumptions(const DividendPaths& paths, double floor = kSimplexFloor);

} // namespace mfm
