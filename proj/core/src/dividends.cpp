#include "mfm/dividends.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfm/error.hpp"

namespace mfm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<std::string> channel_labels(const char* prefix, std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i + 1));
    return out;
}

double clamp_share(double x) { return std::clamp(x, kSimplexFloor, 1.0 - kSimplexFloor); }

void require_open_unit(double x, const char* field) {
    if (!(x > 0.0 && x < 1.0)) throw ConfigError("must lie in (0, 1)", field);
}

void require_nonnegative(double x, const char* field) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError("must be finite and >= 0", field);
}

void validate_volatility(const MartingaleRSpec& spec) {
    const std::size_t n = spec.n_assets;
    const std::size_t k = spec.n_drivers;
    std::visit(
        overloaded{
            [&](const ConstantVolatility& v) {
                if (v.matrix.size() != n) {
                    throw ConfigError("matrix must have n_assets rows", "model.volatility.matrix");
                }
                for (const auto& row : v.matrix) {
                    if (row.size() != k) {
                        throw ConfigError("matrix rows must have n_drivers entries",
                                          "model.volatility.matrix");
                    }
                    for (double x : row) {
                        if (!std::isfinite(x)) {
                            throw ConfigError("matrix entries must be finite",
                                              "model.volatility.matrix");
                        }
                    }
                }
                for (std::size_t col = 0; col < k; ++col) {
                    KahanSum s;
                    double scale = 0.0;
                    for (std::size_t row = 0; row < n; ++row) {
                        s.add(v.matrix[row][col]);
                        scale = std::max(scale, std::abs(v.matrix[row][col]));
                    }
                    if (std::abs(s.value()) > 1e-12 * std::max(1.0, scale)) {
                        throw ConfigError("column " + std::to_string(col) +
                                              " does not sum to zero; sum(R) = 1 would drift",
                                          "model.volatility.matrix");
                    }
                }
            },
            [&](const LogisticVolatility& v) {
                if (n != 2 || k != 1) {
                    throw ConfigError("logistic volatility needs n_assets = 2, n_drivers = 1",
                                      "model.volatility");
                }
                require_nonnegative(v.sigma, "model.volatility.sigma");
            },
            [&](const SimplexVolatility& v) {
                if (k != n) {
                    throw ConfigError("simplex volatility needs n_drivers = n_assets",
                                      "model.volatility");
                }
                require_nonnegative(v.sigma, "model.volatility.sigma");
            },
            [&](const DelayedLogisticVolatility& v) {
                if (n != 2 || k != 1) {
                    throw ConfigError("delayed logistic volatility needs n_assets = 2, n_drivers = 1",
                                      "model.volatility");
                }
                require_nonnegative(v.sigma, "model.volatility.sigma");
                if (!(v.lag > 0.0) || !std::isfinite(v.lag)) {
                    throw ConfigError("lag must be positive", "model.volatility.lag");
                }
            },
        },
        spec.volatility);
}

// Diffusion increment sigma_t dB for the state-dependent martingale models;
// `at` is the state the volatility is evaluated on.
void martingale_increment(const MartingaleRSpec& spec, std::span<const double> at,
                          std::span<const double> dB, std::span<double> out) {
    const std::size_t n = spec.n_assets;
    std::fill(out.begin(), out.end(), 0.0);
    std::visit(overloaded{
                   [&](const ConstantVolatility& v) {
                       for (std::size_t i = 0; i < n; ++i) {
                           for (std::size_t j = 0; j < spec.n_drivers; ++j) {
                               out[i] += v.matrix[i][j] * dB[j];
                           }
                       }
                   },
                   [&](const LogisticVolatility& v) {
                       const double d = v.sigma * at[0] * (1.0 - at[0]) * dB[0];
                       out[0] = d;
                       out[1] = -d;
                   },
                   [&](const SimplexVolatility& v) {
                       // sum_k R^n (delta_nk - R^k) dB^k = R^n (dB^n - <R, dB>)
                       double projected = 0.0;
                       for (std::size_t j = 0; j < n; ++j) projected += at[j] * dB[j];
                       for (std::size_t i = 0; i < n; ++i) {
                           out[i] = v.sigma * at[i] * (dB[i] - projected);
                       }
                   },
                   [&](const DelayedLogisticVolatility& v) {
                       const double d = v.sigma * at[0] * (1.0 - at[0]) * dB[0];
                       out[0] = d;
                       out[1] = -d;
                   },
               },
               spec.volatility);
}

void check_driver(const BrownianPath& driver, std::size_t dims) {
    if (driver.dims() != dims) {
        throw ShapeError("driver has " + std::to_string(driver.dims()) + " dimensions, model needs " +
                         std::to_string(dims));
    }
}

// Built-in models use X := R, X_bar = 1.
DividendPaths unit_total_paths(PathSeries R) {
    const TimeGrid grid = R.grid();
    PathSeries X(grid, channel_labels("X", R.channels()), R.values());
    PathSeries X_bar(grid, {"X_bar"}, std::vector<double>(grid.points(), 1.0));
    return DividendPaths{grid, std::move(X), std::move(R), std::move(X_bar)};
}

DividendPaths two_asset_paths(const TimeGrid& grid, std::span<const double> r1) {
    PathSeries R(grid, channel_labels("R", 2));
    for (std::size_t k = 0; k < grid.points(); ++k) {
        R.at(0, k) = r1[k];
        R.at(1, k) = 1.0 - r1[k];
    }
    return unit_total_paths(std::move(R));
}

} // namespace

void validate(const DividendModelSpec& spec) {
    std::visit(overloaded{
                   [](const WrightFisherSpec& s) {
                       require_nonnegative(s.sigma, "model.sigma");
                       require_open_unit(s.x0, "model.x0");
                   },
                   [](const MartingaleRSpec& s) {
                       if (s.n_assets < 2) throw ConfigError("need at least two assets", "model.n_assets");
                       if (s.n_drivers < 1) throw ConfigError("need at least one driver", "model.n_drivers");
                       if (static_cast<double>(s.n_assets) * kSimplexFloor >= 1.0) {
                           throw ConfigError("too many assets for the simplex floor", "model.n_assets");
                       }
                       if (s.r0.size() != s.n_assets) {
                           throw ConfigError("must have n_assets entries", "model.r0");
                       }
                       KahanSum total;
                       for (double x : s.r0) {
                           if (!(x > 0.0)) throw ConfigError("entries must be positive", "model.r0");
                           total.add(x);
                       }
                       if (std::abs(total.value() - 1.0) > 1e-12) {
                           throw ConfigError("entries must sum to 1", "model.r0");
                       }
                       validate_volatility(s);
                   },
                   [](const LinearDriftSpec& s) {
                       if (!(s.kappa > 0.0) || !std::isfinite(s.kappa)) {
                           throw ConfigError("must be positive", "model.kappa");
                       }
                       require_open_unit(s.theta, "model.theta");
                       require_nonnegative(s.sigma, "model.sigma");
                       require_open_unit(s.r0, "model.r0");
                   },
               },
               spec);
}

std::size_t asset_count(const DividendModelSpec& spec) {
    if (const auto* m = std::get_if<MartingaleRSpec>(&spec)) return m->n_assets;
    return 2;
}

std::size_t driver_dims(const DividendModelSpec& spec) {
    if (const auto* m = std::get_if<MartingaleRSpec>(&spec)) return m->n_drivers;
    return 1;
}

bool is_markov(const DividendModelSpec& spec) {
    if (const auto* m = std::get_if<MartingaleRSpec>(&spec)) {
        return !std::holds_alternative<DelayedLogisticVolatility>(m->volatility);
    }
    return true;
}

bool is_martingale(const DividendModelSpec& spec) {
    return !std::holds_alternative<LinearDriftSpec>(spec);
}

std::vector<double> initial_state(const DividendModelSpec& spec) {
    return std::visit(overloaded{
                          [](const WrightFisherSpec& s) { return std::vector<double>{s.x0, 1.0 - s.x0}; },
                          [](const MartingaleRSpec& s) { return s.r0; },
                          [](const LinearDriftSpec& s) { return std::vector<double>{s.r0, 1.0 - s.r0}; },
                      },
                      spec);
}

std::string model_name(const DividendModelSpec& spec) {
    return std::visit(overloaded{
                          [](const WrightFisherSpec&) { return std::string("wright_fisher"); },
                          [](const MartingaleRSpec&) { return std::string("martingale_r"); },
                          [](const LinearDriftSpec&) { return std::string("linear_drift"); },
                      },
                      spec);
}

DividendPaths DividendPaths::from_intensities(PathSeries X) {
    const TimeGrid grid = X.grid();
    const std::size_t n = X.channels();
    PathSeries X_bar(grid, {"X_bar"});
    PathSeries R(grid, channel_labels("R", n));
    for (std::size_t k = 0; k < grid.points(); ++k) {
        KahanSum total;
        for (std::size_t c = 0; c < n; ++c) total.add(X.at(c, k));
        X_bar.at(0, k) = total.value();
        for (std::size_t c = 0; c < n; ++c) {
            R.at(c, k) = total.value() > 0.0 ? X.at(c, k) / total.value()
                                             : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return DividendPaths{grid, std::move(X), std::move(R), std::move(X_bar)};
}

DividendPaths simulate_wright_fisher(const WrightFisherSpec& spec, const BrownianPath& driver) {
    validate(DividendModelSpec{spec});
    check_driver(driver, 1);
    const TimeGrid& grid = driver.grid();
    std::vector<double> x(grid.points());
    x[0] = spec.x0;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        const double v = x[k];
        x[k + 1] = clamp_share(v + spec.sigma * v * (1.0 - v) * driver.increment(0, k));
    }
    return two_asset_paths(grid, x);
}

DividendPaths simulate_wright_fisher(const WrightFisherSpec& spec, const TimeGrid& grid,
                                     const RngSpec& rng) {
    return simulate_wright_fisher(spec, sample_brownian(grid, 1, rng));
}

DividendPaths simulate_martingale_R(const MartingaleRSpec& spec, const BrownianPath& driver) {
    validate(DividendModelSpec{spec});
    check_driver(driver, spec.n_drivers);
    const TimeGrid& grid = driver.grid();
    const std::size_t n = spec.n_assets;
    PathSeries R(grid, channel_labels("R", n));
    R.set_column(0, spec.r0);

    std::size_t lag_steps = 0;
    if (const auto* d = std::get_if<DelayedLogisticVolatility>(&spec.volatility)) {
        lag_steps = static_cast<std::size_t>(std::llround(d->lag / grid.dt));
    }
    std::vector<double> state = spec.r0;
    std::vector<double> dB(spec.n_drivers);
    std::vector<double> increment(n);
    std::vector<double> next(n);
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        for (std::size_t j = 0; j < spec.n_drivers; ++j) dB[j] = driver.increment(j, k);
        if (lag_steps > 0) {
            const auto lagged = R.column(k >= lag_steps ? k - lag_steps : 0);
            martingale_increment(spec, lagged, dB, increment);
        } else {
            martingale_increment(spec, state, dB, increment);
        }
        for (std::size_t i = 0; i < n; ++i) next[i] = state[i] + increment[i];
        state = project_to_simplex(next, kSimplexFloor, 0.0);
        R.set_column(k + 1, state);
    }
    return unit_total_paths(std::move(R));
}

DividendPaths simulate_martingale_R(const MartingaleRSpec& spec, const TimeGrid& grid,
                                    const RngSpec& rng) {
    return simulate_martingale_R(spec, sample_brownian(grid, spec.n_drivers, rng));
}

DividendPaths simulate_linear_drift_R(const LinearDriftSpec& spec, const BrownianPath& driver) {
    validate(DividendModelSpec{spec});
    check_driver(driver, 1);
    const TimeGrid& grid = driver.grid();
    std::vector<double> r(grid.points());
    r[0] = spec.r0;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        const double v = r[k];
        r[k + 1] = clamp_share(v + spec.kappa * (spec.theta - v) * grid.dt +
                               spec.sigma * v * (1.0 - v) * driver.increment(0, k));
    }
    return two_asset_paths(grid, r);
}

DividendPaths simulate_linear_drift_R(const LinearDriftSpec& spec, const TimeGrid& grid,
                                      const RngSpec& rng) {
    return simulate_linear_drift_R(spec, sample_brownian(grid, 1, rng));
}

DividendPaths simulate(const DividendModelSpec& spec, const BrownianPath& driver) {
    return std::visit(
        overloaded{
            [&](const WrightFisherSpec& s) { return simulate_wright_fisher(s, driver); },
            [&](const MartingaleRSpec& s) { return simulate_martingale_R(s, driver); },
            [&](const LinearDriftSpec& s) { return simulate_linear_drift_R(s, driver); },
        },
        spec);
}

void advance_state(const DividendModelSpec& spec, std::span<double> state,
                   std::span<const double> dB, double dt) {
    std::visit(
        overloaded{
            [&](const WrightFisherSpec& s) {
                const double v = state[0];
                state[0] = clamp_share(v + s.sigma * v * (1.0 - v) * dB[0]);
                state[1] = 1.0 - state[0];
            },
            [&](const MartingaleRSpec& s) {
                if (std::holds_alternative<DelayedLogisticVolatility>(s.volatility)) {
                    throw UnsupportedModel("delayed volatility is not Markovian in R");
                }
                std::vector<double> increment(s.n_assets);
                martingale_increment(s, state, dB, increment);
                for (std::size_t i = 0; i < s.n_assets; ++i) increment[i] += state[i];
                const auto next = project_to_simplex(increment, kSimplexFloor, 0.0);
                std::copy(next.begin(), next.end(), state.begin());
            },
            [&](const LinearDriftSpec& s) {
                const double v = state[0];
                state[0] = clamp_share(v + s.kappa * (s.theta - v) * dt +
                                       s.sigma * v * (1.0 - v) * dB[0]);
                state[1] = 1.0 - state[0];
            },
        },
        spec);
}

AssumptionReport check_assumptions(const DividendPaths& paths, double floor) {
    AssumptionReport report;
    const auto total = paths.X_bar.channel(0);
    for (std::size_t k = 0; k < total.size(); ++k) {
        if (!(total[k] > 0.0)) {
            report.total_intensity_positive = false;
            report.first_nonpositive_total = k;
            break;
        }
    }
    for (std::size_t c = 0; c < paths.R.channels(); ++c) {
        const auto r = paths.R.channel(c);
        const bool active = std::any_of(r.begin(), r.end(), [&](double x) { return x > floor / 2.0; });
        if (!active) {
            report.every_asset_active = false;
            report.inactive_assets.push_back(c);
        }
    }
    return report;
}

} // namespace mfm
