#include "mfm/strategy.hpp"

#include <algorithm>
#include <cmath>

#include "mfm/error.hpp"

namespace mfm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Weights (a, b) with  int_0^h rho e^{-rho v} f(v) dv = a f(0) + b f(h)
// for f linear on [0, h]. a + b = 1 - e^{-rho h}.
struct PanelWeights {
    double left;
    double right;
};

PanelWeights exponential_panel(double rho, double h) {
    const double x = rho * h;
    if (x == 0.0) return {0.0, 0.0};
    const double one_minus_decay = -std::expm1(-x);
    // (1 - e^{-x}(1 + x)) / x, written to avoid cancellation for small x
    const double right = (one_minus_decay - x * std::exp(-x)) / x;
    return {one_minus_decay - right, right};
}

} // namespace

std::vector<double> validate_simplex(std::span<const double> v, double floor) {
    return project_to_simplex(v, floor, 1e-12);
}

std::vector<double> optimal_mu_martingale(std::span<const double> R) {
    return {R.begin(), R.end()};
}

std::vector<double> optimal_mu_linear_drift(double r1, double kappa, double theta, double rho) {
    const double mu1 = theta + (r1 - theta) * rho / (rho + kappa);
    return {mu1, 1.0 - mu1};
}

std::vector<double> optimal_mu(const DividendModelSpec& model, std::span<const double> R, double rho) {
    if (const auto* lin = std::get_if<LinearDriftSpec>(&model)) {
        return optimal_mu_linear_drift(R[0], lin->kappa, lin->theta, rho);
    }
    return optimal_mu_martingale(R);
}

MuEstimate estimate_mu_nested_mc(const DividendModelSpec& model, std::span<const double> state,
                                 double t, double rho, double horizon, std::size_t inner_paths,
                                 double dt, const RngSpec& rng) {
    if (!is_markov(model)) {
        throw UnsupportedModel("nested Monte Carlo needs a model that is Markovian in R");
    }
    if (!(rho > 0.0)) throw ConfigError("must be positive", "rho");
    if (!(horizon > t)) throw ConfigError("horizon must exceed t", "horizon");
    if (inner_paths < 2) throw ConfigError("need at least two inner paths", "inner_paths");
    const std::size_t n = asset_count(model);
    if (state.size() != n) throw ShapeError("state size does not match the model's asset count");

    const TimeGrid grid = make_grid(t, horizon, dt);
    const double h = (horizon - t) / static_cast<double>(grid.n_steps);
    const PanelWeights panel = exponential_panel(rho, h);
    const double tail = std::exp(-rho * (horizon - t));
    const std::size_t dims = driver_dims(model);
    std::vector<double> left(grid.n_steps);
    std::vector<double> right(grid.n_steps);
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        const double discount = std::exp(-rho * h * static_cast<double>(k));
        left[k] = discount * panel.left;
        right[k] = discount * panel.right;
    }

    std::vector<double> mean(n, 0.0);
    std::vector<double> m2(n, 0.0);
    std::vector<double> current(n);
    std::vector<double> contribution(n);
    std::vector<double> dB(dims);
    for (std::size_t m = 0; m < inner_paths; ++m) {
        const BrownianPath driver = sample_brownian(grid, dims, rng.with_substream(
                                                                    static_cast<std::uint32_t>(m + 1)));
        std::copy(state.begin(), state.end(), current.begin());
        std::vector<KahanSum> integral(n);
        for (std::size_t k = 0; k < grid.n_steps; ++k) {
            for (std::size_t i = 0; i < n; ++i) integral[i].add(left[k] * current[i]);
            for (std::size_t j = 0; j < dims; ++j) dB[j] = driver.increment(j, k);
            advance_state(model, current, dB, h);
            for (std::size_t i = 0; i < n; ++i) integral[i].add(right[k] * current[i]);
        }
        // Welford update per component
        const double count = static_cast<double>(m + 1);
        for (std::size_t i = 0; i < n; ++i) {
            contribution[i] = integral[i].value() + tail * current[i];
            const double delta = contribution[i] - mean[i];
            mean[i] += delta / count;
            m2[i] += delta * (contribution[i] - mean[i]);
        }
    }

    MuEstimate out;
    out.truncation_bias_bound = tail;
    out.values = validate_simplex(mean);
    out.mc_standard_error.resize(n);
    const double paths = static_cast<double>(inner_paths);
    for (std::size_t i = 0; i < n; ++i) {
        out.mc_standard_error[i] = std::sqrt(m2[i] / (paths - 1.0) / paths);
    }
    return out;
}

Strategy Strategy::constant(std::vector<double> weights) {
    auto checked = validate_simplex(weights);
    return Strategy(ConstantStrategy{std::move(checked)});
}

Strategy Strategy::nested_mc(double lookahead, std::size_t inner_paths, double inner_dt) {
    if (!(lookahead > 0.0)) throw ConfigError("must be positive", "strategy.lookahead");
    if (inner_paths < 2) throw ConfigError("need at least two inner paths", "strategy.inner_paths");
    if (!(inner_dt > 0.0)) throw ConfigError("must be positive", "strategy.inner_dt");
    return Strategy(OptimalNestedMC{lookahead, inner_paths, inner_dt});
}

bool operator==(const Strategy& a, const Strategy& b) {
    if (a.kind_.index() != b.kind_.index()) return false;
    if (const auto* pa = std::get_if<PerturbedStrategy>(&a.kind_)) {
        const auto& pb = std::get<PerturbedStrategy>(b.kind_);
        return pa->direction == pb.direction && pa->weight == pb.weight && pa->base && pb.base &&
               *pa->base == *pb.base;
    }
    return std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, PerturbedStrategy>) {
                return false;
            } else {
                return x == std::get<T>(b.kind_);
            }
        },
        a.kind_);
}

Strategy perturbed_strategy(Strategy base, std::vector<double> direction, PerturbationWeight weight) {
    KahanSum total;
    for (double d : direction) {
        if (!std::isfinite(d)) throw ConfigError("entries must be finite", "strategy.direction");
        total.add(d);
    }
    if (std::abs(total.value()) > 1e-12) {
        throw ConfigError("must sum to zero to stay on the simplex", "strategy.direction");
    }
    if (const auto* c = std::get_if<ConstantStrategy>(&base.kind())) {
        if (c->weights.size() != direction.size()) {
            throw ConfigError("size does not match the base strategy", "strategy.direction");
        }
    }
    if (!std::isfinite(weight.amplitude) || !std::isfinite(weight.decay_rate)) {
        throw ConfigError("must be finite", "strategy.weight");
    }
    return Strategy(PerturbedStrategy{std::make_shared<const Strategy>(std::move(base)),
                                      std::move(direction), weight});
}

std::vector<double> evaluate(const Strategy& strategy, double t, std::span<const double> state,
                             const StrategyContext& context) {
    return std::visit(
        overloaded{
            [&](const ConstantStrategy& c) {
                if (c.weights.size() != state.size()) {
                    throw ShapeError("constant strategy size does not match the asset count");
                }
                return c.weights;
            },
            [&](const OptimalClosedForm&) {
                if (context.model == nullptr) {
                    throw ConfigError("optimal strategy needs the dividend model");
                }
                return optimal_mu(*context.model, state, context.rho);
            },
            [&](const OptimalNestedMC& n) {
                if (context.model == nullptr) {
                    throw ConfigError("optimal strategy needs the dividend model");
                }
                return estimate_mu_nested_mc(*context.model, state, t, context.rho, t + n.lookahead,
                                             n.inner_paths, n.inner_dt, context.rng)
                    .values;
            },
            [&](const PerturbedStrategy& p) {
                auto base = evaluate(*p.base, t, state, context);
                if (base.size() != p.direction.size()) {
                    throw ShapeError("perturbation size does not match the asset count");
                }
                const double w = p.weight(t);
                for (std::size_t i = 0; i < base.size(); ++i) base[i] += w * p.direction[i];
                return validate_simplex(base);
            },
        },
        strategy.kind());
}

PathSeries strategy_path(const Strategy& strategy, const DividendPaths& paths,
                         const StrategyContext& context) {
    const TimeGrid& grid = paths.grid;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < paths.R.channels(); ++i) labels.push_back("w" + std::to_string(i + 1));
    PathSeries out(grid, std::move(labels));
    for (std::size_t k = 0; k < grid.points(); ++k) {
        const auto state = paths.R.column(k);
        out.set_column(k, evaluate(strategy, grid.time(k), state, context));
    }
    return out;
}

} // namespace mfm
