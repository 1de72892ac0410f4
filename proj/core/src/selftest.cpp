#include "mfm/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>

#include "mfm/analysis.hpp"
#include "mfm/config.hpp"
#include "mfm/experiment.hpp"
#include "mfm/market.hpp"
#include "mfm/parallel.hpp"

namespace mfm {

namespace {

std::string fmt(double x, int precision = 4) {
    std::ostringstream out;
    out.precision(precision);
    out << x;
    return out.str();
}

CriterionResult timed(int id, std::string title, const std::function<void(CriterionResult&)>& body) {
    CriterionResult r;
    r.id = id;
    r.title = std::move(title);
    const auto start = std::chrono::steady_clock::now();
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

ExperimentConfig wright_fisher_run(double T, double dt, std::size_t n_paths, Strategy strategy,
                                   std::uint64_t seed) {
    ExperimentConfig c;
    c.model = WrightFisherSpec{0.5, 0.5};
    c.market = MarketParams{2, 0.2, std::nullopt};
    c.grid = GridSpec{0.0, T, dt};
    c.strategy = std::move(strategy);
    c.n_paths = n_paths;
    c.master_seed = seed;
    return c;
}

std::string read_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Simulates the same driver at dt_fine * {4, 2, 1} and hands each level's
// diagnostics to `measure`, which returns one error per path.
std::vector<double> coupled_errors(const DividendModelSpec& model, const Strategy& strategy,
                                   const MarketParams& market, double T, double dt_fine,
                                   std::size_t n_paths, std::uint64_t seed, unsigned threads,
                                   const std::function<double(const RatioDiagnostics&)>& measure,
                                   std::vector<double>& steps) {
    const TimeGrid fine = make_grid(0.0, T, dt_fine);
    const std::size_t factors[] = {4, 2, 1};
    std::vector<std::vector<double>> per_level(3, std::vector<double>(n_paths));
    parallel_for(n_paths, threads, [&](std::size_t i) {
        const RngSpec rng{seed, i, 0};
        const BrownianPath driver = sample_brownian(fine, driver_dims(model), rng);
        for (std::size_t l = 0; l < 3; ++l) {
            const BrownianPath level = factors[l] == 1 ? driver : driver.coarsen(factors[l]);
            per_level[l][i] = measure(simulate_market_path(model, strategy, market, level, rng));
        }
    });
    steps.clear();
    std::vector<double> summary;
    for (std::size_t l = 0; l < 3; ++l) {
        steps.push_back(dt_fine * static_cast<double>(factors[l]));
        summary.push_back(median(per_level[l]));
    }
    return summary;
}

} // namespace

CriterionResult check_market_copy(const CheckOptions& options) {
    return timed(1, "market-copy invariance (lambda = mu)", [&](CriterionResult& r) {
        const TimeGrid grid = make_grid(0.0, 5.0, 1e-3);
        const std::size_t n_paths = 100;
        double worst = 0.0;
        std::string worst_model;
        for (double sigma : {0.0, 0.5}) {
            std::vector<DividendModelSpec> models{
                WrightFisherSpec{sigma, 0.5},
                MartingaleRSpec{2, 1, LogisticVolatility{sigma}, {0.4, 0.6}},
                MartingaleRSpec{3, 3, SimplexVolatility{sigma}, {0.2, 0.3, 0.5}},
                MartingaleRSpec{2, 1, ConstantVolatility{{{0.2 * sigma}, {-0.2 * sigma}}}, {0.5, 0.5}},
                MartingaleRSpec{2, 1, DelayedLogisticVolatility{sigma, 1.0}, {0.5, 0.5}},
                LinearDriftSpec{1.0, 0.5, sigma, 0.9},
            };
            for (const auto& model : models) {
                std::vector<double> gap(n_paths, 0.0);
                parallel_for(n_paths, options.threads, [&](std::size_t i) {
                    const RngSpec rng{options.master_seed, i, 0};
                    const auto d = simulate_market_path(model, Strategy::optimal(), MarketParams{asset_count(model), 0.2, std::nullopt},
                                                        sample_brownian(grid, driver_dims(model), rng), rng);
                    double g = 0.0;
                    for (double x : d.ratio.channel(0)) g = std::max(g, std::abs(x - d.initial_ratio));
                    gap[i] = g;
                });
                const double m = *std::max_element(gap.begin(), gap.end());
                if (m >= worst) {
                    worst = m;
                    worst_model = model_name(model) + " sigma=" + fmt(sigma);
                }
            }
        }
        r.passed = worst <= 1e-10;
        r.detail = "max |W/V - ratio_0| = " + fmt(worst) + " (" + worst_model + "), limit 1e-10";
    });
}

CriterionResult check_supermartingale(const CheckOptions& options) {
    return timed(2, "supermartingale (constant lambda, Wright-Fisher)", [&](CriterionResult& r) {
        ExperimentConfig c = wright_fisher_run(5.0, 1e-3, 10000, Strategy::constant({0.3, 0.7}),
                                               options.master_seed);
        c.checkpoints = {1.25, 2.5, 5.0};
        const RunResult run_result = run(c, RunOptions{options.threads, false});
        const auto& report = run_result.supermartingale.value();
        r.passed = report.passed && !run_result.exclusion_limit_exceeded;
        for (const auto& cp : report.checkpoints) {
            r.detail += "t=" + fmt(cp.t) + ": mean " + fmt(cp.mean, 6) + " <= 1 + 3*" + fmt(cp.standard_error, 3) +
                        (cp.pass ? " ok; " : " FAIL; ");
        }
        r.detail += "excluded " + std::to_string(report.excluded_paths);
    });
}

CriterionResult check_mu_oracle(const CheckOptions& options) {
    return timed(3, "nested MC vs linear-drift closed form", [&](CriterionResult& r) {
        const LinearDriftSpec model{1.0, 0.5, 0.3, 0.9};
        const MuEstimate e = estimate_mu_nested_mc(model, std::vector<double>{0.9, 0.1}, 0.0, 1.0, 8.0, 10000,
                                                   1e-3, RngSpec{options.master_seed, 0, 0});
        const double exact = optimal_mu_linear_drift(0.9, 1.0, 0.5, 1.0)[0];
        const double gap = std::abs(e.values[0] - exact);
        const double limit = std::exp(-8.0) + 3.0 * e.mc_standard_error[0];
        r.passed = gap <= limit;
        r.detail = "mu1 = " + fmt(e.values[0], 7) + " vs " + fmt(exact, 7) + ", |gap| " + fmt(gap, 3) + " <= " +
                   fmt(limit, 3);
    });
}

CriterionResult check_martingale_mu(const CheckOptions& options) {
    return timed(4, "nested MC vs mu = R (Wright-Fisher)", [&](CriterionResult& r) {
        const WrightFisherSpec model{0.5, 0.5};
        const double rho = 1.0, horizon = 8.0;
        r.passed = true;
        std::uint32_t k = 0;
        for (double r1 : {0.2, 0.5, 0.8}) {
            const MuEstimate e = estimate_mu_nested_mc(model, std::vector<double>{r1, 1.0 - r1}, 0.0, rho, horizon,
                                                       10000, 1e-2, RngSpec{options.master_seed, k++, 0});
            const double gap = std::abs(e.values[0] - r1);
            const double limit = e.truncation_bias_bound + 3.0 * e.mc_standard_error[0];
            const bool ok = gap <= limit;
            r.passed = r.passed && ok;
            r.detail += "R1=" + fmt(r1) + ": " + fmt(e.values[0], 6) + " (gap " + fmt(gap, 3) + " <= " + fmt(limit, 3) +
                        (ok ? ") " : ") FAIL ");
        }
    });
}

CriterionResult check_g_identity(const CheckOptions& options) {
    return timed(5, "G = [Z] and Wright-Fisher closed form", [&](CriterionResult& r) {
        // Pathwise identity on a Wright-Fisher and a three-asset market.
        double identity_gap = 0.0;
        const TimeGrid grid = make_grid(0.0, 5.0, 1e-3);
        const std::vector<std::pair<DividendModelSpec, Strategy>> cases{
            {WrightFisherSpec{0.5, 0.5}, Strategy::constant({0.3, 0.7})},
            {MartingaleRSpec{3, 3, SimplexVolatility{0.5}, {0.2, 0.3, 0.5}}, Strategy::constant({0.5, 0.25, 0.25})},
        };
        for (const auto& [model, strategy] : cases) {
            for (std::size_t i = 0; i < 20; ++i) {
                const RngSpec rng{options.master_seed, i, 0};
                const auto d = simulate_market_path(model, strategy, MarketParams{asset_count(model), 0.2, std::nullopt},
                                                    sample_brownian(grid, driver_dims(model), rng), rng);
                identity_gap = std::max(identity_gap, max_relative_discrepancy(d.G, d.QV));
            }
        }

        // Closed form sigma^2 int (lambda1 - R1)^2 ds, with coupled dt halving.
        const double sigma = 0.5;
        std::vector<double> steps;
        const auto errors = coupled_errors(
            WrightFisherSpec{sigma, 0.5}, Strategy::constant({0.3, 0.7}), MarketParams{2, 0.2, std::nullopt}, 40.0,
            2.5e-4, 400, options.master_seed + 1, options.threads,
            [&](const RatioDiagnostics& d) {
                const PathSeries cf = wright_fisher_g_closed_form(d.lambda, d.dividends.R, sigma);
                const std::size_t end = d.G.points() - 1;
                return std::abs(d.G.at(0, end) - cf.at(0, end)) / cf.at(0, end);
            },
            steps);
        const RefinementReport refinement = refinement_study(steps, errors, 1.3);
        // errors are ordered coarse to fine; the coarsest step is 1e-3.
        const bool level_ok = errors.front() <= 1e-2;
        r.passed = identity_gap <= 1e-9 && level_ok && refinement.passed;
        r.detail = "max |G - [Z]|/G = " + fmt(identity_gap, 3) + "; median rel. gap to closed form at dt=" +
                   fmt(steps[0]) + ", " + fmt(steps[1]) + ", " + fmt(steps[2]) + ": " + fmt(errors[0], 3) + ", " +
                   fmt(errors[1], 3) + ", " + fmt(errors[2], 3) + "; halving ratios " + fmt(refinement.ratios[0], 3) +
                   ", " + fmt(refinement.ratios[1], 3);
    });
}

CriterionResult check_extinction(const CheckOptions& options) {
    return timed(6, "extinction direction (constant lambda)", [&](CriterionResult& r) {
        const ExperimentConfig c =
            wright_fisher_run(40.0, 5e-3, 2000, Strategy::constant({0.3, 0.7}), options.master_seed);
        const RunResult res = run(c, RunOptions{options.threads, false});
        const auto& s = res.survival;
        r.passed = s.median_growth_ratio >= 1.5 && s.median_ratio_end < s.median_ratio_half &&
                   !res.exclusion_limit_exceeded;
        r.detail = "median G_T/G_T/2 = " + fmt(s.median_growth_ratio) + " (>= 1.5), median W/V " +
                   fmt(s.median_ratio_half) + " -> " + fmt(s.median_ratio_end) + ", classified " +
                   to_string(s.classification);
    });
}

CriterionResult check_survival(const CheckOptions& options) {
    return timed(7, "survival direction (vanishing perturbation)", [&](CriterionResult& r) {
        const Strategy lambda = perturbed_strategy(Strategy::optimal(), {0.1, -0.1}, PerturbationWeight{1.0, 1.0});
        const ExperimentConfig c = wright_fisher_run(40.0, 5e-3, 2000, lambda, options.master_seed);
        const RunResult res = run(c, RunOptions{options.threads, false});
        const auto& s = res.survival;
        r.passed = s.median_g_increment <= 0.05 * s.g_half_median && s.p05_ratio_end > 0.0 &&
                   !res.exclusion_limit_exceeded;
        r.detail = "median G_T - G_T/2 = " + fmt(s.median_g_increment, 3) + " vs 0.05 * " + fmt(s.g_half_median, 3) +
                   ", p05 W_T/V_T = " + fmt(s.p05_ratio_end) + ", classified " + to_string(s.classification);
    });
}

CriterionResult check_ito_consistency(const CheckOptions& options) {
    return timed(8, "Ito consistency of W/V and exp(Z - [Z]/2)", [&](CriterionResult& r) {
        std::vector<double> steps;
        std::vector<double> errors;
        const WrightFisherSpec model{0.5, 0.5};
        const TimeGrid fine = make_grid(0.0, 5.0, 1e-3);
        const std::size_t n_paths = 200;
        const std::size_t factors[] = {4, 2, 1};
        std::vector<std::vector<double>> worst(3, std::vector<double>(n_paths));
        parallel_for(n_paths, options.threads, [&](std::size_t i) {
            const RngSpec rng{options.master_seed, i, 0};
            const BrownianPath driver = sample_brownian(fine, 1, rng);
            for (std::size_t l = 0; l < 3; ++l) {
                const BrownianPath level = factors[l] == 1 ? driver : driver.coarsen(factors[l]);
                const auto d = simulate_market_path(model, Strategy::constant({0.3, 0.7}),
                                                    MarketParams{2, 0.2, std::nullopt}, level, rng);
                const PathSeries rebuilt = stochastic_exponential(d.Z, d.QV, d.initial_ratio);
                worst[l][i] = ito_consistency(std::span(&d.ratio, 1), std::span(&rebuilt, 1)).max_log_error;
            }
        });
        for (std::size_t l = 0; l < 3; ++l) {
            steps.push_back(1e-3 * static_cast<double>(factors[l]));
            errors.push_back(*std::max_element(worst[l].begin(), worst[l].end()));
        }
        const RefinementReport rep = refinement_study(steps, errors, 1.3);
        r.passed = rep.passed;
        r.detail = "max |log gap| at dt=4e-3, 2e-3, 1e-3: " + fmt(errors[0], 3) + ", " + fmt(errors[1], 3) + ", " +
                   fmt(errors[2], 3) + "; halving ratios " + fmt(rep.ratios[0], 3) + ", " + fmt(rep.ratios[1], 3);
    });
}

CriterionResult check_determinism(const CheckOptions& options) {
    return timed(9, "determinism across reruns and thread counts", [&](CriterionResult& r) {
        ExperimentConfig c = wright_fisher_run(2.0, 1e-3, 400, Strategy::constant({0.3, 0.7}), options.master_seed);
        const std::vector<std::pair<std::string, unsigned>> runs{{"a", 1}, {"b", 1}, {"c", 4}};
        for (const auto& [name, threads] : runs) {
            c.output_dir = (options.scratch_dir / ("determinism-" + name)).string();
            std::filesystem::remove_all(c.output_dir);
            run(c, RunOptions{threads, true});
        }
        r.passed = true;
        for (const char* file : {"paths_summary.csv", "checkpoint_stats.csv", "supermartingale.json", "survival.json"}) {
            const std::string a = read_file(options.scratch_dir / "determinism-a" / file);
            const bool same = !a.empty() && a == read_file(options.scratch_dir / "determinism-b" / file) &&
                              a == read_file(options.scratch_dir / "determinism-c" / file);
            if (!same) {
                r.passed = false;
                r.detail += std::string(file) + " differs; ";
            }
        }
        if (r.passed) r.detail = "4 result files identical over runs {1 thread, 1 thread, 4 threads}";
    });
}

std::vector<CriterionResult> run_selftest(const CheckOptions& options) {
    return {check_market_copy(options), check_mu_oracle(options), check_martingale_mu(options),
            check_g_identity(options), check_determinism(options)};
}

std::string format_result(const CriterionResult& result) {
    std::ostringstream out;
    out.precision(3);
    out << (result.passed ? "[PASS] " : "[FAIL] ") << result.id << ' ' << result.title << " ("
        << std::fixed << result.seconds << " s): " << result.detail;
    return out.str();
}

} // namespace mfm
