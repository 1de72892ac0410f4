// Command line front end: simulate, estimate-mu, survival-sweep, selftest.
//
// Exit codes: 0 success, 2 configuration error, 3 model-assumption
// violation, 4 self-test failure, 1 anything else.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mfm/config.hpp"
#include "mfm/error.hpp"
#include "mfm/experiment.hpp"
#include "mfm/selftest.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kAssumption = 3;
constexpr int kSelftestFailed = 4;

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
};

void add_common(CLI::App& cmd, CommonFlags& flags, bool config_required) {
    auto* opt = cmd.add_option("--config", flags.config, "JSON configuration file");
    if (config_required) opt->required();
    cmd.add_option("--seed", flags.seed, "master seed (overrides config and MFM_SEED)");
    cmd.add_option("--paths", flags.paths, "number of Monte Carlo paths");
    cmd.add_option("--out", flags.out, "output directory");
    cmd.add_option("--threads", flags.threads, "worker threads; affects speed only")->check(CLI::PositiveNumber);
}

unsigned thread_count(const CommonFlags& flags) {
    if (flags.threads) return *flags.threads;
    if (auto env = mfm::process_env("MFM_THREADS")) {
        const auto n = mfm::parse_u64(*env, "MFM_THREADS");
        if (n == 0) throw mfm::ConfigError("must be positive", "MFM_THREADS");
        return static_cast<unsigned>(n);
    }
    return 1;
}

// Precedence: config file < MFM_* environment < command line flags.
void apply_overrides(mfm::ExperimentConfig& config, const CommonFlags& flags) {
    mfm::apply_env_overrides(config);
    if (flags.seed) config.master_seed = *flags.seed;
    if (flags.paths) config.n_paths = *flags.paths;
    if (flags.out) config.output_dir = *flags.out;
}

int cmd_simulate(const CommonFlags& flags) {
    mfm::ExperimentConfig config = mfm::load_config(flags.config);
    apply_overrides(config, flags);
    mfm::validate(config);
    const mfm::RunResult result = mfm::run(config, mfm::RunOptions{thread_count(flags), true});

    std::cout << "paths " << config.n_paths << ", excluded " << result.excluded_paths << "\n";
    for (const auto& c : result.checkpoints) {
        std::cout << "t=" << c.t << "  mean W/V " << c.mean_ratio << " (se " << c.se_ratio << ")  median G "
                  << c.median_G << "\n";
    }
    if (result.supermartingale) {
        std::cout << "supermartingale test: " << (result.supermartingale->passed ? "pass" : "fail") << "\n";
    }
    std::cout << "survival: " << mfm::to_string(result.survival.classification) << "\n";
    std::cout << "results in " << config.output_dir << " (config hash " << result.manifest.config_hash << ")\n";
    if (result.exclusion_limit_exceeded) {
        std::cerr << "error: excluded-path fraction " << result.manifest.excluded_fraction << " exceeds "
                  << config.analysis.max_excluded_fraction << "\n";
        return kAssumption;
    }
    return kOk;
}

int cmd_estimate_mu(const CommonFlags& flags) {
    mfm::EstimateMuRequest request = mfm::parse_estimate_mu(mfm::load_json(flags.config));
    if (auto env = mfm::process_env("MFM_SEED")) request.master_seed = mfm::parse_u64(*env, "MFM_SEED");
    if (flags.seed) request.master_seed = *flags.seed;
    if (flags.paths) {
        if (*flags.paths < 2) throw mfm::ConfigError("need at least two inner paths", "--paths");
        request.inner_paths = *flags.paths;
    }
    const mfm::MuEstimate estimate = mfm::run_estimate_mu(request);
    const nlohmann::json doc = mfm::to_json(request, estimate);

    std::cout << "mu_hat";
    for (double v : estimate.values) std::cout << ' ' << mfm::format_double(v);
    std::cout << "\nmc_standard_error";
    for (double v : estimate.mc_standard_error) std::cout << ' ' << mfm::format_double(v);
    std::cout << "\ntruncation_bias_bound " << mfm::format_double(estimate.truncation_bias_bound) << "\n";
    std::cout << doc.dump(2) << "\n";
    if (flags.out) {
        std::filesystem::create_directories(*flags.out);
        std::ofstream(std::filesystem::path(*flags.out) / "mu_estimate.json") << doc.dump(2) << "\n";
    }
    return kOk;
}

int cmd_survival_sweep(const CommonFlags& flags) {
    mfm::SweepSpec sweep = mfm::parse_sweep(mfm::load_json(flags.config));
    apply_overrides(sweep.base, flags);
    mfm::validate(sweep.base);
    const auto cells = mfm::survival_sweep(sweep, mfm::RunOptions{thread_count(flags), true});
    std::cout << mfm::survival_matrix_csv(cells);
    std::cout << "matrix written to " << (std::filesystem::path(sweep.base.output_dir) / "survival_matrix.csv").string()
              << "\n";
    return kOk;
}

int cmd_selftest(const CommonFlags& flags) {
    mfm::CheckOptions options;
    options.threads = thread_count(flags);
    if (flags.seed) options.master_seed = *flags.seed;
    if (flags.out) options.scratch_dir = *flags.out;
    bool all = true;
    for (const auto& result : mfm::run_selftest(options)) {
        std::cout << mfm::format_result(result) << std::endl;
        all = all && result.passed;
    }
    std::cout << (all ? "selftest passed" : "selftest FAILED") << "\n";
    return all ? kOk : kSelftestFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field market Monte Carlo engine", "mfm"};
    app.set_version_flag("--version", mfm::tool_version());
    app.require_subcommand(1);

    CommonFlags simulate_flags, mu_flags, sweep_flags, selftest_flags;
    auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo experiment from a config file");
    add_common(*simulate, simulate_flags, true);
    auto* estimate = app.add_subcommand("estimate-mu", "nested Monte Carlo estimate of the optimal weights");
    add_common(*estimate, mu_flags, true);
    auto* sweep = app.add_subcommand("survival-sweep", "classify survival over strategies and horizons");
    add_common(*sweep, sweep_flags, true);
    auto* selftest = app.add_subcommand("selftest", "run the built-in acceptance checks");
    add_common(*selftest, selftest_flags, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(simulate_flags);
        if (estimate->parsed()) return cmd_estimate_mu(mu_flags);
        if (sweep->parsed()) return cmd_survival_sweep(sweep_flags);
        return cmd_selftest(selftest_flags);
    } catch (const mfm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const mfm::UnsupportedModel& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const mfm::AssumptionViolation& e) {
        std::cerr << "assumption violation: " << e.what() << "\n";
        return kAssumption;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
