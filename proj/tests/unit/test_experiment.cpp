#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "mfm/error.hpp"
#include "mfm/experiment.hpp"

namespace {

using namespace mfm;
namespace fs = std::filesystem;

ExperimentConfig small_config(const fs::path& out) {
    ExperimentConfig c;
    c.model = WrightFisherSpec{0.5, 0.5};
    c.market = MarketParams{2, 0.2, std::nullopt};
    c.grid = GridSpec{0.0, 1.0, 1e-2};
    c.strategy = Strategy::constant({0.3, 0.7});
    c.n_paths = 150;
    c.master_seed = 99;
    c.output_dir = out.string();
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "mfm-unit" / name;
    fs::remove_all(p);
    return p;
}

TEST(FormatDouble, SeventeenDigitsRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, 2.0, 1e-300, -123.456, 6.02214076e23}) {
        EXPECT_EQ(std::stod(format_double(x)), x);
    }
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(Run, WritesAllArtifacts) {
    const fs::path dir = scratch("artifacts");
    const RunResult r = run(small_config(dir));
    for (const char* f : {"paths_summary.csv", "checkpoint_stats.csv", "supermartingale.json", "survival.json",
                          "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    std::ifstream in(dir / "checkpoint_stats.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "t,mean_ratio,se_ratio,median_ratio,p05_ratio,mean_G,median_G");
    EXPECT_EQ(r.checkpoints.size(), 3u);
    EXPECT_EQ(r.paths.size(), 150u);
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest.at("config_hash"), config_hash(small_config(dir)));
    EXPECT_EQ(manifest.at("master_seed"), 99u);
    EXPECT_EQ(manifest.at("tool_version"), tool_version());
    EXPECT_TRUE(r.supermartingale.has_value());
}

TEST(Run, ByteIdenticalAcrossRunsAndThreads) {
    const fs::path a = scratch("det-a"), b = scratch("det-b"), c = scratch("det-c");
    run(small_config(a), {1, true});
    run(small_config(b), {1, true});
    run(small_config(c), {4, true});
    for (const char* f : {"paths_summary.csv", "checkpoint_stats.csv", "supermartingale.json", "survival.json"}) {
        const std::string ref = slurp(a / f);
        ASSERT_FALSE(ref.empty());
        EXPECT_EQ(ref, slurp(b / f)) << f;
        EXPECT_EQ(ref, slurp(c / f)) << f;
    }
}

TEST(Run, SeedChangesResults) {
    const fs::path a = scratch("seed-a"), b = scratch("seed-b");
    ExperimentConfig c = small_config(a);
    run(c);
    c.master_seed = 100;
    c.output_dir = b.string();
    run(c);
    EXPECT_NE(slurp(a / "paths_summary.csv"), slurp(b / "paths_summary.csv"));
}

TEST(Run, MarketCopyHasUnitRatios) {
    ExperimentConfig c = small_config(scratch("copy"));
    c.strategy = Strategy::optimal();
    const RunResult r = run(c, {1, false});
    for (const auto& cp : r.checkpoints) EXPECT_NEAR(cp.mean_ratio, 1.0, 1e-12);
    EXPECT_EQ(r.survival.classification, SurvivalClass::SurvivalConsistent);
    EXPECT_FALSE(fs::exists(c.output_dir));
}

TEST(Run, SmallRunSkipsSupermartingaleVerdict) {
    ExperimentConfig c = small_config(scratch("small"));
    c.n_paths = 10;
    const RunResult r = run(c);
    EXPECT_FALSE(r.supermartingale.has_value());
    const auto sm = nlohmann::json::parse(slurp(fs::path(c.output_dir) / "supermartingale.json"));
    EXPECT_EQ(sm.at("status"), "insufficient_paths");
}

TEST(Run, InvalidConfigThrows) {
    ExperimentConfig c = small_config(scratch("bad"));
    c.n_paths = 0;
    EXPECT_THROW(run(c), ConfigError);
}

TEST(Sweep, SixClassifiedRows) {
    const fs::path dir = scratch("sweep");
    const nlohmann::json j = {
        {"schema_version", 1},
        {"base", nlohmann::json::parse(R"({"schema_version": 1,
            "model": {"type": "wright_fisher", "sigma": 0.5, "x0": 0.5},
            "market": {"rho": 0.2}, "grid": {"t_end": 10, "dt": 0.01},
            "strategy": {"type": "optimal"}, "n_paths": 300, "master_seed": 5})")},
        {"strategies",
         {{{"label", "mu"}, {"strategy", {{"type", "optimal"}}}},
          {{"label", "perturbed"},
           {"strategy",
            {{"type", "perturbed"},
             {"base", {{"type", "optimal"}}},
             {"direction", {0.1, -0.1}},
             {"weight", {{"amplitude", 1.0}, {"decay_rate", 1.0}}}}}},
          {{"label", "constant"}, {"strategy", {{"type", "constant"}, {"weights", {0.3, 0.7}}}}}}},
        {"horizons", {10.0, 40.0}}};
    SweepSpec spec = parse_sweep(j);
    spec.base.output_dir = dir.string();
    const auto cells = survival_sweep(spec);
    ASSERT_EQ(cells.size(), 6u);
    for (const auto& cell : cells) EXPECT_TRUE(cell.ok) << cell.label << " " << cell.error;
    EXPECT_EQ(cells[0].survival.classification, SurvivalClass::SurvivalConsistent);
    EXPECT_EQ(cells[1].survival.classification, SurvivalClass::SurvivalConsistent);
    EXPECT_EQ(cells[2].survival.classification, SurvivalClass::SurvivalConsistent);
    EXPECT_EQ(cells[3].survival.classification, SurvivalClass::SurvivalConsistent);
    EXPECT_EQ(cells[5].label, "constant");
    EXPECT_EQ(cells[5].horizon, 40.0);
    EXPECT_EQ(cells[5].survival.classification, SurvivalClass::ExtinctionConsistent);
    EXPECT_TRUE(fs::exists(dir / "survival_matrix.csv"));
}

TEST(Sweep, FailingCellIsRecorded) {
    SweepSpec spec;
    spec.base = small_config(scratch("sweep-fail"));
    spec.strategies = {{"ok", Strategy::constant({0.3, 0.7})}, {"bad", Strategy::constant({0.2, 0.3, 0.5})}};
    spec.horizons = {1.0};
    const auto cells = survival_sweep(spec, {1, false});
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_TRUE(cells[0].ok);
    EXPECT_FALSE(cells[1].ok);
    EXPECT_FALSE(cells[1].error.empty());
}

TEST(EstimateMu, ParsesAndDefaults) {
    const auto r = parse_estimate_mu(nlohmann::json::parse(R"({"schema_version": 1,
        "model": {"type": "wright_fisher", "sigma": 0.5, "x0": 0.4}, "rho": 2.0})"));
    EXPECT_EQ(r.state, (std::vector<double>{0.4, 0.6}));
    EXPECT_NEAR(r.horizon, std::log(1000.0) / 2.0, 1e-15);
    EXPECT_EQ(r.inner_paths, 10000u);
}

TEST(EstimateMu, RejectsNonMarkovModel) {
    const auto j = nlohmann::json::parse(R"({"schema_version": 1,
        "model": {"type": "martingale_r", "n_assets": 2, "n_drivers": 1, "r0": [0.5, 0.5],
                  "volatility": {"type": "delayed_logistic", "sigma": 0.5, "lag": 1.0}}})");
    EXPECT_THROW(parse_estimate_mu(j), ConfigError);
}

TEST(EstimateMu, WrightFisherState) {
    EstimateMuRequest r = parse_estimate_mu(nlohmann::json::parse(R"({"schema_version": 1,
        "model": {"type": "wright_fisher", "sigma": 0.5, "x0": 0.5}, "state": [0.4],
        "rho": 1.0, "horizon": 6.0, "inner_paths": 2000, "inner_dt": 0.01})"));
    const MuEstimate e = run_estimate_mu(r);
    EXPECT_NEAR(e.values[0], 0.4, e.truncation_bias_bound + 3.0 * e.mc_standard_error[0]);
    const auto doc = to_json(r, e);
    EXPECT_EQ(doc.at("mu").get<std::vector<double>>(), e.values);
}

TEST(EstimateMu, NoiselessModelHasZeroError) {
    EstimateMuRequest r = parse_estimate_mu(nlohmann::json::parse(R"({"schema_version": 1,
        "model": {"type": "linear_drift", "kappa": 1.0, "theta": 0.5, "sigma": 0.0, "r0": 0.9},
        "rho": 1.0, "horizon": 8.0, "inner_paths": 2, "inner_dt": 0.001})"));
    const MuEstimate e = run_estimate_mu(r);
    EXPECT_EQ(e.mc_standard_error[0], 0.0);
    EXPECT_NEAR(e.values[0], 0.7, 1e-4);
}

} // namespace
