#include <gtest/gtest.h>

#include <map>

#include "mfm/config.hpp"
#include "mfm/error.hpp"

namespace {

using namespace mfm;
using nlohmann::json;

json base_json() {
    return json::parse(R"({
        "schema_version": 1,
        "model": {"type": "wright_fisher", "sigma": 0.5, "x0": 0.5},
        "market": {"rho": 0.2},
        "grid": {"t_end": 5.0, "dt": 0.001},
        "strategy": {"type": "constant", "weights": [0.3, 0.7]},
        "n_paths": 100,
        "master_seed": 42
    })");
}

std::string field_of(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<no error>";
}

TEST(Config, ParsesMinimalConfig) {
    const ExperimentConfig c = parse_config(base_json());
    EXPECT_EQ(std::get<WrightFisherSpec>(c.model), (WrightFisherSpec{0.5, 0.5}));
    EXPECT_EQ(c.market.n_assets, 2u);
    EXPECT_EQ(c.n_paths, 100u);
    EXPECT_EQ(c.master_seed, 42u);
    EXPECT_EQ(c.strategy, Strategy::constant({0.3, 0.7}));
    EXPECT_EQ(c.output_dir, "mfm-out");
    EXPECT_TRUE(c.checkpoints.empty());
    const TimeGrid g = make_grid(0.0, 5.0, 0.001);
    EXPECT_EQ(checkpoint_indices(c, g), (std::vector<std::size_t>{1250, 2500, 5000}));
}

TEST(Config, RoundTripsEveryVariant) {
    std::vector<json> variants;
    variants.push_back(base_json());
    {
        json j = base_json();
        j["model"] = {{"type", "martingale_r"},
                      {"n_assets", 3},
                      {"n_drivers", 3},
                      {"r0", {0.2, 0.3, 0.5}},
                      {"volatility", {{"type", "simplex"}, {"sigma", 0.4}}}};
        j["strategy"] = {{"type", "perturbed"},
                         {"base", {{"type", "optimal"}}},
                         {"direction", {0.1, -0.05, -0.05}},
                         {"weight", {{"amplitude", 1.0}, {"decay_rate", 0.5}}}};
        j["checkpoints"] = {1.0, 5.0};
        j["market"]["w0"] = 2.0;
        j["analysis"] = {{"extinction_decay", 0.6}, {"min_paths", 50}};
        variants.push_back(j);
    }
    {
        json j = base_json();
        j["model"] = {{"type", "martingale_r"},
                      {"n_assets", 2},
                      {"n_drivers", 1},
                      {"r0", {0.5, 0.5}},
                      {"volatility", {{"type", "constant"}, {"matrix", {{0.1}, {-0.1}}}}}};
        variants.push_back(j);
        j["model"]["volatility"] = {{"type", "delayed_logistic"}, {"sigma", 0.5}, {"lag", 0.5}};
        variants.push_back(j);
        j["model"]["volatility"] = {{"type", "logistic"}, {"sigma", 0.5}};
        variants.push_back(j);
    }
    {
        json j = base_json();
        j["model"] = {{"type", "linear_drift"}, {"kappa", 1.0}, {"theta", 0.5}, {"sigma", 0.3}, {"r0", 0.9}};
        j["strategy"] = {{"type", "optimal_nested_mc"}, {"lookahead", 6.0}, {"inner_paths", 50}, {"inner_dt", 0.01}};
        variants.push_back(j);
    }
    for (const auto& j : variants) {
        const ExperimentConfig c = parse_config(j);
        EXPECT_EQ(parse_config(to_json(c)), c) << j.dump();
        EXPECT_EQ(parse_config(json::parse(to_json(c).dump())), c);
    }
}

TEST(Config, RejectsUnknownFields) {
    json j = base_json();
    j["n_path"] = 5;
    EXPECT_EQ(field_of(j), "n_path");
    j = base_json();
    j["model"]["sigmaa"] = 0.1;
    EXPECT_EQ(field_of(j), "model.sigmaa");
    j = base_json();
    j["grid"]["steps"] = 10;
    EXPECT_EQ(field_of(j), "grid.steps");
}

TEST(Config, FieldLevelValidation) {
    json j = base_json();
    j["grid"]["dt"] = 0.0;
    EXPECT_EQ(field_of(j), "grid.dt");
    j["grid"]["dt"] = -1e-3;
    EXPECT_EQ(field_of(j), "grid.dt");
    j = base_json();
    j["n_paths"] = 0;
    EXPECT_EQ(field_of(j), "n_paths");
    j = base_json();
    j["n_paths"] = -3;
    EXPECT_EQ(field_of(j), "n_paths");
    j = base_json();
    j["market"]["rho"] = 0.0;
    EXPECT_EQ(field_of(j), "market.rho");
    j = base_json();
    j["strategy"]["weights"] = {0.3, 0.3, 0.4};
    EXPECT_EQ(field_of(j), "strategy.weights");
    j = base_json();
    j["strategy"]["weights"] = {0.3, 0.8};
    EXPECT_EQ(field_of(j), "strategy.weights");
    j = base_json();
    j["checkpoints"] = {1.0005};
    EXPECT_EQ(field_of(j), "checkpoints");
    j = base_json();
    j["schema_version"] = 2;
    EXPECT_EQ(field_of(j), "schema_version");
    j = base_json();
    j.erase("model");
    EXPECT_EQ(field_of(j), "model");
    j = base_json();
    j["model"]["type"] = "heston";
    EXPECT_EQ(field_of(j), "model.type");
    j = base_json();
    j["model"]["x0"] = 1.0;
    EXPECT_EQ(field_of(j), "model.x0");
}

TEST(Config, NestedMcNeedsMarkovModel) {
    json j = base_json();
    j["model"] = {{"type", "martingale_r"},
                  {"n_assets", 2},
                  {"n_drivers", 1},
                  {"r0", {0.5, 0.5}},
                  {"volatility", {{"type", "delayed_logistic"}, {"sigma", 0.5}, {"lag", 1.0}}}};
    j["strategy"] = {{"type", "optimal_nested_mc"}, {"lookahead", 6.0}, {"inner_paths", 50}};
    EXPECT_EQ(field_of(j), "strategy.type");
}

TEST(Config, EnvironmentOverrides) {
    ExperimentConfig c = parse_config(base_json());
    const std::map<std::string, std::string> env{{"MFM_SEED", "7"},  {"MFM_PATHS", "250"}, {"MFM_OUT", "/tmp/x"},
                                                 {"MFM_DT", "0.002"}, {"MFM_T_END", "4"},   {"MFM_RHO", "0.5"}};
    apply_env_overrides(c, [&](const std::string& k) -> std::optional<std::string> {
        const auto it = env.find(k);
        if (it == env.end()) return std::nullopt;
        return it->second;
    });
    EXPECT_EQ(c.master_seed, 7u);
    EXPECT_EQ(c.n_paths, 250u);
    EXPECT_EQ(c.output_dir, "/tmp/x");
    EXPECT_EQ(c.grid.dt, 0.002);
    EXPECT_EQ(c.grid.t_end, 4.0);
    EXPECT_EQ(c.market.rho, 0.5);
}

TEST(Config, MalformedEnvironmentValue) {
    ExperimentConfig c = parse_config(base_json());
    try {
        apply_env_overrides(c, [](const std::string& k) -> std::optional<std::string> {
            if (k == "MFM_PATHS") return "many";
            return std::nullopt;
        });
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "MFM_PATHS");
    }
}

TEST(Config, HashTracksEveryField) {
    const ExperimentConfig base = parse_config(base_json());
    EXPECT_EQ(config_hash(base), config_hash(parse_config(base_json())));
    EXPECT_EQ(config_hash(base).size(), 64u);
    std::vector<ExperimentConfig> changed(9, base);
    changed[0].master_seed = 43;
    changed[1].n_paths = 101;
    changed[2].grid.dt = 0.002;
    changed[3].market.rho = 0.3;
    changed[4].strategy = Strategy::constant({0.4, 0.6});
    changed[5].model = WrightFisherSpec{0.5, 0.4};
    changed[6].checkpoints = {5.0};
    changed[7].analysis.survival.extinction_decay = 0.7;
    changed[8].output_dir = "elsewhere";
    for (const auto& c : changed) EXPECT_NE(config_hash(c), config_hash(base));
}

TEST(Config, Sha256KnownAnswer) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

} // namespace
