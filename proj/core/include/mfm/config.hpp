#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfm/analysis.hpp"
#include "mfm/dividends.hpp"
#include "mfm/market.hpp"
#include "mfm/strategy.hpp"

namespace mfm {

inline constexpr int kConfigSchemaVersion = 1;

struct GridSpec {
    double t_start = 0.0;
    double t_end = 5.0;
    double dt = 1e-3;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct AnalysisSettings {
    SupermartingaleOptions supermartingale;
    SurvivalThresholds survival;
    /// Runs fail (exit 3) when more paths than this fraction are excluded.
    double max_excluded_fraction = 1e-3;

    friend bool operator==(const AnalysisSettings&, const AnalysisSettings&) = default;
};

/// One reproducible Monte Carlo experiment. Parsed from JSON with
/// "schema_version": 1; unknown keys are rejected.
struct ExperimentConfig {
    DividendModelSpec model = WrightFisherSpec{};
    MarketParams market;
    GridSpec grid;
    Strategy strategy;
    std::size_t n_paths = 1000;
    std::uint64_t master_seed = 1;
    /// Empty means the grid points nearest T/4, T/2 and T.
    std::vector<double> checkpoints;
    std::string output_dir = "mfm-out";
    AnalysisSettings analysis;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Checkpoints after defaulting, each snapped to a grid index.
std::vector<std::size_t> checkpoint_indices(const ExperimentConfig& config, const TimeGrid& grid);

/// Throws ConfigError with the dotted field path of the first problem.
void validate(const ExperimentConfig& config);

DividendModelSpec parse_model(const nlohmann::json& j, const std::string& path = "model");
nlohmann::json model_to_json(const DividendModelSpec& model);
Strategy parse_strategy(const nlohmann::json& j, const std::string& path = "strategy");
nlohmann::json strategy_to_json(const Strategy& strategy);

ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& file);
nlohmann::json load_json(const std::filesystem::path& file);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// Environment overrides, applied after the file and before CLI flags:
///   MFM_SEED -> master_seed      MFM_PATHS -> n_paths
///   MFM_OUT  -> output_dir       MFM_DT    -> grid.dt
///   MFM_T_END -> grid.t_end      MFM_RHO   -> market.rho
void apply_env_overrides(ExperimentConfig& config, const EnvLookup& lookup = process_env);

/// SHA-256 (hex) of the canonical JSON serialization.
std::string config_hash(const ExperimentConfig& config);
std::string sha256_hex(const std::string& bytes);

/// Parses a non-negative integer; ConfigError naming `field` on failure.
std::uint64_t parse_u64(const std::string& text, const std::string& field);
double parse_double(const std::string& text, const std::string& field);

} // namespace mfm
