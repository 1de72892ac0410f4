#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfm/analysis.hpp"
#include "mfm/config.hpp"
#include "mfm/strategy.hpp"

namespace mfm {

std::string tool_version();

/// Shortest-exact-enough decimal form: 17 significant digits.
std::string format_double(double x);

struct RunOptions {
    /// Affects speed only.
    unsigned threads = 1;
    /// When false nothing is written to disk.
    bool write_files = true;
};

/// Per-path values read off the simulated series.
struct PathSummary {
    bool excluded = false;
    std::vector<double> ratio_at;        // per checkpoint
    std::vector<double> running_max_at;  // per checkpoint
    std::vector<double> g_at;            // per checkpoint
    double ratio_half = 0.0;
    double ratio_end = 0.0;
    double g_half = 0.0;
    double g_end = 0.0;
    double z_end = 0.0;
    double running_max_end = 0.0;
};

struct CheckpointStats {
    double t = 0.0;
    double mean_ratio = 0.0;
    double se_ratio = 0.0;
    double median_ratio = 0.0;
    double p05_ratio = 0.0;
    double mean_G = 0.0;
    double median_G = 0.0;
};

struct ExperimentManifest {
    std::string config_hash;
    std::string tool_version;
    std::uint64_t master_seed = 0;
    std::string timestamp_utc;
    double excluded_fraction = 0.0;
    double wall_clock_seconds = 0.0;
    unsigned threads = 1;
    std::vector<std::string> files;
};

struct RunResult {
    std::vector<PathSummary> paths;
    std::vector<CheckpointStats> checkpoints;
    std::optional<SupermartingaleReport> supermartingale;
    SurvivalReport survival;
    ExperimentManifest manifest;
    std::size_t excluded_paths = 0;
    /// Excluded fraction exceeded analysis.max_excluded_fraction.
    bool exclusion_limit_exceeded = false;
};

/// Simulates config.n_paths paths (path i uses RngSpec{master_seed, i}),
/// aggregates by path index and, if requested, writes into output_dir:
///   paths_summary.csv, checkpoint_stats.csv, supermartingale.json,
///   survival.json, manifest.json.
/// Result files are a pure function of the config. Throws ConfigError on
/// invalid configs and AssumptionViolation when a simulated path breaks a
/// model non-degeneracy condition.
RunResult run(const ExperimentConfig& config, const RunOptions& options = {});

nlohmann::json to_json(const SupermartingaleReport& report);
nlohmann::json to_json(const SurvivalReport& report);
nlohmann::json to_json(const ExperimentManifest& manifest);

// ---------------------------------------------------------------------------

struct SweepEntry {
    std::string label;
    Strategy strategy;
};

/// Sweep file: {"schema_version": 1, "base": <experiment config>,
///              "strategies": [{"label": ..., "strategy": {...}}], "horizons": [...]}
struct SweepSpec {
    ExperimentConfig base;
    std::vector<SweepEntry> strategies;
    std::vector<double> horizons;
};

SweepSpec parse_sweep(const nlohmann::json& j);

struct SweepCell {
    std::string label;
    double horizon = 0.0;
    bool ok = false;
    std::string error;
    SurvivalReport survival;
};

/// One independent run per (strategy, horizon) with grid.t_end = t_start +
/// horizon and checkpoints {T/2, T}. A failing cell is recorded and the
/// sweep continues. Writes survival_matrix.csv when write_files is set.
std::vector<SweepCell> survival_sweep(const SweepSpec& sweep, const RunOptions& options = {});

std::string survival_matrix_csv(const std::vector<SweepCell>& cells);

// ---------------------------------------------------------------------------

/// {"schema_version": 1, "model": {...}, "state": [...], "t": 0, "rho": 1,
///  "horizon": T, "inner_paths": M, "inner_dt": dt, "master_seed": s}
/// "state" defaults to the model's initial state and "horizon" to
/// t + ln(1000)/rho (truncation bias <= 1e-3).
struct EstimateMuRequest {
    DividendModelSpec model = WrightFisherSpec{};
    std::vector<double> state;
    double t = 0.0;
    double rho = 1.0;
    double horizon = 0.0;
    std::size_t inner_paths = 10000;
    double inner_dt = 1e-3;
    std::uint64_t master_seed = 1;
};

EstimateMuRequest parse_estimate_mu(const nlohmann::json& j);
MuEstimate run_estimate_mu(const EstimateMuRequest& request);
nlohmann::json to_json(const EstimateMuRequest& request, const MuEstimate& estimate);

} // namespace mfm
