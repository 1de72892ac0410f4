#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mfm/paths.hpp"

namespace mfm {

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);

struct MeanAndError {
    double mean = 0.0;
    double standard_error = 0.0;
};
MeanAndError mean_and_error(std::span<const double> values);

// ---------------------------------------------------------------------------
// Supermartingale test

struct CheckpointSample {
    double t = 0.0;
    /// W_t / V_t per included path.
    std::vector<double> ratios;
    /// max_{s <= t} W_s / V_s per included path; may be empty.
    std::vector<double> running_max;
};

struct SupermartingaleOptions {
    double se_multiplier = 3.0;
    std::size_t min_paths = 100;
    /// Relative allowance for floating-point drift when every ratio equals
    /// ratio_0 up to rounding (lambda = mu gives SE ~ 0).
    double rounding_tolerance = 1e-10;

    friend bool operator==(const SupermartingaleOptions&, const SupermartingaleOptions&) = default;
};

struct SupermartingaleCheckpoint {
    double t = 0.0;
    double mean = 0.0;
    double standard_error = 0.0;
    double running_max_p95 = 0.0;
    bool pass = false;
};

struct SupermartingaleReport {
    double initial_ratio = 1.0;
    std::size_t path_count = 0;
    std::size_t excluded_paths = 0;
    double excluded_fraction = 0.0;
    std::vector<SupermartingaleCheckpoint> checkpoints;
    bool passed = false;
};

/// Pass at a checkpoint iff mean <= ratio_0 + k SE (+ rounding allowance).
/// Throws StatisticalPowerError below min_paths.
SupermartingaleReport test_supermartingale(const std::vector<CheckpointSample>& samples,
                                           double initial_ratio, std::size_t excluded_paths = 0,
                                           const SupermartingaleOptions& options = {});

// ---------------------------------------------------------------------------
// Survival classification

enum class SurvivalClass { ExtinctionConsistent, SurvivalConsistent, Inconclusive };

std::string to_string(SurvivalClass c);

/// Finite-horizon proxies for G_inf = inf / G_inf < inf. Defaults were
/// pinned with pilot runs of the two-asset Wright-Fisher model.
struct SurvivalThresholds {
    /// Extinction needs median G_T / G_{T/2} >= this.
    double growth_ratio_min = 1.5;
    /// ... and median W_T/V_T < this * median W_{T/2}/V_{T/2}. Constant
    /// (0.3, 0.7) at sigma = 0.5 decays by about 0.65 between T = 20 and 40.
    double extinction_decay = 0.8;
    /// Survival needs median (G_T - G_{T/2}) <= this * median G_{T/2} ...
    double plateau_fraction = 0.05;
    /// ... or below this absolute level (G identically zero up to rounding).
    double g_abs_floor = 1e-12;

    friend bool operator==(const SurvivalThresholds&, const SurvivalThresholds&) = default;
};

struct SurvivalSample {
    double g_half = 0.0;
    double g_end = 0.0;
    double ratio_half = 0.0;
    double ratio_end = 0.0;
};

struct SurvivalReport {
    double horizon = 0.0;
    std::size_t path_count = 0;
    double g_half_p05 = 0.0, g_half_median = 0.0, g_half_p95 = 0.0;
    double g_end_p05 = 0.0, g_end_median = 0.0, g_end_p95 = 0.0;
    double median_growth_ratio = 0.0;
    double median_g_increment = 0.0;
    double median_ratio_half = 0.0;
    double median_ratio_end = 0.0;
    double p05_ratio_end = 0.0;
    SurvivalClass classification = SurvivalClass::Inconclusive;
};

/// Throws InvariantViolation if any g_end < g_half.
SurvivalReport classify_survival(const std::vector<SurvivalSample>& samples, double horizon,
                                 const SurvivalThresholds& thresholds = {});

/// Series form: reads G and W/V at T/2 (nearest grid point) and T. Throws
/// InvariantViolation if any G path decreases.
SurvivalReport classify_survival(std::span<const PathSeries> G, std::span<const PathSeries> ratio,
                                 const SurvivalThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Numerical consistency

struct ItoConsistencyReport {
    /// max over paths and t of |ln(direct) - ln(reconstructed)|.
    double max_log_error = 0.0;
    std::size_t paths = 0;
};

ItoConsistencyReport ito_consistency(std::span<const PathSeries> direct,
                                     std::span<const PathSeries> reconstructed);

struct RefinementReport {
    std::vector<double> steps;
    std::vector<double> errors;
    /// errors[i] / errors[i + 1] for successive halvings.
    std::vector<double> ratios;
    bool passed = false;
};

/// Errors measured at successively halved steps; passes when every ratio
/// is >= min_ratio.
RefinementReport refinement_study(std::vector<double> steps, std::vector<double> errors,
                                  double min_ratio = 1.3);

struct SllnRow {
    double horizon = 0.0;
    /// median over paths of |Z_T| / G_T, with 0 where G_T is below g_floor.
    double median_z_over_g = 0.0;
    /// median over paths of max_{t <= T} |Z_t| / max(G_t, 1).
    double median_max_z_over_g1 = 0.0;
};

struct SllnReport {
    std::vector<SllnRow> rows;
    /// median_z_over_g is non-increasing in T and ends below where it
    /// started (or is zero throughout).
    bool vanishing = false;
};

/// One (Z, G) pair of series per path; the rows are read at each horizon.
SllnReport slln_diagnostic(std::span<const PathSeries> Z, std::span<const PathSeries> G,
                           std::span<const double> horizons, double g_floor = 1e-12);

} // namespace mfm
