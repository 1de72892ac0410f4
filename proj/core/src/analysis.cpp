#include "mfm/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "mfm/error.hpp"

namespace mfm {

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw StatisticalPowerError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    // avoids inf - inf when both neighbours are infinite
    if (values[hi] == values[lo] || frac == 0.0) return values[lo];
    return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

MeanAndError mean_and_error(std::span<const double> values) {
    MeanAndError out;
    if (values.empty()) return out;
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (double x : values) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    out.mean = mean;
    if (n > 1) {
        out.standard_error = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    return out;
}

SupermartingaleReport test_supermartingale(const std::vector<CheckpointSample>& samples,
                                           double initial_ratio, std::size_t excluded_paths,
                                           const SupermartingaleOptions& options) {
    SupermartingaleReport report;
    report.initial_ratio = initial_ratio;
    report.excluded_paths = excluded_paths;
    report.path_count = samples.empty() ? 0 : samples.front().ratios.size();
    for (const auto& s : samples) {
        if (s.ratios.size() != report.path_count) {
            throw ShapeError("test_supermartingale: checkpoints have different path counts");
        }
    }
    if (report.path_count < options.min_paths) {
        throw StatisticalPowerError("supermartingale test needs at least " +
                                    std::to_string(options.min_paths) + " paths, got " +
                                    std::to_string(report.path_count));
    }
    const double total = static_cast<double>(report.path_count + excluded_paths);
    report.excluded_fraction = static_cast<double>(excluded_paths) / total;

    report.passed = true;
    for (const auto& s : samples) {
        const MeanAndError stats = mean_and_error(s.ratios);
        SupermartingaleCheckpoint cp;
        cp.t = s.t;
        cp.mean = stats.mean;
        cp.standard_error = stats.standard_error;
        cp.running_max_p95 = s.running_max.empty() ? 0.0 : quantile(s.running_max, 0.95);
        const double bound = initial_ratio + options.se_multiplier * stats.standard_error +
                             options.rounding_tolerance * std::abs(initial_ratio);
        cp.pass = stats.mean <= bound;
        report.passed = report.passed && cp.pass;
        report.checkpoints.push_back(cp);
    }
    return report;
}

std::string to_string(SurvivalClass c) {
    switch (c) {
    case SurvivalClass::ExtinctionConsistent:
        return "extinction-consistent";
    case SurvivalClass::SurvivalConsistent:
        return "survival-consistent";
    case SurvivalClass::Inconclusive:
        return "inconclusive";
    }
    return "inconclusive";
}

SurvivalReport classify_survival(const std::vector<SurvivalSample>& samples, double horizon,
                                 const SurvivalThresholds& thresholds) {
    if (samples.empty()) throw StatisticalPowerError("survival classification needs at least one path");
    SurvivalReport r;
    r.horizon = horizon;
    r.path_count = samples.size();

    std::vector<double> g_half, g_end, growth, increment, ratio_half, ratio_end;
    for (const auto& s : samples) {
        if (s.g_end < s.g_half) {
            throw InvariantViolation("G decreased between T/2 and T");
        }
        g_half.push_back(s.g_half);
        g_end.push_back(s.g_end);
        increment.push_back(s.g_end - s.g_half);
        ratio_half.push_back(s.ratio_half);
        ratio_end.push_back(s.ratio_end);
        if (s.g_half > thresholds.g_abs_floor) {
            growth.push_back(s.g_end / s.g_half);
        } else {
            growth.push_back(s.g_end > thresholds.g_abs_floor ? HUGE_VAL : 1.0);
        }
    }
    r.g_half_p05 = quantile(g_half, 0.05);
    r.g_half_median = median(g_half);
    r.g_half_p95 = quantile(g_half, 0.95);
    r.g_end_p05 = quantile(g_end, 0.05);
    r.g_end_median = median(g_end);
    r.g_end_p95 = quantile(g_end, 0.95);
    r.median_growth_ratio = median(growth);
    r.median_g_increment = median(increment);
    r.median_ratio_half = median(ratio_half);
    r.median_ratio_end = median(ratio_end);
    r.p05_ratio_end = quantile(ratio_end, 0.05);

    const bool extinction = r.median_growth_ratio >= thresholds.growth_ratio_min &&
                            r.median_ratio_end < thresholds.extinction_decay * r.median_ratio_half;
    const bool survival =
        r.median_g_increment <= std::max(thresholds.plateau_fraction * r.g_half_median,
                                         thresholds.g_abs_floor) &&
        r.p05_ratio_end > 0.0;
    if (extinction) r.classification = SurvivalClass::ExtinctionConsistent;
    else if (survival) r.classification = SurvivalClass::SurvivalConsistent;
    return r;
}

SurvivalReport classify_survival(std::span<const PathSeries> G, std::span<const PathSeries> ratio,
                                 const SurvivalThresholds& thresholds) {
    if (G.size() != ratio.size()) throw ShapeError("classify_survival: path counts differ");
    if (G.empty()) throw StatisticalPowerError("survival classification needs at least one path");
    const TimeGrid& grid = G.front().grid();
    const std::size_t end = grid.n_steps;
    const std::size_t half = static_cast<std::size_t>(std::llround(static_cast<double>(end) / 2.0));
    std::vector<SurvivalSample> samples;
    samples.reserve(G.size());
    for (std::size_t p = 0; p < G.size(); ++p) {
        if (!(G[p].grid() == grid) || !(ratio[p].grid() == grid)) {
            throw ShapeError("classify_survival: paths are on different grids");
        }
        const auto g = G[p].channel(0);
        for (std::size_t k = 0; k + 1 < g.size(); ++k) {
            if (g[k + 1] < g[k]) throw InvariantViolation("G path " + std::to_string(p) + " decreases");
        }
        samples.push_back({g[half], g[end], ratio[p].at(0, half), ratio[p].at(0, end)});
    }
    return classify_survival(samples, grid.time(end) - grid.t_start, thresholds);
}

ItoConsistencyReport ito_consistency(std::span<const PathSeries> direct,
                                     std::span<const PathSeries> reconstructed) {
    if (direct.size() != reconstructed.size()) throw ShapeError("ito_consistency: path counts differ");
    ItoConsistencyReport r;
    r.paths = direct.size();
    for (std::size_t p = 0; p < direct.size(); ++p) {
        if (!(direct[p].grid() == reconstructed[p].grid())) {
            throw ShapeError("ito_consistency: paths are on different grids");
        }
        const auto a = direct[p].channel(0);
        const auto b = reconstructed[p].channel(0);
        for (std::size_t k = 0; k < a.size(); ++k) {
            r.max_log_error = std::max(r.max_log_error, std::abs(std::log(a[k]) - std::log(b[k])));
        }
    }
    return r;
}

RefinementReport refinement_study(std::vector<double> steps, std::vector<double> errors,
                                  double min_ratio) {
    if (steps.size() != errors.size() || steps.size() < 2) {
        throw ShapeError("refinement_study needs matching step and error lists of length >= 2");
    }
    RefinementReport r{std::move(steps), std::move(errors), {}, true};
    for (std::size_t i = 0; i + 1 < r.errors.size(); ++i) {
        const double ratio = r.errors[i] / r.errors[i + 1];
        r.ratios.push_back(ratio);
        r.passed = r.passed && ratio >= min_ratio;
    }
    return r;
}

SllnReport slln_diagnostic(std::span<const PathSeries> Z, std::span<const PathSeries> G,
                           std::span<const double> horizons, double g_floor) {
    if (Z.size() != G.size()) throw ShapeError("slln_diagnostic: path counts differ");
    if (Z.empty()) throw StatisticalPowerError("slln_diagnostic needs at least one path");
    SllnReport report;
    for (double horizon : horizons) {
        std::vector<double> terminal;
        std::vector<double> running;
        for (std::size_t p = 0; p < Z.size(); ++p) {
            const TimeGrid& grid = Z[p].grid();
            const auto idx = grid.index_of(grid.t_start + horizon);
            if (!idx) throw ShapeError("slln_diagnostic: horizon is not a grid point");
            const auto z = Z[p].channel(0);
            const auto g = G[p].channel(0);
            terminal.push_back(g[*idx] > g_floor ? std::abs(z[*idx]) / g[*idx] : 0.0);
            double worst = 0.0;
            for (std::size_t k = 0; k <= *idx; ++k) {
                worst = std::max(worst, std::abs(z[k]) / std::max(g[k], 1.0));
            }
            running.push_back(worst);
        }
        report.rows.push_back({horizon, median(terminal), median(running)});
    }
    bool non_increasing = true;
    for (std::size_t i = 0; i + 1 < report.rows.size(); ++i) {
        non_increasing = non_increasing &&
                         report.rows[i + 1].median_z_over_g <= report.rows[i].median_z_over_g;
    }
    const bool all_zero = std::all_of(report.rows.begin(), report.rows.end(),
                                      [](const SllnRow& r) { return r.median_z_over_g == 0.0; });
    report.vanishing = !report.rows.empty() && non_increasing &&
                       (all_zero || report.rows.back().median_z_over_g < report.rows.front().median_z_over_g);
    return report;
}

} // namespace mfm
