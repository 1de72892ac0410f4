#include "mfm/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "mfm/error.hpp"
#include "mfm/market.hpp"
#include "mfm/parallel.hpp"

#ifndef MFM_VERSION
#define MFM_VERSION "0.0.0"
#endif

namespace mfm {

namespace {

using nlohmann::json;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const std::filesystem::path& file, const std::string& content) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + file.string() + "'");
    out << content;
    if (!out) throw Error("write failed for '" + file.string() + "'");
}

// json doubles are dumped in shortest round-trip form; NaN/inf become null
bool is_count(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

PathSummary summarize(const RatioDiagnostics& d, const std::vector<std::size_t>& checkpoints,
                      std::size_t half, std::size_t end) {
    PathSummary s;
    s.excluded = d.excluded;
    const auto ratio = d.ratio.channel(0);
    const auto g = d.G.channel(0);
    std::vector<double> running(ratio.size());
    double peak = 0.0;
    for (std::size_t k = 0; k < ratio.size(); ++k) {
        peak = std::max(peak, ratio[k]);
        running[k] = peak;
    }
    for (std::size_t idx : checkpoints) {
        s.ratio_at.push_back(ratio[idx]);
        s.running_max_at.push_back(running[idx]);
        s.g_at.push_back(g[idx]);
    }
    s.ratio_half = ratio[half];
    s.ratio_end = ratio[end];
    s.g_half = g[half];
    s.g_end = g[end];
    s.z_end = d.Z.at(0, end);
    s.running_max_end = running[end];
    return s;
}

std::string paths_csv(const std::vector<PathSummary>& paths) {
    std::string out = "path,excluded,ratio_half,ratio_end,running_max_ratio,G_half,G_end,Z_end\n";
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const auto& p = paths[i];
        out += std::to_string(i) + ',' + (p.excluded ? "1" : "0") + ',' + format_double(p.ratio_half) +
               ',' + format_double(p.ratio_end) + ',' + format_double(p.running_max_end) + ',' +
               format_double(p.g_half) + ',' + format_double(p.g_end) + ',' + format_double(p.z_end) +
               '\n';
    }
    return out;
}

std::string checkpoint_csv(const std::vector<CheckpointStats>& stats) {
    std::string out = "t,mean_ratio,se_ratio,median_ratio,p05_ratio,mean_G,median_G\n";
    for (const auto& s : stats) {
        out += format_double(s.t) + ',' + format_double(s.mean_ratio) + ',' + format_double(s.se_ratio) +
               ',' + format_double(s.median_ratio) + ',' + format_double(s.p05_ratio) + ',' +
               format_double(s.mean_G) + ',' + format_double(s.median_G) + '\n';
    }
    return out;
}

} // namespace

std::string tool_version() { return MFM_VERSION; }

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    if (ec != std::errc()) throw Error("format_double failed");
    return std::string(buf, ptr);
}

json to_json(const SupermartingaleReport& r) {
    json cps = json::array();
    for (const auto& c : r.checkpoints) {
        cps.push_back({{"t", c.t},
                       {"mean", number_or_null(c.mean)},
                       {"standard_error", number_or_null(c.standard_error)},
                       {"running_max_p95", number_or_null(c.running_max_p95)},
                       {"pass", c.pass}});
    }
    return json{{"initial_ratio", r.initial_ratio},
                {"path_count", r.path_count},
                {"excluded_paths", r.excluded_paths},
                {"excluded_fraction", r.excluded_fraction},
                {"checkpoints", cps},
                {"passed", r.passed}};
}

json to_json(const SurvivalReport& r) {
    return json{{"horizon", r.horizon},
                {"path_count", r.path_count},
                {"G_half", {{"p05", r.g_half_p05}, {"median", r.g_half_median}, {"p95", r.g_half_p95}}},
                {"G_end", {{"p05", r.g_end_p05}, {"median", r.g_end_median}, {"p95", r.g_end_p95}}},
                {"median_growth_ratio", number_or_null(r.median_growth_ratio)},
                {"median_G_increment", r.median_g_increment},
                {"median_ratio_half", r.median_ratio_half},
                {"median_ratio_end", r.median_ratio_end},
                {"p05_ratio_end", r.p05_ratio_end},
                {"classification", to_string(r.classification)}};
}

json to_json(const ExperimentManifest& m) {
    return json{{"config_hash", m.config_hash},
                {"tool_version", m.tool_version},
                {"master_seed", m.master_seed},
                {"timestamp_utc", m.timestamp_utc},
                {"excluded_fraction", m.excluded_fraction},
                {"wall_clock_seconds", m.wall_clock_seconds},
                {"threads", m.threads},
                {"files", m.files}};
}

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    validate(config);
    const TimeGrid grid = make_grid(config.grid.t_start, config.grid.t_end, config.grid.dt);
    const std::vector<std::size_t> checkpoints = checkpoint_indices(config, grid);
    const std::size_t end = grid.n_steps;
    const std::size_t half = static_cast<std::size_t>(std::llround(static_cast<double>(end) / 2.0));
    const std::size_t dims = driver_dims(config.model);

    RunResult result;
    result.paths.resize(config.n_paths);
    std::vector<double> initial_ratios(config.n_paths, 1.0);
    parallel_for(config.n_paths, options.threads, [&](std::size_t i) {
        const RngSpec rng{config.master_seed, i, 0};
        const BrownianPath driver = sample_brownian(grid, dims, rng);
        const RatioDiagnostics d =
            simulate_market_path(config.model, config.strategy, config.market, driver, rng);
        const AssumptionReport check = check_assumptions(d.dividends);
        if (!check.passed()) {
            throw AssumptionViolation("path " + std::to_string(i) +
                                      (check.total_intensity_positive
                                           ? ": an asset never pays dividends on this path"
                                           : ": total dividend intensity is not positive"));
        }
        result.paths[i] = summarize(d, checkpoints, half, end);
        initial_ratios[i] = d.initial_ratio;
    });

    std::vector<const PathSummary*> kept;
    for (const auto& p : result.paths) {
        if (p.excluded) ++result.excluded_paths;
        else kept.push_back(&p);
    }
    const double excluded_fraction =
        static_cast<double>(result.excluded_paths) / static_cast<double>(config.n_paths);
    result.exclusion_limit_exceeded = excluded_fraction > config.analysis.max_excluded_fraction;
    if (kept.empty()) throw AssumptionViolation("every simulated path was excluded");
    const double ratio0 = initial_ratios.front();

    std::vector<CheckpointSample> samples;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        CheckpointSample sample;
        sample.t = grid.time(checkpoints[c]);
        std::vector<double> g;
        for (const auto* p : kept) {
            sample.ratios.push_back(p->ratio_at[c]);
            sample.running_max.push_back(p->running_max_at[c]);
            g.push_back(p->g_at[c]);
        }
        const MeanAndError ratio_stats = mean_and_error(sample.ratios);
        const MeanAndError g_stats = mean_and_error(g);
        result.checkpoints.push_back({sample.t, ratio_stats.mean, ratio_stats.standard_error,
                                      median(sample.ratios), quantile(sample.ratios, 0.05), g_stats.mean,
                                      median(g)});
        samples.push_back(std::move(sample));
    }
    if (kept.size() >= config.analysis.supermartingale.min_paths) {
        result.supermartingale = test_supermartingale(samples, ratio0, result.excluded_paths,
                                                      config.analysis.supermartingale);
    }
    std::vector<SurvivalSample> survival;
    for (const auto* p : kept) survival.push_back({p->g_half, p->g_end, p->ratio_half, p->ratio_end});
    result.survival = classify_survival(survival, grid.time(end) - grid.t_start, config.analysis.survival);

    auto& m = result.manifest;
    m.config_hash = config_hash(config);
    m.tool_version = tool_version();
    m.master_seed = config.master_seed;
    m.timestamp_utc = utc_timestamp();
    m.excluded_fraction = excluded_fraction;
    m.threads = options.threads;

    if (options.write_files) {
        const std::filesystem::path dir(config.output_dir);
        std::filesystem::create_directories(dir);
        write_text(dir / "paths_summary.csv", paths_csv(result.paths));
        write_text(dir / "checkpoint_stats.csv", checkpoint_csv(result.checkpoints));
        json sm = result.supermartingale
                      ? to_json(*result.supermartingale)
                      : json{{"status", "insufficient_paths"},
                             {"path_count", kept.size()},
                             {"min_paths", config.analysis.supermartingale.min_paths}};
        write_text(dir / "supermartingale.json", sm.dump(2) + "\n");
        write_text(dir / "survival.json", to_json(result.survival).dump(2) + "\n");
        write_text(dir / "config.json", to_json(config).dump(2) + "\n");
        m.files = {"paths_summary.csv", "checkpoint_stats.csv", "supermartingale.json", "survival.json",
                   "config.json", "manifest.json"};
        m.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        write_text(dir / "manifest.json", to_json(m).dump(2) + "\n");
    } else {
        m.wall_clock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    return result;
}

SweepSpec parse_sweep(const json& j) {
    if (!j.is_object()) throw ConfigError("expected an object", "<root>");
    for (const auto& item : j.items()) {
        if (item.key() != "schema_version" && item.key() != "base" && item.key() != "strategies" &&
            item.key() != "horizons") {
            throw ConfigError("unknown field", item.key());
        }
    }
    if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer() ||
        j.at("schema_version").get<int>() != kConfigSchemaVersion) {
        throw ConfigError("unsupported schema version", "schema_version");
    }
    if (!j.contains("base")) throw ConfigError("missing required field", "base");
    SweepSpec s;
    try {
        s.base = parse_config(j.at("base"));
    } catch (const ConfigError& e) {
        throw ConfigError(e.what(), "base");
    }
    if (!j.contains("strategies") || !j.at("strategies").is_array() || j.at("strategies").empty()) {
        throw ConfigError("expected a non-empty array", "strategies");
    }
    std::size_t i = 0;
    for (const auto& entry : j.at("strategies")) {
        const std::string path = "strategies[" + std::to_string(i++) + "]";
        if (!entry.is_object() || !entry.contains("label") || !entry.at("label").is_string() ||
            !entry.contains("strategy")) {
            throw ConfigError("expected {\"label\": ..., \"strategy\": {...}}", path);
        }
        if (entry.size() != 2) throw ConfigError("unknown field", path);
        s.strategies.push_back({entry.at("label").get<std::string>(),
                                parse_strategy(entry.at("strategy"), path + ".strategy")});
    }
    if (!j.contains("horizons") || !j.at("horizons").is_array() || j.at("horizons").empty()) {
        throw ConfigError("expected a non-empty array", "horizons");
    }
    for (const auto& h : j.at("horizons")) {
        if (!h.is_number() || !(h.get<double>() > 0.0)) {
            throw ConfigError("horizons must be positive numbers", "horizons");
        }
        s.horizons.push_back(h.get<double>());
    }
    return s;
}

std::vector<SweepCell> survival_sweep(const SweepSpec& sweep, const RunOptions& options) {
    std::vector<SweepCell> cells;
    RunOptions inner = options;
    inner.write_files = false;
    for (const auto& entry : sweep.strategies) {
        for (double horizon : sweep.horizons) {
            SweepCell cell{entry.label, horizon, false, {}, {}};
            try {
                ExperimentConfig c = sweep.base;
                c.strategy = entry.strategy;
                c.grid.t_end = c.grid.t_start + horizon;
                c.checkpoints = {c.grid.t_start + horizon / 2.0, c.grid.t_end};
                const RunResult r = run(c, inner);
                cell.survival = r.survival;
                cell.ok = !r.exclusion_limit_exceeded;
                if (!cell.ok) cell.error = "excluded-path fraction above limit";
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    if (options.write_files) {
        const std::filesystem::path dir(sweep.base.output_dir);
        std::filesystem::create_directories(dir);
        write_text(dir / "survival_matrix.csv", survival_matrix_csv(cells));
    }
    return cells;
}

std::string survival_matrix_csv(const std::vector<SweepCell>& cells) {
    std::string out =
        "strategy,horizon,status,classification,median_growth_ratio,median_G_increment,median_G_half,"
        "median_ratio_half,median_ratio_end,p05_ratio_end,error\n";
    for (const auto& c : cells) {
        std::string error = c.error;
        std::replace(error.begin(), error.end(), ',', ';');
        std::replace(error.begin(), error.end(), '\n', ' ');
        const auto& s = c.survival;
        out += c.label + ',' + format_double(c.horizon) + ',' + (c.ok ? "ok" : "failed") + ',' +
               (c.ok ? to_string(s.classification) : std::string()) + ',' +
               format_double(s.median_growth_ratio) + ',' + format_double(s.median_g_increment) + ',' +
               format_double(s.g_half_median) + ',' + format_double(s.median_ratio_half) + ',' +
               format_double(s.median_ratio_end) + ',' + format_double(s.p05_ratio_end) + ',' + error +
               '\n';
    }
    return out;
}

EstimateMuRequest parse_estimate_mu(const json& j) {
    if (!j.is_object()) throw ConfigError("expected an object", "<root>");
    static const std::vector<std::string> known{"schema_version", "model", "state", "t", "rho",
                                                "horizon", "inner_paths", "inner_dt", "master_seed"};
    for (const auto& item : j.items()) {
        if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
            throw ConfigError("unknown field", item.key());
        }
    }
    if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer() ||
        j.at("schema_version").get<int>() != kConfigSchemaVersion) {
        throw ConfigError("unsupported schema version", "schema_version");
    }
    auto number = [&](const char* key, double fallback) {
        if (!j.contains(key)) return fallback;
        if (!j.at(key).is_number()) throw ConfigError("expected a number", key);
        return j.at(key).get<double>();
    };
    auto count = [&](const char* key, std::uint64_t fallback) {
        if (!j.contains(key)) return fallback;
        if (!is_count(j.at(key))) throw ConfigError("expected a non-negative integer", key);
        return j.at(key).get<std::uint64_t>();
    };
    EstimateMuRequest r;
    if (!j.contains("model")) throw ConfigError("missing required field", "model");
    r.model = parse_model(j.at("model"));
    validate(r.model);
    if (!is_markov(r.model)) {
        throw ConfigError("nested Monte Carlo needs a model that is Markovian in R", "model");
    }
    if (j.contains("state")) {
        if (!j.at("state").is_array()) throw ConfigError("expected an array of numbers", "state");
        for (const auto& x : j.at("state")) {
            if (!x.is_number()) throw ConfigError("expected an array of numbers", "state");
            r.state.push_back(x.get<double>());
        }
        if (r.state.size() == 1 && asset_count(r.model) == 2) r.state.push_back(1.0 - r.state[0]);
        if (r.state.size() != asset_count(r.model)) {
            throw ConfigError("must have one entry per asset", "state");
        }
        try {
            r.state = validate_simplex(r.state);
        } catch (const InvalidStrategy& e) {
            throw ConfigError(e.what(), "state");
        }
    } else {
        r.state = initial_state(r.model);
    }
    r.t = number("t", 0.0);
    r.rho = number("rho", 1.0);
    if (!(r.rho > 0.0)) throw ConfigError("must be positive", "rho");
    r.horizon = number("horizon", r.t + std::log(1000.0) / r.rho);
    if (!(r.horizon > r.t)) throw ConfigError("must exceed t", "horizon");
    r.inner_paths = count("inner_paths", r.inner_paths);
    if (r.inner_paths < 2) throw ConfigError("need at least two inner paths", "inner_paths");
    r.inner_dt = number("inner_dt", r.inner_dt);
    if (!(r.inner_dt > 0.0)) throw ConfigError("must be positive", "inner_dt");
    r.master_seed = count("master_seed", r.master_seed);
    return r;
}

MuEstimate run_estimate_mu(const EstimateMuRequest& request) {
    return estimate_mu_nested_mc(request.model, request.state, request.t, request.rho, request.horizon,
                                 request.inner_paths, request.inner_dt,
                                 RngSpec{request.master_seed, 0, 0});
}

json to_json(const EstimateMuRequest& request, const MuEstimate& estimate) {
    return json{{"model", model_to_json(request.model)},
                {"state", request.state},
                {"t", request.t},
                {"rho", request.rho},
                {"horizon", request.horizon},
                {"inner_paths", request.inner_paths},
                {"inner_dt", request.inner_dt},
                {"master_seed", request.master_seed},
                {"mu", estimate.values},
                {"truncation_bias_bound", estimate.truncation_bias_bound},
                {"mc_standard_error", estimate.mc_standard_error},
                {"closed_form", optimal_mu(request.model, request.state, request.rho)}};
}

} // namespace mfm
