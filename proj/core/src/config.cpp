#include "mfm/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "mfm/error.hpp"

namespace mfm {

namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

// Typed field access on one JSON object; remembers which keys were read so
// leftovers can be rejected.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw ConfigError("missing required field", field(key));
        return j_.at(key);
    }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError("expected a number", field(key));
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError("must be finite", field(key));
        return x;
    }

    double number_or(const std::string& key, double fallback) {
        seen_.insert(key);
        return has(key) ? number(key) : fallback;
    }

    std::optional<double> optional_number(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) return std::nullopt;
        return number(key);
    }

    std::uint64_t count(const std::string& key) {
        const json& v = raw(key);
        if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))) {
            throw ConfigError("expected a non-negative integer", field(key));
        }
        return v.get<std::uint64_t>();
    }

    std::uint64_t count_or(const std::string& key, std::uint64_t fallback) {
        seen_.insert(key);
        return has(key) ? count(key) : fallback;
    }

    std::string text(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError("expected a string", field(key));
        return v.get<std::string>();
    }

    std::string text_or(const std::string& key, std::string fallback) {
        seen_.insert(key);
        return has(key) ? text(key) : fallback;
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError("expected an array of numbers", field(key));
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError("expected an array of numbers", field(key));
            out.push_back(x.get<double>());
        }
        return out;
    }

    void allow(const std::string& key) { seen_.insert(key); }

    std::string field(const std::string& key) const { return join(path_, key); }
    const std::string& path() const { return path_; }

    void reject_unknown() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) throw ConfigError("unknown field", field(item.key()));
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

VolatilitySpec parse_volatility(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    const std::string type = r.text("type");
    VolatilitySpec out;
    if (type == "constant") {
        const json& m = r.raw("matrix");
        if (!m.is_array()) throw ConfigError("expected an array of rows", r.field("matrix"));
        ConstantVolatility v;
        for (const auto& row : m) {
            if (!row.is_array()) throw ConfigError("expected an array of rows", r.field("matrix"));
            std::vector<double> values;
            for (const auto& x : row) {
                if (!x.is_number()) throw ConfigError("expected numbers", r.field("matrix"));
                values.push_back(x.get<double>());
            }
            v.matrix.push_back(std::move(values));
        }
        out = std::move(v);
    } else if (type == "logistic") {
        out = LogisticVolatility{r.number("sigma")};
    } else if (type == "simplex") {
        out = SimplexVolatility{r.number("sigma")};
    } else if (type == "delayed_logistic") {
        out = DelayedLogisticVolatility{r.number("sigma"), r.number("lag")};
    } else {
        throw ConfigError("unknown volatility type '" + type + "'", r.field("type"));
    }
    r.reject_unknown();
    return out;
}

json volatility_to_json(const VolatilitySpec& v) {
    return std::visit(overloaded{
                          [](const ConstantVolatility& c) {
                              return json{{"type", "constant"}, {"matrix", c.matrix}};
                          },
                          [](const LogisticVolatility& c) {
                              return json{{"type", "logistic"}, {"sigma", c.sigma}};
                          },
                          [](const SimplexVolatility& c) {
                              return json{{"type", "simplex"}, {"sigma", c.sigma}};
                          },
                          [](const DelayedLogisticVolatility& c) {
                              return json{{"type", "delayed_logistic"}, {"sigma", c.sigma}, {"lag", c.lag}};
                          },
                      },
                      v);
}

GridSpec parse_grid(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    GridSpec g;
    g.t_start = r.number_or("t_start", 0.0);
    g.t_end = r.number("t_end");
    g.dt = r.number("dt");
    r.reject_unknown();
    return g;
}

AnalysisSettings parse_analysis(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    AnalysisSettings a;
    a.supermartingale.se_multiplier = r.number_or("se_multiplier", a.supermartingale.se_multiplier);
    a.supermartingale.min_paths = r.count_or("min_paths", a.supermartingale.min_paths);
    a.supermartingale.rounding_tolerance =
        r.number_or("rounding_tolerance", a.supermartingale.rounding_tolerance);
    a.survival.growth_ratio_min = r.number_or("growth_ratio_min", a.survival.growth_ratio_min);
    a.survival.extinction_decay = r.number_or("extinction_decay", a.survival.extinction_decay);
    a.survival.plateau_fraction = r.number_or("plateau_fraction", a.survival.plateau_fraction);
    a.survival.g_abs_floor = r.number_or("g_abs_floor", a.survival.g_abs_floor);
    a.max_excluded_fraction = r.number_or("max_excluded_fraction", a.max_excluded_fraction);
    r.reject_unknown();
    return a;
}

json analysis_to_json(const AnalysisSettings& a) {
    return json{{"se_multiplier", a.supermartingale.se_multiplier},
                {"min_paths", a.supermartingale.min_paths},
                {"rounding_tolerance", a.supermartingale.rounding_tolerance},
                {"growth_ratio_min", a.survival.growth_ratio_min},
                {"extinction_decay", a.survival.extinction_decay},
                {"plateau_fraction", a.survival.plateau_fraction},
                {"g_abs_floor", a.survival.g_abs_floor},
                {"max_excluded_fraction", a.max_excluded_fraction}};
}

} // namespace

DividendModelSpec parse_model(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    const std::string type = r.text("type");
    DividendModelSpec out;
    if (type == "wright_fisher") {
        out = WrightFisherSpec{r.number("sigma"), r.number("x0")};
    } else if (type == "martingale_r") {
        MartingaleRSpec m;
        m.n_assets = r.count("n_assets");
        m.n_drivers = r.count("n_drivers");
        m.r0 = r.numbers("r0");
        m.volatility = parse_volatility(r.raw("volatility"), r.field("volatility"));
        out = std::move(m);
    } else if (type == "linear_drift") {
        out = LinearDriftSpec{r.number("kappa"), r.number("theta"), r.number("sigma"), r.number("r0")};
    } else {
        throw ConfigError("unknown model type '" + type + "'", r.field("type"));
    }
    r.reject_unknown();
    return out;
}

json model_to_json(const DividendModelSpec& model) {
    return std::visit(overloaded{
                          [](const WrightFisherSpec& s) {
                              return json{{"type", "wright_fisher"}, {"sigma", s.sigma}, {"x0", s.x0}};
                          },
                          [](const MartingaleRSpec& s) {
                              return json{{"type", "martingale_r"},
                                          {"n_assets", s.n_assets},
                                          {"n_drivers", s.n_drivers},
                                          {"r0", s.r0},
                                          {"volatility", volatility_to_json(s.volatility)}};
                          },
                          [](const LinearDriftSpec& s) {
                              return json{{"type", "linear_drift"},
                                          {"kappa", s.kappa},
                                          {"theta", s.theta},
                                          {"sigma", s.sigma},
                                          {"r0", s.r0}};
                          },
                      },
                      model);
}

Strategy parse_strategy(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    const std::string type = r.text("type");
    std::optional<Strategy> out;
    if (type == "constant") {
        const std::vector<double> weights = r.numbers("weights");
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw ConfigError("entries must be non-negative", path + ".weights");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("entries must sum to 1", path + ".weights");
        out = Strategy::constant(weights);
    } else if (type == "optimal") {
        out = Strategy::optimal();
    } else if (type == "optimal_nested_mc") {
        out = Strategy::nested_mc(r.number("lookahead"), r.count("inner_paths"),
                                  r.number_or("inner_dt", 1e-2));
    } else if (type == "perturbed") {
        Strategy base = parse_strategy(r.raw("base"), r.field("base"));
        std::vector<double> direction = r.numbers("direction");
        PerturbationWeight weight;
        {
            ObjectReader w(r.raw("weight"), r.field("weight"));
            weight.amplitude = w.number_or("amplitude", 1.0);
            weight.decay_rate = w.number_or("decay_rate", 0.0);
            w.reject_unknown();
        }
        try {
            out = perturbed_strategy(std::move(base), std::move(direction), weight);
        } catch (const ConfigError& e) {
            throw ConfigError(e.what(), r.path());
        }
    } else {
        throw ConfigError("unknown strategy type '" + type + "'", r.field("type"));
    }
    r.reject_unknown();
    return *out;
}

json strategy_to_json(const Strategy& strategy) {
    return std::visit(overloaded{
                          [](const ConstantStrategy& s) {
                              return json{{"type", "constant"}, {"weights", s.weights}};
                          },
                          [](const OptimalClosedForm&) { return json{{"type", "optimal"}}; },
                          [](const OptimalNestedMC& s) {
                              return json{{"type", "optimal_nested_mc"},
                                          {"lookahead", s.lookahead},
                                          {"inner_paths", s.inner_paths},
                                          {"inner_dt", s.inner_dt}};
                          },
                          [](const PerturbedStrategy& s) {
                              return json{{"type", "perturbed"},
                                          {"base", strategy_to_json(*s.base)},
                                          {"direction", s.direction},
                                          {"weight",
                                           {{"amplitude", s.weight.amplitude},
                                            {"decay_rate", s.weight.decay_rate}}}};
                          },
                      },
                      strategy.kind());
}

ExperimentConfig parse_config(const json& j) {
    ObjectReader r(j, "");
    const json& version = r.raw("schema_version");
    if (!version.is_number_integer() || version.get<int>() != kConfigSchemaVersion) {
        throw ConfigError("unsupported schema version (expected " +
                              std::to_string(kConfigSchemaVersion) + ")",
                          "schema_version");
    }
    ExperimentConfig c;
    c.model = parse_model(r.raw("model"), "model");
    {
        ObjectReader m(r.raw("market"), "market");
        c.market.rho = m.number("rho");
        c.market.w0 = m.optional_number("w0");
        m.reject_unknown();
    }
    c.market.n_assets = asset_count(c.model);
    c.grid = parse_grid(r.raw("grid"), "grid");
    c.strategy = parse_strategy(r.raw("strategy"), "strategy");
    c.n_paths = r.count("n_paths");
    c.master_seed = r.count("master_seed");
    r.allow("checkpoints");
    if (r.has("checkpoints")) c.checkpoints = r.numbers("checkpoints");
    c.output_dir = r.text_or("output_dir", c.output_dir);
    r.allow("analysis");
    if (r.has("analysis")) c.analysis = parse_analysis(r.raw("analysis"), "analysis");
    r.reject_unknown();
    validate(c);
    return c;
}

json to_json(const ExperimentConfig& c) {
    json market{{"rho", c.market.rho}};
    if (c.market.w0) market["w0"] = *c.market.w0;
    return json{{"schema_version", kConfigSchemaVersion},
                {"model", model_to_json(c.model)},
                {"market", market},
                {"grid", {{"t_start", c.grid.t_start}, {"t_end", c.grid.t_end}, {"dt", c.grid.dt}}},
                {"strategy", strategy_to_json(c.strategy)},
                {"n_paths", c.n_paths},
                {"master_seed", c.master_seed},
                {"checkpoints", c.checkpoints},
                {"output_dir", c.output_dir},
                {"analysis", analysis_to_json(c.analysis)}};
}

std::vector<std::size_t> checkpoint_indices(const ExperimentConfig& config, const TimeGrid& grid) {
    std::vector<std::size_t> out;
    if (config.checkpoints.empty()) {
        // defaults snap to the nearest grid point
        const auto n = static_cast<double>(grid.n_steps);
        return {static_cast<std::size_t>(std::llround(n / 4.0)), static_cast<std::size_t>(std::llround(n / 2.0)),
                grid.n_steps};
    }
    const std::vector<double>& times = config.checkpoints;
    for (double t : times) {
        const auto idx = grid.index_of(t);
        if (!idx) {
            throw ConfigError("checkpoint " + std::to_string(t) + " is not a grid point", "checkpoints");
        }
        out.push_back(*idx);
    }
    return out;
}

void validate(const ExperimentConfig& c) {
    validate(c.model);
    validate(c.market);
    if (c.market.n_assets != asset_count(c.model)) {
        throw ConfigError("asset count does not match the model", "market.n_assets");
    }
    const TimeGrid grid = make_grid(c.grid.t_start, c.grid.t_end, c.grid.dt);
    if (c.n_paths == 0) throw ConfigError("must be at least 1", "n_paths");
    checkpoint_indices(c, grid);

    // strategy width must match the model
    std::function<void(const Strategy&)> check = [&](const Strategy& s) {
        if (const auto* k = std::get_if<ConstantStrategy>(&s.kind())) {
            if (k->weights.size() != c.market.n_assets) {
                throw ConfigError("weights must have one entry per asset", "strategy.weights");
            }
        } else if (const auto* p = std::get_if<PerturbedStrategy>(&s.kind())) {
            if (p->direction.size() != c.market.n_assets) {
                throw ConfigError("direction must have one entry per asset", "strategy.direction");
            }
            check(*p->base);
        } else if (std::holds_alternative<OptimalNestedMC>(s.kind()) && !is_markov(c.model)) {
            throw ConfigError("nested Monte Carlo needs a Markovian model", "strategy.type");
        }
    };
    check(c.strategy);

    const auto& a = c.analysis;
    if (!(a.supermartingale.se_multiplier >= 0.0)) {
        throw ConfigError("must be >= 0", "analysis.se_multiplier");
    }
    if (!(a.max_excluded_fraction >= 0.0 && a.max_excluded_fraction <= 1.0)) {
        throw ConfigError("must lie in [0, 1]", "analysis.max_excluded_fraction");
    }
    if (!(a.survival.growth_ratio_min > 0.0)) throw ConfigError("must be positive", "analysis.growth_ratio_min");
    if (!(a.survival.extinction_decay > 0.0)) throw ConfigError("must be positive", "analysis.extinction_decay");
    if (!(a.survival.plateau_fraction >= 0.0)) throw ConfigError("must be >= 0", "analysis.plateau_fraction");
    if (!(a.survival.g_abs_floor >= 0.0)) throw ConfigError("must be >= 0", "analysis.g_abs_floor");
    if (c.output_dir.empty()) throw ConfigError("must not be empty", "output_dir");
}

json load_json(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open '" + file.string() + "'", "--config");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what(), file.string());
    }
}

ExperimentConfig load_config(const std::filesystem::path& file) { return parse_config(load_json(file)); }

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

std::uint64_t parse_u64(const std::string& text, const std::string& field) {
    std::uint64_t value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ConfigError("expected a non-negative integer, got '" + text + "'", field);
    }
    return value;
}

double parse_double(const std::string& text, const std::string& field) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty() || !std::isfinite(value)) {
        throw ConfigError("expected a number, got '" + text + "'", field);
    }
    return value;
}

void apply_env_overrides(ExperimentConfig& c, const EnvLookup& lookup) {
    if (auto v = lookup("MFM_SEED")) c.master_seed = parse_u64(*v, "MFM_SEED");
    if (auto v = lookup("MFM_PATHS")) c.n_paths = parse_u64(*v, "MFM_PATHS");
    if (auto v = lookup("MFM_OUT")) c.output_dir = *v;
    if (auto v = lookup("MFM_DT")) c.grid.dt = parse_double(*v, "MFM_DT");
    if (auto v = lookup("MFM_T_END")) c.grid.t_end = parse_double(*v, "MFM_T_END");
    if (auto v = lookup("MFM_RHO")) c.market.rho = parse_double(*v, "MFM_RHO");
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

std::string config_hash(const ExperimentConfig& config) {
    // nlohmann::json objects are key-sorted, so dump() is canonical
    return sha256_hex(to_json(config).dump());
}

} // namespace mfm
