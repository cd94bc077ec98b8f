#pragma once

// RunConfig: the full parameter document of a simulation, its flat JSON
// mapping and the built-in presets.
//
// JSON keys (all top-level, flat):
//   preset       optional base preset; remaining keys override it
//   model        "news" | "trend" | "general"
//   units        "percent" (default) | "fraction"
//   T            horizon, integer >= 2
//   p0 v0 pe0    initial price, value, anticipated price (news model)
//   re0          initial anticipated return (trend/general models)
//   prob_i prob_j  news probabilities
//   common_news  bool, one indicator for both channels
//   eps nu m n   distributions, {"kind": "exponential", "mean": ...},
//                {"kind": "gaussian", "mean": ..., "std": ...},
//                {"kind": "uniform", "low": ..., "high": ...},
//                {"kind": "constant", "value": ...}
//   a            feedback coefficient, 0 <= a < 1
//   weights      {"scheme": "equal"|"exp_decay"|"explicit", "horizon": H,
//                 "lambda": ... (exp_decay), "values": [...] (explicit)}
//   seed         optional root seed
//   n_paths      ensemble size, >= 1
//
// Without a preset, the parameter keys the chosen model reads are required.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "volcluster/error.hpp"
#include "volcluster/market.hpp"
#include "volcluster/random.hpp"

namespace volcluster {

struct RunConfig {
    ModelKind model = ModelKind::general;
    Units units = Units::percent;
    std::size_t horizon = 10000;
    double p0 = 100.0;
    double v0 = 100.0;
    double pe0 = 100.0;
    double re0 = 0.0;
    NewsSpec news;
    ImpactDists impacts;
    double a = 0.99;
    TrendWeights weights;
    std::optional<std::uint64_t> seed;
    std::size_t n_paths = 1;

    bool operator==(const RunConfig&) const = default;

    [[nodiscard]] GeneralParams general_params() const { return {a, impacts, news}; }
};

inline void validate(const RunConfig& config) {
    if (config.horizon < 2) throw ConfigError("T: horizon must be >= 2");
    if (!(config.p0 > 0.0) || !std::isfinite(config.p0)) throw ConfigError("p0: initial price must be > 0");
    if (!std::isfinite(config.v0)) throw ConfigError("v0: must be finite");
    if (!std::isfinite(config.pe0)) throw ConfigError("pe0: must be finite");
    if (!std::isfinite(config.re0)) throw ConfigError("re0: must be finite");
    if (config.n_paths < 1) throw ConfigError("n_paths: must be >= 1");
    try {
        validate(config.general_params());
        (void)config.weights.realize();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// JSON mapping

namespace detail {

using nlohmann::json;

[[noreturn]] inline void key_error(const std::string& key, const std::string& what) {
    throw ConfigError(key + ": " + what);
}

inline double number_at(const json& obj, const std::string& key, const std::string& path) {
    const auto& v = obj.at(key);
    if (!v.is_number()) key_error(path, "expected a number");
    return v.get<double>();
}

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                           const std::string& prefix) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            key_error(prefix + key, "unknown key");
    }
}

inline void require(const json& obj, std::initializer_list<std::string_view> keys, const std::string& prefix) {
    for (auto key : keys)
        if (!obj.contains(key)) key_error(prefix + std::string(key), "missing required key");
}

}  // namespace detail

inline nlohmann::json dist_to_json(const DistSpec& dist) {
    return std::visit(
        [](const auto& d) -> nlohmann::json {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Exponential>) return {{"kind", "exponential"}, {"mean", d.mean}};
            else if constexpr (std::is_same_v<T, Gaussian>)
                return {{"kind", "gaussian"}, {"mean", d.mean}, {"std", d.std}};
            else if constexpr (std::is_same_v<T, Uniform>)
                return {{"kind", "uniform"}, {"low", d.low}, {"high", d.high}};
            else return {{"kind", "constant"}, {"value", d.value}};
        },
        dist);
}

/// Parses a distribution object; `path` prefixes error messages.
inline DistSpec dist_from_json(const nlohmann::json& j, const std::string& path) {
    using detail::number_at;
    if (!j.is_object()) detail::key_error(path, "expected an object with a \"kind\" field");
    if (!j.contains("kind") || !j.at("kind").is_string()) detail::key_error(path + ".kind", "missing required key");
    const std::string kind = j.at("kind").get<std::string>();
    const std::string p = path + ".";
    DistSpec dist;
    if (kind == "exponential") {
        detail::reject_unknown(j, {"kind", "mean"}, p);
        detail::require(j, {"mean"}, p);
        dist = Exponential{number_at(j, "mean", p + "mean")};
    } else if (kind == "gaussian") {
        detail::reject_unknown(j, {"kind", "mean", "std"}, p);
        detail::require(j, {"std"}, p);
        dist = Gaussian{j.contains("mean") ? number_at(j, "mean", p + "mean") : 0.0, number_at(j, "std", p + "std")};
    } else if (kind == "uniform") {
        detail::reject_unknown(j, {"kind", "low", "high"}, p);
        detail::require(j, {"low", "high"}, p);
        dist = Uniform{number_at(j, "low", p + "low"), number_at(j, "high", p + "high")};
    } else if (kind == "constant") {
        detail::reject_unknown(j, {"kind", "value"}, p);
        detail::require(j, {"value"}, p);
        dist = Constant{number_at(j, "value", p + "value")};
    } else {
        detail::key_error(p + "kind", "unknown distribution kind '" + kind + "'");
    }
    try {
        validate(dist);
    } catch (const ConfigError& e) {
        // name the offending field; uniform errors involve both bounds
        std::string where = path;
        if (const auto* g = std::get_if<Gaussian>(&dist)) where = p + (std::isfinite(g->mean) ? "std" : "mean");
        else if (std::holds_alternative<Exponential>(dist)) where = p + "mean";
        else if (std::holds_alternative<Constant>(dist)) where = p + "value";
        detail::key_error(where, e.what());
    }
    return dist;
}

inline nlohmann::json weights_to_json(const TrendWeights& w) {
    nlohmann::json j{{"horizon", w.horizon}};
    if (std::holds_alternative<EqualWeights>(w.scheme)) {
        j["scheme"] = "equal";
    } else if (const auto* d = std::get_if<ExpDecayWeights>(&w.scheme)) {
        j["scheme"] = "exp_decay";
        j["lambda"] = d->lambda;
    } else {
        j["scheme"] = "explicit";
        j["values"] = std::get<ExplicitWeights>(w.scheme).weights;
    }
    return j;
}

inline TrendWeights weights_from_json(const nlohmann::json& j) {
    if (!j.is_object()) detail::key_error("weights", "expected an object");
    detail::reject_unknown(j, {"scheme", "horizon", "lambda", "values"}, "weights.");
    TrendWeights w;
    const std::string scheme = j.value("scheme", std::string("equal"));
    if (j.contains("horizon")) {
        const auto& h = j.at("horizon");
        if (!h.is_number_integer() || h.get<long long>() < 1) detail::key_error("weights.horizon", "must be an integer >= 1");
        w.horizon = h.get<std::size_t>();
    }
    if (scheme == "equal") {
        w.scheme = EqualWeights{};
    } else if (scheme == "exp_decay") {
        detail::require(j, {"lambda"}, "weights.");
        w.scheme = ExpDecayWeights{detail::number_at(j, "lambda", "weights.lambda")};
    } else if (scheme == "explicit") {
        detail::require(j, {"values"}, "weights.");
        if (!j.at("values").is_array()) detail::key_error("weights.values", "expected an array");
        ExplicitWeights e;
        for (const auto& v : j.at("values")) {
            if (!v.is_number()) detail::key_error("weights.values", "expected numbers");
            e.weights.push_back(v.get<double>());
        }
        if (!j.contains("horizon")) w.horizon = e.weights.size();
        w.scheme = std::move(e);
    } else {
        detail::key_error("weights.scheme", "unknown scheme '" + scheme + "'");
    }
    try {
        (void)w.realize();
    } catch (const ConfigError& e) {
        detail::key_error("weights", e.what());
    }
    return w;
}

[[nodiscard]] inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "news" || s == "news-driven" || s == "1") return ModelKind::news;
    if (s == "trend" || s == "trend-following" || s == "2") return ModelKind::trend;
    if (s == "general" || s == "3") return ModelKind::general;
    throw ConfigError("model: unknown model '" + s + "' (expected news, trend or general)");
}

[[nodiscard]] inline Units parse_units(const std::string& s) {
    if (s == "percent") return Units::percent;
    if (s == "fraction") return Units::fraction;
    throw ConfigError("units: unknown units '" + s + "' (expected percent or fraction)");
}

/// Canonical JSON form. The `seed` key is present only when a seed is set.
inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["model"] = to_string(c.model);
    j["units"] = to_string(c.units);
    j["T"] = c.horizon;
    j["p0"] = c.p0;
    j["v0"] = c.v0;
    j["pe0"] = c.pe0;
    j["re0"] = c.re0;
    j["prob_i"] = c.news.prob_i;
    j["prob_j"] = c.news.prob_j;
    j["common_news"] = c.news.common_news;
    j["eps"] = dist_to_json(c.news.eps);
    j["nu"] = dist_to_json(c.news.nu);
    j["m"] = dist_to_json(c.impacts.m);
    j["n"] = dist_to_json(c.impacts.n);
    j["a"] = c.a;
    j["weights"] = weights_to_json(c.weights);
    if (c.seed) j["seed"] = *c.seed;
    j["n_paths"] = c.n_paths;
    return j;
}

inline RunConfig preset(const std::string& name);

/// Overlays the keys present in `j` onto `base` and validates the result.
inline RunConfig apply_json(RunConfig c, const nlohmann::json& j, bool require_model_keys) {
    using detail::number_at;
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    detail::reject_unknown(j, {"preset", "model", "units", "T", "p0", "v0", "pe0", "re0", "prob_i", "prob_j",
                               "common_news", "eps", "nu", "m", "n", "a", "weights", "seed", "n_paths"},
                           "");
    auto string_at = [&j](const char* key) {
        if (!j.at(key).is_string()) detail::key_error(key, "expected a string");
        return j.at(key).get<std::string>();
    };
    if (j.contains("model")) c.model = parse_model_kind(string_at("model"));
    if (require_model_keys) {
        detail::require(j, {"model"}, "");
        switch (c.model) {
            case ModelKind::news: detail::require(j, {"m", "n", "eps", "nu", "prob_i", "prob_j"}, ""); break;
            case ModelKind::trend: detail::require(j, {"n", "nu", "prob_j", "weights"}, ""); break;
            case ModelKind::general: detail::require(j, {"m", "n", "eps", "nu", "prob_i", "prob_j", "a"}, ""); break;
        }
    }
    if (j.contains("units")) c.units = parse_units(string_at("units"));
    if (j.contains("T")) {
        const auto& t = j.at("T");
        if (!t.is_number_integer()) detail::key_error("T", "expected an integer");
        if (t.get<long long>() < 2) detail::key_error("T", "horizon must be >= 2");
        c.horizon = t.get<std::size_t>();
    }
    for (auto [key, field] : {std::pair{"p0", &c.p0}, std::pair{"v0", &c.v0}, std::pair{"pe0", &c.pe0},
                              std::pair{"re0", &c.re0}, std::pair{"prob_i", &c.news.prob_i},
                              std::pair{"prob_j", &c.news.prob_j}, std::pair{"a", &c.a}}) {
        if (j.contains(key)) *field = number_at(j, key, key);
    }
    if (j.contains("common_news")) {
        if (!j.at("common_news").is_boolean()) detail::key_error("common_news", "expected a boolean");
        c.news.common_news = j.at("common_news").get<bool>();
    }
    if (j.contains("eps")) c.news.eps = dist_from_json(j.at("eps"), "eps");
    if (j.contains("nu")) c.news.nu = dist_from_json(j.at("nu"), "nu");
    if (j.contains("m")) c.impacts.m = dist_from_json(j.at("m"), "m");
    if (j.contains("n")) c.impacts.n = dist_from_json(j.at("n"), "n");
    if (j.contains("weights")) c.weights = weights_from_json(j.at("weights"));
    if (j.contains("seed")) {
        const auto& s = j.at("seed");
        if (!s.is_number_unsigned()) detail::key_error("seed", "expected a nonnegative integer");
        c.seed = s.get<std::uint64_t>();
    }
    if (j.contains("n_paths")) {
        const auto& n = j.at("n_paths");
        if (!n.is_number_integer() || n.get<long long>() < 1) detail::key_error("n_paths", "must be an integer >= 1");
        c.n_paths = n.get<std::size_t>();
    }

    if (!(c.news.prob_i >= 0.0 && c.news.prob_i <= 1.0)) detail::key_error("prob_i", "must lie in [0, 1]");
    if (!(c.news.prob_j >= 0.0 && c.news.prob_j <= 1.0)) detail::key_error("prob_j", "must lie in [0, 1]");
    if (!(c.a >= 0.0 && c.a < 1.0)) detail::key_error("a", "must satisfy 0 <= a < 1");
    if (!(c.p0 > 0.0)) detail::key_error("p0", "initial price must be > 0");
    if (!nonnegative_support(c.impacts.m)) detail::key_error("m", "distribution must have support in [0, inf)");
    if (!nonnegative_support(c.impacts.n)) detail::key_error("n", "distribution must have support in [0, inf)");
    validate(c);
    return c;
}

/// Parses a config document: optional `preset` base, then overrides.
inline RunConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    if (j.contains("preset")) {
        if (!j.at("preset").is_string()) detail::key_error("preset", "expected a string");
        return apply_json(preset(j.at("preset").get<std::string>()), j, false);
    }
    return apply_json(RunConfig{}, j, true);
}

// ---------------------------------------------------------------------------
// Presets

/// Names of the built-in presets, in display order.
inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"fig3", "fig4", "fig5", "fig6", "fig7-left", "fig7-right", "trend"};
    return names;
}

[[nodiscard]] inline bool is_preset(const std::string& name) {
    const auto& names = preset_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

/// Built-in parameter sets. fig3..fig7 are the reference parameter sets
/// (T = 10000, P0 = V0 = Pe0 = 100, exponential impacts, zero-mean gaussian
/// shocks); "trend" is the one-lag trend-following market used for the
/// Kesten tail checks.
inline RunConfig preset(const std::string& name) {
    RunConfig c;
    c.units = Units::percent;
    c.horizon = 10000;
    c.p0 = c.v0 = c.pe0 = 100.0;
    c.re0 = 0.0;
    if (name == "fig3" || name == "fig4") {
        c.model = ModelKind::news;
        c.impacts = {Exponential{0.1}, Exponential{0.1}};
        c.news = {0.5, 0.5, Gaussian{0.0, 1.0}, Gaussian{0.0, 1.0}, false};
        c.n_paths = name == "fig4" ? 5 : 1;
    } else if (name == "fig5" || name == "fig6" || name == "fig7-left" || name == "fig7-right") {
        c.model = ModelKind::general;
        c.impacts = {Exponential{0.2}, Exponential{0.1}};
        c.news = {0.3, 0.1, Gaussian{0.0, 1.0}, Gaussian{0.0, 0.04}, false};
        c.a = 0.99;
        c.n_paths = name == "fig6" ? 5 : 1;
        if (name == "fig7-right") c.news.prob_i = 0.0;
    } else if (name == "trend") {
        c.model = ModelKind::trend;
        c.impacts = {Constant{0.0}, Exponential{0.5}};
        c.news = {0.0, 0.5, Gaussian{0.0, 1.0}, Gaussian{0.0, 0.1}, false};
        c.weights = TrendWeights{1, EqualWeights{}};
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
}

/// FNV-1a over the canonical JSON of the config with the seed removed.
[[nodiscard]] inline std::uint64_t fingerprint(const RunConfig& config) {
    RunConfig unseeded = config;
    unseeded.seed.reset();
    const std::string text = to_json(unseeded).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace volcluster
