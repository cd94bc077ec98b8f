#pragma once

// Command implementations behind the `volcluster` executable. Each command
// writes its files, prints a summary and returns a CommandOutcome whose exit
// code is 0 on success, 1 for user/configuration errors and 2 for runtime or
// data errors.
//
// Output directories contain `config.json` (the resolved configuration,
// including the seed), the data files, `manifest.json` and `run_info.json`.
// Only run_info.json carries timing metadata; every other file is a pure
// function of the flags and seed.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "volcluster/analysis.hpp"
#include "volcluster/config.hpp"
#include "volcluster/error.hpp"
#include "volcluster/io.hpp"
#include "volcluster/kesten.hpp"
#include "volcluster/simulate.hpp"
#include "volcluster/stats.hpp"

namespace volcluster::cli {

struct CommandOutcome {
    int exit_code = 0;
    std::vector<std::string> files;
    std::string summary;
};

/// Rolling-std window and max/min ratio above which `simulate` reports a
/// nonstationary return series.
inline constexpr std::size_t kNonstationarityWindow = 500;
inline constexpr double kNonstationarityRatio = 2.0;

namespace fs = std::filesystem;

namespace detail {

inline std::string fixed(double v, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

/// Preset name or path to a JSON config file.
inline RunConfig resolve_config(const std::optional<std::string>& source, const std::string& fallback_preset) {
    if (!source) return preset(fallback_preset);
    if (is_preset(*source)) return preset(*source);
    if (fs::exists(*source)) return load_config(*source);
    throw ConfigError("--config: '" + *source + "' is neither a preset nor a readable file");
}

/// --seed flag, then VOLCLUSTER_SEED, then the config's seed, then a fresh
/// random seed which is printed for replay.
inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const RunConfig& config,
                                  std::ostream& out) {
    if (flag) return *flag;
    if (const char* env = std::getenv("VOLCLUSTER_SEED"); env && *env) {
        std::uint64_t v = 0;
        const std::string_view s(env);
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw ConfigError("VOLCLUSTER_SEED: expected a nonnegative integer, got '" + std::string(s) + "'");
        return v;
    }
    if (config.seed) return *config.seed;
    std::random_device rd;
    const std::uint64_t seed = (std::uint64_t{rd()} << 32) ^ rd();
    out << "seed: " << seed << " (random; pass --seed " << seed << " to replay)\n";
    return seed;
}

inline void write_run_info(const fs::path& dir, const std::string& command, double elapsed_ms) {
    write_json({{"command", command}, {"elapsed_ms", elapsed_ms}, {"generator_version", kGeneratorVersion}},
               dir / "run_info.json");
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    [[nodiscard]] double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
};

inline std::vector<std::string> to_strings(const std::vector<fs::path>& paths) {
    std::vector<std::string> out;
    for (const auto& p : paths) out.push_back(p.string());
    return out;
}

template <class F>
CommandOutcome guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return {1, {}, e.what()};
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return {2, {}, e.what()};
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return {2, {}, e.what()};
    }
}

/// Analysis files for one return series under `dir`, named `<stem>.json` etc.
inline std::vector<fs::path> analyze_into(std::span<const double> returns, const fs::path& dir,
                                          const std::string& stem, std::size_t max_lag, Analysis* result = nullptr) {
    if (returns.empty()) return {};
    const std::size_t lag = std::min<std::size_t>(max_lag, returns.size() > 2 ? returns.size() - 2 : 1);
    Analysis analysis = analyze_returns(returns, lag);
    auto files = write_analysis(analysis, dir / (stem + ".json"));
    if (result) *result = std::move(analysis);
    return files;
}

struct SingleRun {
    Path path;
    Analysis analysis;
    std::vector<fs::path> files;
};

inline SingleRun run_and_write(const RunConfig& config, std::uint64_t seed, const fs::path& dir) {
    SingleRun run;
    run.path = simulate(config, seed);
    write_path(run.path, dir / "path.csv");
    run.files.push_back(dir / "path.csv");
    const auto returns = path_returns(run.path);
    auto more = analyze_into(returns, dir, "analysis", 100, &run.analysis);
    run.files.insert(run.files.end(), more.begin(), more.end());
    return run;
}

inline std::string describe_run(const SingleRun& run) {
    std::ostringstream os;
    os << "mean(r)=" << fixed(run.analysis.summary.mean) << " std(r)=" << fixed(run.analysis.summary.std);
    if (run.analysis.fit)
        os << " alpha=" << fixed(run.analysis.fit->alpha, 3) << " (tail index " << fixed(run.analysis.fit->tail_index(), 3)
           << ", n_tail=" << run.analysis.fit->n_tail << ")";
    else
        os << " alpha=n/a";
    return os.str();
}

inline nlohmann::json ensemble_summary_json(const Ensemble& ens, const Analysis* pooled) {
    nlohmann::json per_path = nlohmann::json::array();
    double mean_sum = 0.0, std_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < ens.summaries.size(); ++i) {
        const auto& s = ens.summaries[i];
        nlohmann::json p{{"index", i}, {"seed", s.seed}, {"steps", s.steps}};
        p["aborted_at"] = s.aborted_at ? nlohmann::json(*s.aborted_at) : nlohmann::json(nullptr);
        if (s.stats) {
            p["summary"] = to_json(*s.stats);
            mean_sum += s.stats->mean;
            std_sum += s.stats->std;
            ++counted;
        } else {
            p["summary"] = nullptr;
        }
        per_path.push_back(std::move(p));
    }
    nlohmann::json j;
    j["schema_version"] = kAnalysisSchemaVersion;
    j["root_seed"] = ens.root_seed;
    j["n_paths"] = ens.summaries.size();
    j["per_path"] = std::move(per_path);
    j["average"] = counted ? nlohmann::json{{"mean", mean_sum / static_cast<double>(counted)},
                                            {"std", std_sum / static_cast<double>(counted)},
                                            {"paths", counted}}
                           : nlohmann::json(nullptr);
    j["pooled"] = pooled ? to_json(*pooled) : nlohmann::json(nullptr);
    return j;
}

struct EnsembleRun {
    Ensemble ensemble;
    std::optional<Analysis> pooled;
    std::vector<fs::path> files;
    std::size_t aborted = 0;
};

inline EnsembleRun run_ensemble_and_write(const RunConfig& config, std::size_t n_paths, std::uint64_t seed,
                                          unsigned jobs, const fs::path& dir) {
    EnsembleRun run;
    run.ensemble = run_ensemble(config, n_paths, seed, {jobs, true});
    for (std::size_t i = 0; i < run.ensemble.paths.size(); ++i) {
        std::ostringstream name;
        name << "path_" << std::setw(3) << std::setfill('0') << i << ".csv";
        write_path(run.ensemble.paths[i], dir / name.str());
        run.files.push_back(dir / name.str());
        if (run.ensemble.paths[i].aborted_at) ++run.aborted;
    }
    write_series(run.ensemble.pooled_returns, dir / "pooled_returns.csv");
    run.files.push_back(dir / "pooled_returns.csv");
    if (!run.ensemble.pooled_returns.empty()) {
        Analysis pooled;
        auto more = analyze_into(run.ensemble.pooled_returns, dir, "pooled_analysis", 100, &pooled);
        run.files.insert(run.files.end(), more.begin(), more.end());
        run.pooled = std::move(pooled);
    }
    write_json(ensemble_summary_json(run.ensemble, run.pooled ? &*run.pooled : nullptr), dir / "summary.json");
    run.files.push_back(dir / "summary.json");
    return run;
}

inline std::string describe_ensemble(const EnsembleRun& run) {
    const auto j = ensemble_summary_json(run.ensemble, nullptr);
    std::ostringstream os;
    os << "paths=" << run.ensemble.summaries.size();
    if (!j["average"].is_null())
        os << " avg mean(r)=" << fixed(j["average"]["mean"].get<double>())
           << " avg std(r)=" << fixed(j["average"]["std"].get<double>());
    if (run.pooled && run.pooled->fit) os << " pooled alpha=" << fixed(run.pooled->fit->alpha, 3);
    if (run.aborted) os << " aborted_paths=" << run.aborted;
    return os.str();
}

inline nlohmann::json relative_files(const std::vector<fs::path>& files, const fs::path& dir) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : files) arr.push_back(fs::relative(f, dir).generic_string());
    return arr;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::optional<std::string> model;
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<long long> periods;
    std::optional<std::string> units;
    std::string out = "run";
};

/// Layering: preset or config file, then flags.
inline RunConfig apply_overrides(RunConfig config, const std::optional<std::string>& model,
                                 const std::optional<long long>& periods, const std::optional<std::string>& units) {
    if (model) config.model = parse_model_kind(*model);
    if (periods) {
        if (*periods < 2) throw ConfigError("--periods: horizon must be >= 2");
        config.horizon = static_cast<std::size_t>(*periods);
    }
    if (units) config.units = parse_units(*units);
    validate(config);
    return config;
}

inline CommandOutcome cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> CommandOutcome {
        detail::Timer timer;
        RunConfig config = apply_overrides(detail::resolve_config(args.config, "fig5"), args.model, args.periods, args.units);
        config.seed = detail::resolve_seed(args.seed, config, out);
        const fs::path dir = args.out;
        fs::create_directories(dir);
        save_config(config, dir / "config.json");
        auto run = detail::run_and_write(config, *config.seed, dir);

        CommandOutcome outcome;
        outcome.files = detail::to_strings({dir / "config.json"});
        const auto data_files = detail::to_strings(run.files);
        outcome.files.insert(outcome.files.end(), data_files.begin(), data_files.end());

        std::ostringstream summary;
        summary << "simulate model=" << to_string(config.model) << " T=" << config.horizon << " seed=" << *config.seed
                << ' ' << detail::describe_run(run);
        const auto returns = path_returns(run.path);
        const double ratio = rolling_std_ratio(returns, kNonstationarityWindow);
        if (std::isfinite(ratio) || std::isinf(ratio))
            summary << " rolling-std ratio=" << detail::fixed(ratio, 2)
                    << (ratio > kNonstationarityRatio ? " nonstationary=yes" : " nonstationary=no");
        if (run.path.aborted_at) summary << " ABORTED: price floor breach at t=" << *run.path.aborted_at;

        write_json({{"command", "simulate"},
                    {"seed", *config.seed},
                    {"aborted_at", run.path.aborted_at ? nlohmann::json(*run.path.aborted_at) : nlohmann::json(nullptr)},
                    {"panels",
                     {{"a", "path.csv:price"}, {"b", "path.csv:ret"}, {"c", "analysis_ccdf.csv"}, {"d", "analysis_acf.csv"}}},
                    {"files", detail::relative_files(run.files, dir)}},
                   dir / "manifest.json");
        outcome.files.push_back((dir / "manifest.json").string());
        detail::write_run_info(dir, "simulate", timer.elapsed_ms());

        outcome.summary = summary.str();
        out << outcome.summary << '\n';
        if (run.path.aborted_at) {
            err << "error: price floor breach at t=" << *run.path.aborted_at << "; partial path written\n";
            outcome.exit_code = 2;
        }
        return outcome;
    });
}

// ---------------------------------------------------------------------------
// ensemble

struct EnsembleArgs {
    std::optional<std::string> config;
    std::optional<long long> paths;
    std::optional<std::uint64_t> seed;
    std::string out = "ensemble";
    unsigned jobs = 0;
};

inline CommandOutcome cmd_ensemble(const EnsembleArgs& args, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> CommandOutcome {
        detail::Timer timer;
        RunConfig config = detail::resolve_config(args.config, "fig6");
        if (args.paths) {
            if (*args.paths < 1) throw ConfigError("--paths: must be >= 1");
            config.n_paths = static_cast<std::size_t>(*args.paths);
        }
        validate(config);
        config.seed = detail::resolve_seed(args.seed, config, out);
        const fs::path dir = args.out;
        fs::create_directories(dir);
        save_config(config, dir / "config.json");
        auto run = detail::run_ensemble_and_write(config, config.n_paths, *config.seed, args.jobs, dir);
        write_json({{"command", "ensemble"}, {"seed", *config.seed}, {"files", detail::relative_files(run.files, dir)}},
                   dir / "manifest.json");
        detail::write_run_info(dir, "ensemble", timer.elapsed_ms());

        CommandOutcome outcome;
        outcome.files = detail::to_strings({dir / "config.json"});
        const auto data_files = detail::to_strings(run.files);
        outcome.files.insert(outcome.files.end(), data_files.begin(), data_files.end());
        outcome.files.push_back((dir / "manifest.json").string());
        outcome.summary = "ensemble model=" + std::string(to_string(config.model)) + " seed=" + std::to_string(*config.seed) +
                          ' ' + detail::describe_ensemble(run);
        out << outcome.summary << '\n';
        if (run.aborted) {
            err << "error: " << run.aborted << " path(s) breached the price floor; partial paths written\n";
            outcome.exit_code = 2;
        }
        return outcome;
    });
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
    std::optional<std::string> prices;
    std::optional<std::string> returns;
    std::optional<std::string> schema;
    std::optional<std::string> units;
    std::size_t max_lag = 100;
    std::string out = "analysis";
};

inline CommandOutcome cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> CommandOutcome {
        detail::Timer timer;
        if (args.prices.has_value() == args.returns.has_value())
            throw ConfigError("analyze needs exactly one of --prices or --returns");
        if (args.max_lag < 1) throw ConfigError("--max-lag: must be >= 1");
        const Units units = args.units ? parse_units(*args.units) : Units::percent;
        PriceCsvSchema schema = args.schema ? parse_schema(*args.schema) : PriceCsvSchema{};
        if (!args.schema && args.returns) schema.column = std::string("r");

        const fs::path dir = args.out;
        fs::create_directories(dir);
        std::vector<fs::path> files;
        std::vector<double> returns;
        if (args.prices) {
            const auto prices = load_price_csv(*args.prices, schema);
            returns = returns_from_prices(prices, units).values;
            write_series(returns, dir / "returns.csv");
            files.push_back(dir / "returns.csv");
            out << "read " << prices.size() << " prices from " << *args.prices << '\n';
        } else {
            returns = load_csv_column(*args.returns, schema);
            out << "read " << returns.size() << " returns from " << *args.returns << '\n';
        }
        Analysis analysis;
        auto more = detail::analyze_into(returns, dir, "analysis", args.max_lag, &analysis);
        files.insert(files.end(), more.begin(), more.end());
        write_json({{"command", "analyze"}, {"files", detail::relative_files(files, dir)}}, dir / "manifest.json");
        files.push_back(dir / "manifest.json");
        detail::write_run_info(dir, "analyze", timer.elapsed_ms());

        std::ostringstream summary;
        summary << "analyze n=" << analysis.summary.n << " mean(r)=" << detail::fixed(analysis.summary.mean)
                << " std(r)=" << detail::fixed(analysis.summary.std);
        if (analysis.fit)
            summary << " alpha=" << detail::fixed(analysis.fit->alpha, 3) << " (tail index "
                    << detail::fixed(analysis.fit->tail_index(), 3) << ")";
        else
            summary << " alpha=n/a (" << analysis.fit_error << ")";
        CommandOutcome outcome{0, detail::to_strings(files), summary.str()};
        out << outcome.summary << '\n';
        return outcome;
    });
}

// ---------------------------------------------------------------------------
// kesten

struct KestenArgs {
    std::string dist;
    double tol = 1e-8;
};

/// Parses "kind=exponential,mean=0.5" into a distribution.
inline DistSpec parse_dist_flag(const std::string& text) {
    nlohmann::json j = nlohmann::json::object();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("--dist: expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        if (key == "kind") {
            j[key] = value;
        } else {
            const auto v = volcluster::detail::parse_double(value);
            if (!v) throw ConfigError("--dist." + key + ": expected a number, got '" + value + "'");
            j[key] = *v;
        }
    }
    return dist_from_json(j, "--dist");
}

inline CommandOutcome cmd_kesten(const KestenArgs& args, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> CommandOutcome {
        const DistSpec dist = parse_dist_flag(args.dist);
        if (!(args.tol > 0.0)) throw ConfigError("--tol: must be positive");
        const auto sol = kesten_exponent(dist, args.tol);
        std::ostringstream os;
        os << "alpha = " << detail::fixed(sol.alpha, 6) << "\nresidual = " << std::scientific << std::setprecision(3)
           << sol.residual;
        CommandOutcome outcome{0, {}, os.str()};
        out << outcome.summary << '\n';
        return outcome;
    });
}

// ---------------------------------------------------------------------------
// reproduce

struct ReproduceArgs {
    std::string figure;
    std::optional<std::uint64_t> seed;
    std::string out = "reproduce";
    unsigned jobs = 0;
};

inline CommandOutcome cmd_reproduce(const ReproduceArgs& args, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> CommandOutcome {
        detail::Timer timer;
        const std::string& fig = args.figure;
        if (fig == "fig1" || fig == "fig2")
            throw ConfigError(fig + " shows empirical market data, which is not bundled; run `volcluster analyze "
                                    "--prices <csv>` on your own price series instead");
        if (fig != "fig3" && fig != "fig4" && fig != "fig5" && fig != "fig6" && fig != "fig7")
            throw ConfigError("unknown figure '" + fig + "' (expected fig3, fig4, fig5, fig6 or fig7)");

        const fs::path dir = args.out;
        fs::create_directories(dir);
        const RunConfig base = preset(fig == "fig7" ? "fig7-left" : fig);
        const std::uint64_t seed = detail::resolve_seed(args.seed, base, out);
        out << "reproduce " << fig << " seed=" << seed
            << " (reference statistics come from single unseeded runs; compare at the ensemble level)\n";

        CommandOutcome outcome;
        std::vector<fs::path> files;
        nlohmann::json manifest{{"command", "reproduce"}, {"figure", fig}, {"seed", seed}};
        std::ostringstream summary;
        bool aborted = false;

        if (fig == "fig3" || fig == "fig5") {
            RunConfig config = base;
            config.seed = seed;
            save_config(config, dir / "config.json");
            files.push_back(dir / "config.json");
            auto run = detail::run_and_write(config, seed, dir);
            files.insert(files.end(), run.files.begin(), run.files.end());
            manifest["panels"] = {{"a", "path.csv:price"}, {"b", "path.csv:ret"}, {"c", "analysis_ccdf.csv"},
                                  {"d", "analysis_acf.csv"}};
            summary << fig << ' ' << detail::describe_run(run);
            aborted = run.path.aborted_at.has_value();
        } else if (fig == "fig4" || fig == "fig6") {
            RunConfig config = base;
            config.seed = seed;
            save_config(config, dir / "config.json");
            files.push_back(dir / "config.json");
            auto run = detail::run_ensemble_and_write(config, config.n_paths, seed, args.jobs, dir);
            files.insert(files.end(), run.files.begin(), run.files.end());
            manifest["panels"] = {{"a", "path_*.csv:price"},
                                  {"b", "path_*.csv:ret"},
                                  {"c", "pooled_analysis_ccdf.csv"},
                                  {"d", "pooled_analysis_acf.csv"}};
            summary << fig << ' ' << detail::describe_ensemble(run);
            aborted = run.aborted > 0;
        } else {
            for (const auto& [side, name] : {std::pair{"left", "fig7-left"}, std::pair{"right", "fig7-right"}}) {
                RunConfig config = preset(name);
                config.seed = seed;
                const fs::path sub = dir / side;
                fs::create_directories(sub);
                save_config(config, sub / "config.json");
                files.push_back(sub / "config.json");
                auto run = detail::run_and_write(config, seed, sub);
                files.insert(files.end(), run.files.begin(), run.files.end());
                summary << (std::string(side) == "left" ? "" : "; ") << side << " (prob_i=" << config.news.prob_i
                        << ") " << detail::describe_run(run);
                aborted = aborted || run.path.aborted_at.has_value();
            }
            manifest["panels"] = {{"a", "left/path.csv:price"},   {"b", "left/path.csv:ret"},
                                  {"c", "left/analysis_ccdf.csv"}, {"d", "left/analysis_acf.csv"},
                                  {"a'", "right/path.csv:price"}, {"b'", "right/path.csv:ret"},
                                  {"c'", "right/analysis_ccdf.csv"}, {"d'", "right/analysis_acf.csv"}};
        }
        manifest["files"] = detail::relative_files(files, dir);
        write_json(manifest, dir / "manifest.json");
        files.push_back(dir / "manifest.json");
        detail::write_run_info(dir, "reproduce", timer.elapsed_ms());

        outcome.files = detail::to_strings(files);
        outcome.summary = summary.str();
        out << outcome.summary << '\n';
        if (aborted) {
            err << "error: price floor breach; partial output written\n";
            outcome.exit_code = 2;
        }
        return outcome;
    });
}

}  // namespace volcluster::cli
