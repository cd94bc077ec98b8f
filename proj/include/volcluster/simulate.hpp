#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "volcluster/config.hpp"
#include "volcluster/error.hpp"
#include "volcluster/market.hpp"
#include "volcluster/random.hpp"
#include "volcluster/stats.hpp"

namespace volcluster {

/// One recorded step. `expectation` is the anticipated price for the news
/// model and the anticipated return otherwise.
struct PathRecord {
    std::size_t t = 0;
    double price = 0.0;
    double ret = 0.0;
    double value = 0.0;
    double expectation = 0.0;
    bool news_i = false;
    bool news_j = false;
    double m = 0.0;
    double n = 0.0;

    bool operator==(const PathRecord&) const = default;
};

/// Steps t = 1..T from the initial state at t = 0. A path that breached the
/// price floor keeps the records before the breach and sets `aborted_at`.
struct Path {
    ModelKind model = ModelKind::general;
    Units units = Units::percent;
    double p0 = 100.0;
    std::vector<PathRecord> records;
    std::uint64_t seed = 0;
    std::uint64_t config_fingerprint = 0;
    std::optional<std::size_t> aborted_at;

    bool operator==(const Path&) const = default;

    [[nodiscard]] std::vector<double> prices() const {
        std::vector<double> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.price);
        return out;
    }

    [[nodiscard]] std::vector<double> model_returns() const {
        std::vector<double> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.ret);
        return out;
    }
};

/// Returns the analysis pipeline works on: those implied by the recorded
/// price column, so re-ingesting a written path reproduces them exactly.
/// Empty when fewer than two prices were recorded.
[[nodiscard]] inline std::vector<double> path_returns(const Path& path) {
    if (path.records.size() < 2) return {};
    const auto prices = path.prices();
    return returns_from_prices(prices, path.units).values;
}

[[nodiscard]] inline MarketState initial_state(const RunConfig& config) {
    MarketState s;
    s.t = 0;
    s.price = config.p0;
    s.value = config.v0;
    s.anticipated_price = config.pe0;
    s.anticipated_return = config.re0;
    s.ret = 0.0;
    if (config.model == ModelKind::trend) s.return_history.assign(config.weights.horizon, 0.0);
    return s;
}

/// Runs one path of `config.model` for `config.horizon` steps. Deterministic
/// in (config, seed).
inline Path simulate(const RunConfig& config, std::uint64_t seed) {
    validate(config);
    Path path;
    path.model = config.model;
    path.units = config.units;
    path.p0 = config.p0;
    path.seed = seed;
    path.config_fingerprint = fingerprint(config);
    path.records.reserve(config.horizon);

    StepStreams streams = StepStreams::for_path(seed);
    MarketState state = initial_state(config);
    const GeneralParams general = config.general_params();
    const std::vector<double> weights =
        config.model == ModelKind::trend ? config.weights.realize() : std::vector<double>{};

    try {
        for (std::size_t step = 0; step < config.horizon; ++step) {
            switch (config.model) {
                case ModelKind::news:
                    state = step_news_driven(state, config.impacts, config.news, config.units, streams);
                    break;
                case ModelKind::trend:
                    state = step_trend_following(state, weights, config.impacts.n, config.news, config.units, streams);
                    break;
                case ModelKind::general:
                    state = step_general(state, general, config.units, streams);
                    break;
            }
            path.records.push_back({state.t, state.price, state.ret, state.value,
                                    config.model == ModelKind::news ? state.anticipated_price
                                                                    : state.anticipated_return,
                                    state.draws.news_i, state.draws.news_j, state.draws.m, state.draws.n});
        }
    } catch (const PriceFloorBreach& breach) {
        path.aborted_at = breach.step();
    }
    return path;
}

/// Runs `kind` regardless of the model named in the config.
inline Path simulate(ModelKind kind, RunConfig config, std::uint64_t seed) {
    config.model = kind;
    return simulate(config, seed);
}

/// Seed of path `index` in an ensemble rooted at `root_seed`: the first word
/// of stream `index` under the root.
[[nodiscard]] inline std::uint64_t ensemble_path_seed(std::uint64_t root_seed, std::size_t index) {
    return derive_stream(root_seed, index).next_u64();
}

struct PathSummary {
    std::uint64_t seed = 0;
    std::optional<SummaryStats> stats;  ///< absent when fewer than two prices exist
    std::optional<std::size_t> aborted_at;
    std::size_t steps = 0;
};

[[nodiscard]] inline PathSummary summarize(const Path& path) {
    PathSummary s;
    s.seed = path.seed;
    s.aborted_at = path.aborted_at;
    s.steps = path.records.size();
    const auto r = path_returns(path);
    if (!r.empty()) s.stats = summary_stats(r);
    return s;
}

struct Ensemble {
    std::uint64_t root_seed = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<PathSummary> summaries;
    std::vector<double> pooled_returns;  ///< path_returns of each path, concatenated in path order
    std::vector<Path> paths;             ///< empty unless EnsembleOptions::keep_paths
};

struct EnsembleOptions {
    /// Worker threads; 0 selects the available hardware parallelism.
    unsigned jobs = 0;
    bool keep_paths = true;
};

/// `n_paths` independent paths. Results do not depend on `jobs` or on
/// scheduling: each path owns its streams and writes only its own slot.
/// A path that breaches the price floor is flagged in its summary and its
/// partial returns are still pooled.
inline Ensemble run_ensemble(const RunConfig& config, std::size_t n_paths, std::uint64_t root_seed,
                             const EnsembleOptions& options = {}) {
    if (n_paths < 1) throw ConfigError("n_paths: must be >= 1");
    validate(config);
    Ensemble out;
    out.root_seed = root_seed;
    out.seeds.resize(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) out.seeds[i] = ensemble_path_seed(root_seed, i);

    struct Slot {
        Path path;
        PathSummary summary;
        std::vector<double> returns;
    };
    std::vector<Slot> slots(n_paths);
    unsigned jobs = options.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.jobs;
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n_paths));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n_paths; i = next.fetch_add(1)) {
            Slot& slot = slots[i];
            slot.path = simulate(config, out.seeds[i]);
            slot.summary = summarize(slot.path);
            slot.returns = path_returns(slot.path);
            if (!options.keep_paths) slot.path = Path{};
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(jobs);
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    out.summaries.reserve(n_paths);
    for (auto& slot : slots) {
        out.summaries.push_back(slot.summary);
        out.pooled_returns.insert(out.pooled_returns.end(), slot.returns.begin(), slot.returns.end());
        if (options.keep_paths) out.paths.push_back(std::move(slot.path));
    }
    return out;
}

/// Runs `kind` regardless of the model named in the config.
inline Ensemble run_ensemble(ModelKind kind, RunConfig config, std::size_t n_paths, std::uint64_t root_seed,
                             const EnsembleOptions& options = {}) {
    config.model = kind;
    return run_ensemble(config, n_paths, root_seed, options);
}

}  // namespace volcluster
