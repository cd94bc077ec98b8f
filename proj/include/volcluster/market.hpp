#pragma once

// State machines for the three market variants:
//   news     purely news-driven investors (value and anticipated price follow
//            news-driven random walks)
//   trend    purely speculative trend followers; the return is a random
//            coefficient autoregression in past returns
//   general  news-driven value plus an AR(1) anticipated return
//
// Every step resolves the simultaneity between return and price by evaluating
// mispricings at the previous price.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "volcluster/error.hpp"
#include "volcluster/random.hpp"

namespace volcluster {

enum class ModelKind { news, trend, general };

enum class Units { percent, fraction };

[[nodiscard]] inline const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::news: return "news";
        case ModelKind::trend: return "trend";
        case ModelKind::general: return "general";
    }
    return "?";
}

[[nodiscard]] inline const char* to_string(Units units) {
    return units == Units::percent ? "percent" : "fraction";
}

/// 100 under percent units, 1 under fraction units.
[[nodiscard]] constexpr double unit_scale(Units units) noexcept {
    return units == Units::percent ? 100.0 : 1.0;
}

/// Relative gap (target - price) / price in the configured return units.
[[nodiscard]] inline double mispricing(double target, double price, Units units) noexcept {
    return unit_scale(units) * (target - price) / price;
}

/// Price after a return r expressed in the configured units.
[[nodiscard]] inline double apply_return(double price, double ret, Units units) noexcept {
    return price * (1.0 + ret / unit_scale(units));
}

// ---------------------------------------------------------------------------
// Demand microfoundation

/// Aggregate trader parameters behind the price-impact coefficients.
struct Microfoundation {
    double beta = 1.0;              ///< price-adjustment speed
    double mu = 1.0;                ///< investor aggressiveness
    double gamma = 1.0;             ///< speculator aggressiveness
    double liquidity = 1.0;         ///< market depth L
    double investor_count = 1.0;    ///< M
    double speculator_count = 1.0;  ///< N
};

inline void validate(const Microfoundation& micro) {
    if (!(micro.liquidity > 0.0)) throw DomainError("liquidity must be positive");
    if (!(micro.beta > 0.0) || !(micro.mu > 0.0) || !(micro.gamma > 0.0) ||
        !(micro.investor_count > 0.0) || !(micro.speculator_count > 0.0))
        throw DomainError("microfoundation parameters must be strictly positive");
}

struct Impacts {
    double m = 0.0;  ///< investor price impact
    double n = 0.0;  ///< speculator price impact
};

[[nodiscard]] inline Impacts derive_impacts(const Microfoundation& micro) {
    validate(micro);
    return {micro.beta * micro.mu * micro.investor_count / micro.liquidity,
            micro.beta * micro.gamma * micro.speculator_count / micro.liquidity};
}

/// Market excess demand of investors (valuation `value`) and speculators
/// (anticipated price `anticipated_price`) at `price`.
[[nodiscard]] inline double excess_demand(double value, double anticipated_price, double price,
                                          const Microfoundation& micro) {
    if (!(price > 0.0)) throw DomainError("excess_demand requires price > 0");
    return micro.mu * micro.investor_count * (value - price) / price +
           micro.gamma * micro.speculator_count * (anticipated_price - price) / price;
}

/// Linear price adjustment: fractional return beta * Z / L.
[[nodiscard]] inline double return_from_demand(double demand, const Microfoundation& micro) {
    return micro.beta * demand / micro.liquidity;
}

/// Return of the news-driven market in (m, n) form.
[[nodiscard]] inline double news_driven_return(double m, double n, double value,
                                               double anticipated_price, double price,
                                               Units units) noexcept {
    return m * mispricing(value, price, units) + n * mispricing(anticipated_price, price, units);
}

// ---------------------------------------------------------------------------
// Parameter types

/// Per-step distributions of the impact coefficients m_t and n_t.
struct ImpactDists {
    DistSpec m = Exponential{0.1};
    DistSpec n = Exponential{0.1};

    bool operator==(const ImpactDists&) const = default;
};

inline void validate(const ImpactDists& impacts) {
    validate(impacts.m);
    validate(impacts.n);
    if (!nonnegative_support(impacts.m)) throw ConfigError("m distribution must have support in [0, inf)");
    if (!nonnegative_support(impacts.n)) throw ConfigError("n distribution must have support in [0, inf)");
}

struct EqualWeights {
    bool operator==(const EqualWeights&) const = default;
};

/// w_h proportional to exp(-lambda (h - 1)).
struct ExpDecayWeights {
    double lambda = 1.0;
    bool operator==(const ExpDecayWeights&) const = default;
};

struct ExplicitWeights {
    std::vector<double> weights;
    bool operator==(const ExplicitWeights&) const = default;
};

/// Trend-following weights over the last `horizon` returns.
struct TrendWeights {
    std::size_t horizon = 1;
    std::variant<EqualWeights, ExpDecayWeights, ExplicitWeights> scheme = EqualWeights{};

    bool operator==(const TrendWeights&) const = default;

    /// Weight vector of length `horizon` summing to one; index 0 multiplies r_{t-1}.
    [[nodiscard]] std::vector<double> realize() const {
        if (horizon == 0) throw ConfigError("weights.horizon must be >= 1");
        std::vector<double> w(horizon);
        if (std::holds_alternative<EqualWeights>(scheme)) {
            std::fill(w.begin(), w.end(), 1.0);
        } else if (const auto* decay = std::get_if<ExpDecayWeights>(&scheme)) {
            if (!(decay->lambda > 0.0) || !std::isfinite(decay->lambda))
                throw ConfigError("weights.lambda must be positive");
            for (std::size_t h = 0; h < horizon; ++h)
                w[h] = std::exp(-decay->lambda * static_cast<double>(h));
        } else {
            const auto& given = std::get<ExplicitWeights>(scheme).weights;
            if (given.size() != horizon)
                throw ConfigError("weights.values must have exactly horizon entries");
            for (double v : given)
                if (!std::isfinite(v)) throw ConfigError("weights.values must be finite");
            w = given;
        }
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        if (total == 0.0 || !std::isfinite(total)) throw ConfigError("weights must not sum to zero");
        if (horizon == 1) return {1.0};
        for (double& v : w) v /= total;
        return w;
    }
};

/// Feedback coefficient and shock processes of the general model.
struct GeneralParams {
    double a = 0.99;
    ImpactDists impacts;
    NewsSpec news;
};

inline void validate(const GeneralParams& params) {
    if (!(params.a >= 0.0 && params.a < 1.0)) throw ConfigError("a must satisfy 0 <= a < 1");
    validate(params.impacts);
    validate(params.news);
}

// ---------------------------------------------------------------------------
// State and steps

/// Draws consumed by the last step, kept for path records.
struct StepDraws {
    bool news_i = false;
    bool news_j = false;
    double m = 0.0;
    double n = 0.0;
};

struct MarketState {
    std::size_t t = 0;
    double price = 100.0;
    double value = 100.0;              ///< investors' valuation
    double anticipated_price = 100.0;  ///< news model only
    double anticipated_return = 0.0;   ///< trend and general models
    double ret = 0.0;
    std::vector<double> return_history;  ///< trend model: r_{t-1}, r_{t-2}, ...
    StepDraws draws;
};

/// The four streams a path consumes. Index layout under the path seed:
/// 0 = m_t, 1 = n_t, 2 = news channel I, 3 = news channel J.
struct StepStreams {
    SeedStream m;
    SeedStream n;
    SeedStream news_i;
    SeedStream news_j;

    [[nodiscard]] static StepStreams for_path(std::uint64_t path_seed) noexcept {
        return {derive_stream(path_seed, 0), derive_stream(path_seed, 1), derive_stream(path_seed, 2),
                derive_stream(path_seed, 3)};
    }
};

namespace detail {

inline void commit_price(MarketState& next, double prev_price, Units units) {
    next.price = apply_return(prev_price, next.ret, units);
    if (!(next.price > 0.0) || !std::isfinite(next.price)) throw PriceFloorBreach(next.t);
}

}  // namespace detail

/// Purely news-driven market: investors' value and speculators' anticipated
/// price are revised by eps (channel I) and nu (channel J) when news fires.
inline MarketState step_news_driven(const MarketState& state, const ImpactDists& impacts,
                                    const NewsSpec& news, Units units, StepStreams& streams) {
    MarketState next = state;
    ++next.t;
    const double m = draw(impacts.m, streams.m);
    const double n = draw(impacts.n, streams.n);
    const NewsDraw shock = draw_news(news, streams.news_i, streams.news_j);
    if (shock.indicator_i) next.value += shock.eps;
    if (shock.indicator_j) next.anticipated_price += shock.nu;
    next.ret = news_driven_return(m, n, next.value, next.anticipated_price, state.price, units);
    next.draws = {shock.indicator_i, shock.indicator_j, m, n};
    detail::commit_price(next, state.price, units);
    return next;
}

/// Purely speculative trend-following market (m_t = 0):
///   r_t = n_t * sum_h w_h r_{t-h} + n_t * nu_t * 1(J_t).
/// `weights` is the realized weight vector (see TrendWeights::realize).
inline MarketState step_trend_following(const MarketState& state, const std::vector<double>& weights,
                                        const DistSpec& n_dist, const NewsSpec& news, Units units,
                                        StepStreams& streams) {
    if (state.return_history.size() != weights.size())
        throw DomainError("return history length must equal the trend horizon");
    MarketState next = state;
    ++next.t;
    const double n = draw(n_dist, streams.n);
    const NewsDraw shock = draw_news(news, streams.news_i, streams.news_j);
    double trend = 0.0;
    for (std::size_t h = 0; h < weights.size(); ++h) trend += weights[h] * state.return_history[h];
    const double news_term = shock.indicator_j ? shock.nu : 0.0;
    next.anticipated_return = trend + news_term;
    next.ret = n * trend + n * news_term;
    next.draws = {shock.indicator_i, shock.indicator_j, 0.0, n};
    detail::commit_price(next, state.price, units);
    // shift: newest first
    for (std::size_t h = next.return_history.size(); h-- > 1;)
        next.return_history[h] = next.return_history[h - 1];
    next.return_history[0] = next.ret;
    return next;
}

/// General model: value is revised by nu on channel I, the anticipated return
/// follows r^e_t = a r^e_{t-1} + eps_t 1(J_t), and
///   r_t = n_t r^e_t + m_t * mispricing(value, P_{t-1}).
inline MarketState step_general(const MarketState& state, const GeneralParams& params, Units units,
                                StepStreams& streams) {
    MarketState next = state;
    ++next.t;
    const double m = draw(params.impacts.m, streams.m);
    const double n = draw(params.impacts.n, streams.n);
    const NewsDraw shock = draw_news(params.news, streams.news_i, streams.news_j);
    if (shock.indicator_i) next.value += shock.nu;
    next.anticipated_return = params.a * state.anticipated_return + (shock.indicator_j ? shock.eps : 0.0);
    next.ret = n * next.anticipated_return + m * mispricing(next.value, state.price, units);
    next.draws = {shock.indicator_i, shock.indicator_j, m, n};
    detail::commit_price(next, state.price, units);
    return next;
}

}  // namespace volcluster
