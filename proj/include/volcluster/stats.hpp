#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volcluster/error.hpp"
#include "volcluster/market.hpp"

namespace volcluster {

struct ReturnSeries {
    std::vector<double> values;
    Units units = Units::percent;
};

/// r_t = (P_t - P_{t-1}) / P_{t-1}, times 100 under percent units.
inline ReturnSeries returns_from_prices(std::span<const double> prices, Units units) {
    if (prices.size() < 2) throw DataError("at least two prices are required to form a return");
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i]))
            throw DataError("nonpositive or non-finite price at index " + std::to_string(i));
    }
    ReturnSeries out{{}, units};
    out.values.reserve(prices.size() - 1);
    const double scale = unit_scale(units);
    for (std::size_t i = 1; i < prices.size(); ++i)
        out.values.push_back(scale * (prices[i] - prices[i - 1]) / prices[i - 1]);
    return out;
}

/// Sample moments. `std` uses the population convention (divide by n).
struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;
    double min = 0.0;
    double max = 0.0;
};

inline SummaryStats summary_stats(std::span<const double> series) {
    if (series.empty()) throw DomainError("summary_stats requires a nonempty series");
    SummaryStats s;
    s.n = series.size();
    const double n = static_cast<double>(s.n);
    s.mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : series) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / n);
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    s.min = *lo;
    s.max = *hi;
    return s;
}

/// Sample autocorrelation at lags 1..max_lag; rho[h - 1] is lag h.
struct AcfResult {
    std::vector<double> rho;
    double band = 0.0;  ///< 1.96 / sqrt(n)
    std::size_t n = 0;

    [[nodiscard]] std::size_t max_lag() const noexcept { return rho.size(); }
    [[nodiscard]] double at(std::size_t lag) const { return rho.at(lag - 1); }
};

/// Standard sample ACF: full-sample mean in every product and the full-sample
/// sum of squares as the common denominator.
inline AcfResult acf(std::span<const double> series, std::size_t max_lag) {
    if (max_lag < 1) throw DomainError("acf requires max_lag >= 1");
    if (series.size() <= max_lag + 1)
        throw DomainError("acf requires series length > max_lag + 1");
    const std::size_t n = series.size();
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centered(n);
    double denom = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        centered[t] = series[t] - mean;
        denom += centered[t] * centered[t];
    }
    if (!(denom > 0.0)) throw DegenerateError("acf of a zero-variance series is undefined");
    AcfResult out;
    out.n = n;
    out.band = 1.96 / std::sqrt(static_cast<double>(n));
    out.rho.resize(max_lag);
    for (std::size_t h = 1; h <= max_lag; ++h) {
        double num = 0.0;
        for (std::size_t t = 0; t + h < n; ++t) num += centered[t] * centered[t + h];
        out.rho[h - 1] = num / denom;
    }
    return out;
}

/// Empirical P(X >= x) at each distinct sample value, x ascending.
struct CcdfPoints {
    std::vector<double> x;
    std::vector<double> fraction;
    std::vector<std::size_t> count;  ///< number of sample points >= x
    std::size_t n = 0;
};

inline CcdfPoints ccdf(std::span<const double> sample) {
    if (sample.empty()) throw DomainError("ccdf requires a nonempty sample");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    CcdfPoints out;
    out.n = sorted.size();
    const double n = static_cast<double>(out.n);
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const std::size_t at_or_above = sorted.size() - i;
        out.x.push_back(sorted[i]);
        out.count.push_back(at_or_above);
        out.fraction.push_back(static_cast<double>(at_or_above) / n);
        i = j;
    }
    return out;
}

/// Continuous power-law fit of a tail: density ~ x^-alpha for x >= xmin.
/// `alpha` is the density exponent; the CCDF decays as x^-(alpha - 1).
struct TailFit {
    double alpha = 0.0;
    double xmin = 0.0;
    double ks_stat = 0.0;
    std::size_t n_tail = 0;
    double se = 0.0;  ///< (alpha - 1) / sqrt(n_tail)

    /// Exponent of P(X > x) ~ C x^-tail_index.
    [[nodiscard]] double tail_index() const noexcept { return alpha - 1.0; }
};

struct FitOptions {
    std::optional<double> xmin_override;
    std::size_t min_tail = 50;
    /// Candidate cutoffs are every `stride`-th distinct value, with the stride
    /// chosen so that at most this many candidates are scored.
    std::size_t max_candidates = 1000;
};

namespace detail {

/// KS distance between the empirical CDF of sorted[first..] and the Pareto
/// with exponent alpha and cutoff exp(log_xmin). Returns early once the
/// distance reaches `give_up`.
inline double pareto_ks(const std::vector<double>& sorted, const std::vector<double>& logs,
                        std::size_t first, double alpha, double log_xmin,
                        double give_up = std::numeric_limits<double>::infinity()) {
    const std::size_t n = sorted.size();
    const double n_tail = static_cast<double>(n - first);
    double ks = 0.0;
    for (std::size_t k = first; k < n;) {
        std::size_t end = k;
        while (end < n && sorted[end] == sorted[k]) ++end;
        const double model = -std::expm1((1.0 - alpha) * (logs[k] - log_xmin));
        const double below = static_cast<double>(k - first) / n_tail;
        const double at = static_cast<double>(end - first) / n_tail;
        ks = std::max({ks, std::abs(model - below), std::abs(model - at)});
        if (ks >= give_up) return ks;
        k = end;
    }
    return ks;
}

}  // namespace detail

/// Maximum-likelihood power-law tail fit with the cutoff chosen to minimise
/// the KS distance. Zeros are dropped (they cannot belong to a tail);
/// negative or non-finite values are rejected.
inline TailFit fit_power_law(std::span<const double> sample, const FitOptions& options = {}) {
    std::vector<double> sorted;
    sorted.reserve(sample.size());
    for (double x : sample) {
        if (!std::isfinite(x) || x < 0.0) throw DomainError("fit_power_law requires nonnegative finite values");
        if (x > 0.0) sorted.push_back(x);
    }
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const std::size_t min_tail = std::max<std::size_t>(options.min_tail, 1);
    if (n < min_tail) throw FitError("tail too small: " + std::to_string(n) + " positive values, need " +
                                     std::to_string(min_tail));

    std::vector<double> logs(n);
    for (std::size_t i = 0; i < n; ++i) logs[i] = std::log(sorted[i]);
    // suffix[i] = sum of logs[i..n)
    std::vector<double> suffix(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + logs[i];

    auto fit_at = [&](std::size_t first, double give_up) {
        TailFit fit;
        fit.xmin = sorted[first];
        fit.n_tail = n - first;
        const double s = suffix[first] - static_cast<double>(fit.n_tail) * logs[first];
        fit.alpha = 1.0 + static_cast<double>(fit.n_tail) / s;
        fit.se = (fit.alpha - 1.0) / std::sqrt(static_cast<double>(fit.n_tail));
        fit.ks_stat = detail::pareto_ks(sorted, logs, first, fit.alpha, logs[first], give_up);
        return fit;
    };

    if (options.xmin_override) {
        const double xmin = *options.xmin_override;
        if (!(xmin > 0.0)) throw DomainError("xmin override must be positive");
        const auto first = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), xmin) - sorted.begin());
        if (n - first < min_tail)
            throw FitError("tail too small above xmin: " + std::to_string(n - first) + " points");
        const double log_xmin = std::log(xmin);
        const double s = suffix[first] - static_cast<double>(n - first) * log_xmin;
        if (!(s > 0.0)) throw DegenerateError("all tail values equal xmin");
        TailFit fit;
        fit.xmin = xmin;
        fit.n_tail = n - first;
        fit.alpha = 1.0 + static_cast<double>(fit.n_tail) / s;
        fit.se = (fit.alpha - 1.0) / std::sqrt(static_cast<double>(fit.n_tail));
        fit.ks_stat = detail::pareto_ks(sorted, logs, first, fit.alpha, log_xmin);
        return fit;
    }

    if (sorted.front() == sorted.back()) throw DegenerateError("all sample values are equal");

    // Distinct values whose tail holds at least min_tail points and more than
    // one distinct value.
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && sorted[i] == sorted[i - 1]) continue;
        if (n - i < min_tail || sorted[i] == sorted.back()) break;
        candidates.push_back(i);
    }
    if (candidates.empty()) throw FitError("tail too small: no cutoff leaves " + std::to_string(min_tail) + " points");
    const std::size_t limit = std::max<std::size_t>(options.max_candidates, 1);
    const std::size_t stride = (candidates.size() + limit - 1) / limit;

    std::optional<TailFit> best;
    for (std::size_t c = 0; c < candidates.size(); c += stride) {
        const double give_up = best ? best->ks_stat : std::numeric_limits<double>::infinity();
        TailFit fit = fit_at(candidates[c], give_up);
        if (!best || fit.ks_stat < best->ks_stat) best = fit;
    }
    return *best;
}

/// Hill estimate of the CCDF tail index from the k largest order statistics:
/// k / sum_{i=1..k} ln(x_(i) / x_(k+1)), x_(1) the largest.
inline double hill_estimator(std::span<const double> sample, std::size_t k) {
    if (k == 0 || k >= sample.size()) throw DomainError("hill_estimator requires 0 < k < n");
    std::vector<double> x(sample.begin(), sample.end());
    for (double v : x)
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("hill_estimator requires positive values");
    std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k), x.end(), std::greater<>());
    const double threshold = x[k];
    std::sort(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k), std::greater<>());
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += std::log(x[i] / threshold);
    if (!(s > 0.0)) throw DegenerateError("hill_estimator: top order statistics are all equal");
    return static_cast<double>(k) / s;
}

/// Population standard deviation over each full window, one value per window
/// start (length - window + 1 values).
inline std::vector<double> rolling_std(std::span<const double> series, std::size_t window) {
    if (window == 0 || window > series.size()) throw DomainError("rolling_std requires 0 < window <= length");
    std::vector<double> out;
    out.reserve(series.size() - window + 1);
    for (std::size_t start = 0; start + window <= series.size(); ++start)
        out.push_back(summary_stats(series.subspan(start, window)).std);
    return out;
}

/// max/min of the rolling standard deviation; NaN when undefined (short
/// series or a zero minimum with zero maximum).
inline double rolling_std_ratio(std::span<const double> series, std::size_t window) {
    if (series.size() < window) return std::numeric_limits<double>::quiet_NaN();
    const auto rs = rolling_std(series, window);
    const auto [lo, hi] = std::minmax_element(rs.begin(), rs.end());
    if (*hi == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return *hi / *lo;
}

}  // namespace volcluster
