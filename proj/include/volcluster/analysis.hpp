#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volcluster/error.hpp"
#include "volcluster/stats.hpp"

namespace volcluster {

/// The statistics reported for one return series: moments, ACF of r and |r|,
/// CCDF of |r| and a power-law fit of the |r| tail. Statistics that cannot be
/// computed are absent with the reason recorded.
struct Analysis {
    SummaryStats summary;
    std::optional<AcfResult> acf_returns;
    std::optional<AcfResult> acf_abs;
    std::string acf_error;
    CcdfPoints ccdf;
    std::optional<TailFit> fit;
    std::string fit_error;
};

inline std::vector<double> absolute_values(std::span<const double> series) {
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) out[i] = std::abs(series[i]);
    return out;
}

inline Analysis analyze_returns(std::span<const double> returns, std::size_t max_lag = 100,
                                const FitOptions& fit_options = {}) {
    if (returns.empty()) throw DataError("no returns to analyze");
    for (double r : returns)
        if (!std::isfinite(r)) throw DataError("returns must be finite");
    Analysis out;
    out.summary = summary_stats(returns);
    const auto abs_r = absolute_values(returns);
    try {
        out.acf_returns = acf(returns, max_lag);
        out.acf_abs = acf(abs_r, max_lag);
    } catch (const Error& e) {
        out.acf_returns.reset();
        out.acf_abs.reset();
        out.acf_error = e.what();
    }
    out.ccdf = ccdf(abs_r);
    try {
        out.fit = fit_power_law(abs_r, fit_options);
    } catch (const Error& e) {
        out.fit_error = e.what();
    }
    return out;
}

}  // namespace volcluster
