#pragma once

// Tail exponent of a first-order random coefficient autoregression
// r_t = c_t r_{t-1} + noise: the unique alpha > 0 with E|c|^alpha = 1.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "volcluster/error.hpp"
#include "volcluster/random.hpp"

namespace volcluster {

struct KestenSolution {
    double alpha = 0.0;
    double residual = 0.0;  ///< |E|c|^alpha - 1|
    int iterations = 0;
};

namespace detail {

/// log(x^p + sign * y^p) for x >= y >= 0, computed without overflow.
inline double log_power_combination(double x, double y, double p, double sign) {
    if (y == 0.0) return p * std::log(x);
    return p * std::log(x) + std::log1p(sign * std::pow(y / x, p));
}

/// Gaussian moments by tanh-sinh quadrature over mean +/- 12 std, split at 0
/// where |x|^p and ln|x| are not smooth.
template <class F>
double gaussian_expectation(const Gaussian& g, F&& f) {
    thread_local boost::math::quadrature::tanh_sinh<double> integrator;
    const double lo = g.mean - 12.0 * g.std;
    const double hi = g.mean + 12.0 * g.std;
    auto integrand = [&](double x) {
        const double z = (x - g.mean) / g.std;
        return f(x) * std::exp(-0.5 * z * z) / (g.std * std::sqrt(2.0 * std::numbers::pi));
    };
    if (lo < 0.0 && hi > 0.0) return integrator.integrate(integrand, lo, 0.0) + integrator.integrate(integrand, 0.0, hi);
    return integrator.integrate(integrand, lo, hi);
}

/// ln E|c|^p.
inline double log_abs_moment(const DistSpec& dist, double p) {
    return std::visit(
        [p](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return p * std::log(d.mean) + boost::math::lgamma(1.0 + p);
            } else if constexpr (std::is_same_v<T, Uniform>) {
                // integral of |x|^p over [low, high] divided by (high - low)
                const double q = p + 1.0;
                const double width_log = std::log(q) + std::log(d.high - d.low);
                if (d.low >= 0.0) return log_power_combination(d.high, d.low, q, -1.0) - width_log;
                if (d.high <= 0.0) return log_power_combination(-d.low, -d.high, q, -1.0) - width_log;
                const double a = std::max(d.high, -d.low);
                const double b = std::min(d.high, -d.low);
                return log_power_combination(a, b, q, 1.0) - width_log;
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return std::log(gaussian_expectation(d, [p](double x) { return std::pow(std::abs(x), p); }));
            } else {
                return p * std::log(std::abs(d.value));
            }
        },
        dist);
}

/// E ln|c|.
inline double mean_log_abs(const DistSpec& dist) {
    return std::visit(
        [](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return std::log(d.mean) - std::numbers::egamma;
            } else if constexpr (std::is_same_v<T, Uniform>) {
                // antiderivative of ln|x| is x ln|x| - x, continuous through 0
                auto anti = [](double x) { return x == 0.0 ? 0.0 : x * std::log(std::abs(x)) - x; };
                return (anti(d.high) - anti(d.low)) / (d.high - d.low);
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return gaussian_expectation(d, [](double x) { return std::log(std::abs(x)); });
            } else {
                return std::log(std::abs(d.value));
            }
        },
        dist);
}

/// True when |c| > 1 has positive probability. Decided from the support so
/// that light tails such as exp(-1/mean) cannot underflow to zero.
inline bool mass_beyond_one(const DistSpec& dist) {
    return std::visit(
        [](const auto& d) -> bool {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Exponential>) return true;
            else if constexpr (std::is_same_v<T, Uniform>) return d.high > 1.0 || d.low < -1.0;
            else if constexpr (std::is_same_v<T, Gaussian>) return d.std > 0.0;
            else return std::abs(d.value) > 1.0;
        },
        dist);
}

}  // namespace detail

/// E|c|^p for the coefficient distribution.
[[nodiscard]] inline double abs_moment(const DistSpec& dist, double p) {
    return std::exp(detail::log_abs_moment(dist, p));
}

/// Solves E|c|^alpha = 1 for alpha > 0 to absolute tolerance `tol`.
/// Throws DegenerateError for point masses and NoKestenRegime when
/// E ln|c| >= 0, P(|c| > 1) = 0, or the root cannot be bracketed.
inline KestenSolution kesten_exponent(const DistSpec& dist, double tol = 1e-8) {
    validate(dist);
    if (!(tol > 0.0)) throw DomainError("kesten tolerance must be positive");
    if (std::holds_alternative<Constant>(dist) ||
        (std::holds_alternative<Gaussian>(dist) && std::get<Gaussian>(dist).std == 0.0))
        throw DegenerateError("degenerate distribution: the coefficient is constant");

    const double mean_log = detail::mean_log_abs(dist);
    if (!(mean_log < 0.0))
        throw NoKestenRegime("no Kesten regime: E[ln|c|] = " + std::to_string(mean_log) + " is not negative");
    if (!detail::mass_beyond_one(dist))
        throw NoKestenRegime("no Kesten regime: P(|c| > 1) = 0, the tail is not a power law");

    auto g = [&dist](double p) { return detail::log_abs_moment(dist, p); };

    constexpr double kMaxAlpha = 1e4;
    double hi = 1.0;
    double g_hi = g(hi);
    double lo = 0.0;
    double g_lo = 0.0;
    while (g_hi < 0.0) {
        lo = hi;
        g_lo = g_hi;
        hi *= 2.0;
        if (hi > kMaxAlpha) throw NoKestenRegime("bracketing failure: no root of E|c|^alpha = 1 below 1e4");
        g_hi = g(hi);
        if (!std::isfinite(g_hi)) throw NoKestenRegime("bracketing failure: moment overflow at alpha = " + std::to_string(hi));
    }
    if (g_hi == 0.0) return {hi, std::abs(std::expm1(g_hi)), 0};
    if (lo == 0.0) {
        // g(0) = 0 and g'(0) = E ln|c| < 0, so g is negative just above 0.
        lo = hi / 2.0;
        g_lo = g(lo);
        while (!(g_lo < 0.0)) {
            lo /= 2.0;
            if (lo < 1e-12) throw NoKestenRegime("bracketing failure: no sign change near alpha = 0");
            g_lo = g(lo);
        }
    }

    std::uintmax_t iterations = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        g, lo, hi, g_lo, g_hi, [tol](double x, double y) { return std::abs(y - x) <= tol; }, iterations);
    if (std::abs(b - a) > tol) throw NoKestenRegime("root finder did not converge to the requested tolerance");
    const double alpha = 0.5 * (a + b);
    return {alpha, std::abs(std::expm1(g(alpha))), static_cast<int>(iterations)};
}

}  // namespace volcluster
