#pragma once

// Reproducible random draws for every shock process of the market models.
//
// Generator (version 1): draw k of stream s under root seed r is the first two
// 32-bit words of Philox4x32-10 evaluated at key = (lo32(r), hi32(r)) and
// counter = (lo32(k), hi32(k), lo32(s), hi32(s)), packed little-end first into
// a 64-bit word. Streams with different indices therefore read disjoint
// counter ranges. Non-uniform variates go through the platform libm
// (log, log1p, sqrt, cos).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <variant>

#include "volcluster/error.hpp"

namespace volcluster {

inline constexpr int kGeneratorVersion = 1;

namespace detail {

inline constexpr std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                             std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

}  // namespace detail

/// One independent, exclusively owned sequence of 64-bit draws.
class SeedStream {
public:
    constexpr SeedStream(std::uint64_t root_seed, std::uint64_t stream_index) noexcept
        : root_seed_(root_seed), stream_index_(stream_index) {}

    [[nodiscard]] constexpr std::uint64_t root_seed() const noexcept { return root_seed_; }
    [[nodiscard]] constexpr std::uint64_t stream_index() const noexcept { return stream_index_; }
    [[nodiscard]] constexpr std::uint64_t position() const noexcept { return position_; }

    constexpr std::uint64_t next_u64() noexcept {
        const auto out = detail::philox4x32_10(
            {static_cast<std::uint32_t>(position_), static_cast<std::uint32_t>(position_ >> 32),
             static_cast<std::uint32_t>(stream_index_),
             static_cast<std::uint32_t>(stream_index_ >> 32)},
            {static_cast<std::uint32_t>(root_seed_), static_cast<std::uint32_t>(root_seed_ >> 32)});
        ++position_;
        return std::uint64_t{out[0]} | (std::uint64_t{out[1]} << 32);
    }

    /// Uniform on [0, 1) with 53 random bits.
    constexpr double next_uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t root_seed_;
    std::uint64_t stream_index_;
    std::uint64_t position_ = 0;
};

[[nodiscard]] constexpr SeedStream derive_stream(std::uint64_t root_seed,
                                                 std::uint64_t stream_index) noexcept {
    return SeedStream(root_seed, stream_index);
}

struct Exponential {
    double mean = 1.0;
    bool operator==(const Exponential&) const = default;
};

struct Gaussian {
    double mean = 0.0;
    double std = 1.0;
    bool operator==(const Gaussian&) const = default;
};

struct Uniform {
    double low = 0.0;
    double high = 1.0;
    bool operator==(const Uniform&) const = default;
};

struct Constant {
    double value = 0.0;
    bool operator==(const Constant&) const = default;
};

using DistSpec = std::variant<Exponential, Gaussian, Uniform, Constant>;

[[nodiscard]] inline const char* kind_name(const DistSpec& dist) {
    constexpr const char* names[] = {"exponential", "gaussian", "uniform", "constant"};
    return names[dist.index()];
}

/// Throws ConfigError when the parameters violate the distribution's invariants.
inline void validate(const DistSpec& dist) {
    std::visit(
        [](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                if (!(d.mean > 0.0) || !std::isfinite(d.mean))
                    throw ConfigError("exponential mean must be a positive finite number");
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                if (!std::isfinite(d.mean)) throw ConfigError("gaussian mean must be finite");
                if (!(d.std >= 0.0) || !std::isfinite(d.std))
                    throw ConfigError("gaussian std must be a nonnegative finite number");
            } else if constexpr (std::is_same_v<T, Uniform>) {
                if (!std::isfinite(d.low) || !std::isfinite(d.high) || !(d.low < d.high))
                    throw ConfigError("uniform requires finite low < high");
            } else {
                if (!std::isfinite(d.value)) throw ConfigError("constant value must be finite");
            }
        },
        dist);
}

/// True when every draw of `dist` is guaranteed to be >= 0.
[[nodiscard]] inline bool nonnegative_support(const DistSpec& dist) {
    return std::visit(
        [](const auto& d) -> bool {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Exponential>) return true;
            else if constexpr (std::is_same_v<T, Gaussian>) return d.std == 0.0 && d.mean >= 0.0;
            else if constexpr (std::is_same_v<T, Uniform>) return d.low >= 0.0;
            else return d.value >= 0.0;
        },
        dist);
}

/// Next variate of `dist` from `stream`. Exponential and uniform consume one
/// word, gaussian two (Box-Muller, cosine branch), constant none.
/// Throws ConfigError for invalid parameters.
inline double draw(const DistSpec& dist, SeedStream& stream) {
    validate(dist);
    return std::visit(
        [&stream](const auto& d) -> double {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return -d.mean * std::log1p(-stream.next_uniform());
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                const double u1 = 1.0 - stream.next_uniform();  // (0, 1]
                const double u2 = stream.next_uniform();
                const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
                return d.mean + d.std * z;
            } else if constexpr (std::is_same_v<T, Uniform>) {
                return d.low + (d.high - d.low) * stream.next_uniform();
            } else {
                return d.value;
            }
        },
        dist);
}

/// News arrival for the two trader channels. With common_news the channel-I
/// indicator serves both channels and prob_i must equal prob_j.
struct NewsSpec {
    double prob_i = 0.0;
    double prob_j = 0.0;
    DistSpec eps = Gaussian{0.0, 1.0};
    DistSpec nu = Gaussian{0.0, 1.0};
    bool common_news = false;

    bool operator==(const NewsSpec&) const = default;
};

inline void validate(const NewsSpec& news) {
    auto check_prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0))
            throw ConfigError(std::string(name) + " must lie in [0, 1]");
    };
    check_prob(news.prob_i, "prob_i");
    check_prob(news.prob_j, "prob_j");
    if (news.common_news && news.prob_i != news.prob_j)
        throw ConfigError("common_news requires prob_i == prob_j");
    validate(news.eps);
    validate(news.nu);
}

struct NewsDraw {
    bool indicator_i = false;
    bool indicator_j = false;
    double eps = 0.0;
    double nu = 0.0;
};

/// One step of news. Each channel always consumes one indicator word and one
/// shock, whether or not the news fires, so runs that differ only in
/// probabilities stay aligned draw for draw.
inline NewsDraw draw_news(const NewsSpec& news, SeedStream& stream_i, SeedStream& stream_j) {
    NewsDraw out;
    const double u_i = stream_i.next_uniform();
    const double u_j = stream_j.next_uniform();
    out.indicator_i = u_i < news.prob_i;
    out.indicator_j = news.common_news ? out.indicator_i : u_j < news.prob_j;
    out.eps = draw(news.eps, stream_i);
    out.nu = draw(news.nu, stream_j);
    return out;
}

/// Information carried by an event of probability p, in nats.
[[nodiscard]] inline double info_content(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("info_content requires 0 < p <= 1");
    return p == 1.0 ? 0.0 : -std::log(p);
}

}  // namespace volcluster
