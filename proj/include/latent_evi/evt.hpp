#pragma once

// Extreme value index estimation from the upper order statistics of a sample.
//
// Order statistics follow the convention y_(1,n) <= ... <= y_(n,n), so index n is
// the maximum and the Hill/moment threshold is y_(n-k,n). Internally samples are
// sorted ascending (or partially, via nth_element) and the 1-based index m maps to
// position m-1.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "latent_evi/errors.hpp"

namespace latent_evi {

enum class EviMethod { hill, moment };

inline std::string_view to_string(EviMethod m) { return m == EviMethod::hill ? "hill" : "moment"; }

inline EviMethod parse_evi_method(std::string_view s) {
    if (s == "hill") return EviMethod::hill;
    if (s == "moment") return EviMethod::moment;
    throw InvalidArgument("unknown estimator '" + std::string(s) + "' (expected hill or moment)");
}

/// Rule producing the number k_n of upper order statistics used by the estimators.
struct TailSpec {
    enum class Rule { fixed, power, sqrt, log };

    Rule rule = Rule::sqrt;
    std::size_t k = 0;   // fixed
    double alpha = 0.0;  // power: floor(n^alpha)

    static TailSpec fixed(std::size_t k) { return {Rule::fixed, k, 0.0}; }
    static TailSpec power(double alpha) {
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("power threshold exponent must lie in (0,1)");
        return {Rule::power, 0, alpha};
    }
    static TailSpec square_root() { return {Rule::sqrt, 0, 0.0}; }
    static TailSpec logarithmic() { return {Rule::log, 0, 0.0}; }

    /// Growth exponent of k_n in n (0 for fixed and log rules).
    double exponent() const {
        switch (rule) {
            case Rule::power: return alpha;
            case Rule::sqrt: return 0.5;
            default: return 0.0;
        }
    }

    friend bool operator==(const TailSpec&, const TailSpec&) = default;
};

/// Parses "fixed:16", "power:0.25", "sqrt" or "log".
inline TailSpec parse_tail_spec(std::string_view text) {
    auto colon = text.find(':');
    std::string_view head = text.substr(0, colon);
    std::string arg = colon == std::string_view::npos ? std::string() : std::string(text.substr(colon + 1));
    try {
        if (head == "sqrt" && arg.empty()) return TailSpec::square_root();
        if (head == "log" && arg.empty()) return TailSpec::logarithmic();
        if (head == "fixed" && !arg.empty()) {
            std::size_t used = 0;
            long long k = std::stoll(arg, &used);
            if (used != arg.size() || k < 1) throw InvalidArgument("bad k");
            return TailSpec::fixed(static_cast<std::size_t>(k));
        }
        if (head == "power" && !arg.empty()) {
            std::size_t used = 0;
            double a = std::stod(arg, &used);
            if (used != arg.size()) throw InvalidArgument("bad exponent");
            return TailSpec::power(a);
        }
    } catch (const std::exception&) {
    }
    throw InvalidArgument("invalid tail rule '" + std::string(text) + "' (expected fixed:K, power:A, sqrt or log)");
}

inline std::string to_string(const TailSpec& spec) {
    switch (spec.rule) {
        case TailSpec::Rule::fixed: return "fixed:" + std::to_string(spec.k);
        case TailSpec::Rule::power: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "power:%.17g", spec.alpha);
            return buf;
        }
        case TailSpec::Rule::sqrt: return "sqrt";
        case TailSpec::Rule::log: return "log";
    }
    return {};
}

struct ResolvedThreshold {
    std::size_t k = 1;
    bool clamped = false;
};

namespace detail {

// floor(x) that does not lose an exact integer to a pow() rounding error.
inline double robust_floor(double x) {
    double r = std::round(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(r))) return r;
    return std::floor(x);
}

inline std::size_t isqrt(std::size_t n) {
    auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

}  // namespace detail

/// k_n for a sample of size n, clamped to [1, n-1]; `clamped` reports whether clamping applied.
inline ResolvedThreshold resolve_threshold_checked(const TailSpec& spec, std::size_t n) {
    if (n < 2) throw InvalidArgument("threshold needs n >= 2");
    double raw = 0.0;
    switch (spec.rule) {
        case TailSpec::Rule::fixed: raw = static_cast<double>(spec.k); break;
        case TailSpec::Rule::power: raw = detail::robust_floor(std::pow(static_cast<double>(n), spec.alpha)); break;
        case TailSpec::Rule::sqrt: raw = static_cast<double>(detail::isqrt(n)); break;
        case TailSpec::Rule::log: raw = detail::robust_floor(std::log(static_cast<double>(n))); break;
    }
    const double hi = static_cast<double>(n - 1);
    ResolvedThreshold out;
    if (raw < 1.0) {
        out = {1, true};
    } else if (raw > hi) {
        out = {n - 1, true};
    } else {
        out = {static_cast<std::size_t>(raw), false};
    }
    return out;
}

inline std::size_t resolve_threshold(const TailSpec& spec, std::size_t n) { return resolve_threshold_checked(spec, n).k; }

struct EviEstimate {
    EviMethod method = EviMethod::hill;
    double gamma_hat = 0.0;
    std::size_t k_n = 0;
    std::size_t n = 0;
    bool k_clamped = false;
};

/// y_(m,n): the m-th smallest value, 1 <= m <= n (m = n is the maximum).
inline double kth_largest(std::span<const double> sample, std::size_t m) {
    if (m < 1 || m > sample.size()) {
        throw InvalidArgument("order statistic index " + std::to_string(m) + " outside [1, " +
                              std::to_string(sample.size()) + "]");
    }
    std::vector<double> v(sample.begin(), sample.end());
    auto nth = v.begin() + static_cast<std::ptrdiff_t>(m - 1);
    std::nth_element(v.begin(), nth, v.end());
    return *nth;
}

inline std::vector<double> abs_values(std::span<const double> sample) {
    std::vector<double> out(sample.size());
    std::transform(sample.begin(), sample.end(), out.begin(), [](double x) { return std::abs(x); });
    return out;
}

/// The first two tail log-moments M^(1), M^(2) for a given k_n.
struct TailLogMoments {
    double m1 = 0.0;
    double m2 = 0.0;
    double threshold = 0.0;
};

namespace detail {

inline void check_sample_and_k(std::span<const double> sample, std::size_t k_n) {
    if (sample.size() < 2) throw InvalidArgument("sample needs at least 2 values");
    if (k_n < 1 || k_n > sample.size() - 1) {
        throw InvalidArgument("k_n = " + std::to_string(k_n) + " outside [1, n-1] for n = " +
                              std::to_string(sample.size()));
    }
}

// Partially orders a copy so that position n-k-1 holds y_(n-k,n) and the k values above it follow.
inline std::vector<double> upper_tail(std::span<const double> sample, std::size_t k_n, double& threshold) {
    std::vector<double> v(sample.begin(), sample.end());
    const auto pos = static_cast<std::ptrdiff_t>(v.size() - k_n - 1);
    std::nth_element(v.begin(), v.begin() + pos, v.end());
    threshold = v[static_cast<std::size_t>(pos)];
    if (!(threshold > 0.0)) throw PointMassAtZero(threshold);
    return {v.begin() + pos + 1, v.end()};
}

}  // namespace detail

inline TailLogMoments tail_log_moments(std::span<const double> sample, std::size_t k_n) {
    detail::check_sample_and_k(sample, k_n);
    TailLogMoments out;
    auto top = detail::upper_tail(sample, k_n, out.threshold);
    // log of the ratio, not a difference of logs: the error stays at a few ulps whatever the scale.
    for (double y : top) {
        const double l = std::log(y / out.threshold);
        out.m1 += l;
        out.m2 += l * l;
    }
    out.m1 /= static_cast<double>(k_n);
    out.m2 /= static_cast<double>(k_n);
    return out;
}

/// M_n^(j) = (1/k) sum_{m=0}^{k-1} [log(y_(n-m,n) / y_(n-k,n))]^j.
inline double log_moment(std::span<const double> sample, std::size_t k_n, int j) {
    if (j < 1) throw InvalidArgument("log-moment order j must be >= 1");
    detail::check_sample_and_k(sample, k_n);
    double threshold = 0.0;
    auto top = detail::upper_tail(sample, k_n, threshold);
    double sum = 0.0;
    for (double y : top) sum += std::pow(std::log(y / threshold), j);
    return sum / static_cast<double>(k_n);
}

inline EviEstimate hill(std::span<const double> sample, const TailSpec& spec) {
    if (sample.size() < 2) throw InvalidArgument("sample needs at least 2 values");
    const auto thr = resolve_threshold_checked(spec, sample.size());
    const auto lm = tail_log_moments(sample, thr.k);
    return {EviMethod::hill, lm.m1, thr.k, sample.size(), thr.clamped};
}

/// Moment estimator from precomputed log-moments; throws DegenerateTail when undefined.
inline double moment_from_log_moments(const TailLogMoments& lm) {
    if (!(lm.m2 > 0.0)) throw DegenerateTail("second tail log-moment is zero (all tail ratios equal 1)");
    // M1^2 <= M2 always; a ratio within rounding of 1 means all tail log-ratios coincide.
    const double denom = 1.0 - lm.m1 * lm.m1 / lm.m2;
    if (denom <= 4.0 * DBL_EPSILON) throw DegenerateTail("1 - M1^2/M2 vanishes (all tail log-ratios equal)");
    return lm.m1 + 1.0 - 0.5 / denom;
}

inline EviEstimate moment(std::span<const double> sample, const TailSpec& spec) {
    if (sample.size() < 2) throw InvalidArgument("sample needs at least 2 values");
    const auto thr = resolve_threshold_checked(spec, sample.size());
    const auto lm = tail_log_moments(sample, thr.k);
    return {EviMethod::moment, moment_from_log_moments(lm), thr.k, sample.size(), thr.clamped};
}

inline EviEstimate estimate(EviMethod method, std::span<const double> sample, const TailSpec& spec) {
    return method == EviMethod::hill ? hill(sample, spec) : moment(sample, spec);
}

/// Like estimate(), but maps the data-dependent failures (PointMassAtZero, DegenerateTail) to nullopt.
inline std::optional<EviEstimate> try_estimate(EviMethod method, std::span<const double> sample,
                                               const TailSpec& spec) {
    try {
        return estimate(method, sample, spec);
    } catch (const PointMassAtZero&) {
        return std::nullopt;
    } catch (const DegenerateTail&) {
        return std::nullopt;
    }
}

}  // namespace latent_evi
