#pragma once

// Randomized property batteries for the order-statistic inequalities the estimators rely on,
// and for scale invariance of the estimators.
//
// The property batteries draw dyadic values (integers times 2^-10, bounded) so that sums,
// negations and absolute values are exact in double precision; any violation is then a
// real counterexample, not rounding.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "latent_evi/evt.hpp"
#include "latent_evi/rng.hpp"
#include "latent_evi/simulate.hpp"

namespace latent_evi {

/// Signature of kth_largest; injectable so the batteries can be checked against faulty versions.
using OrderStatistic = std::function<double(std::span<const double>, std::size_t)>;

inline OrderStatistic default_order_statistic() {
    return [](std::span<const double> s, std::size_t m) { return kth_largest(s, m); };
}

struct Counterexample {
    std::size_t instance = 0;
    std::size_t m = 0;
    std::vector<double> first;   // a (monotone order) or x (Weyl)
    std::vector<double> second;  // b (monotone order) or eps (Weyl)
    double lhs = 0.0;
    double rhs = 0.0;

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        os << "instance " << instance << ", m = " << m << ": lhs " << lhs << " > rhs " << rhs << "\n  first  = [";
        for (std::size_t i = 0; i < first.size(); ++i) os << (i ? ", " : "") << first[i];
        os << "]\n  second = [";
        for (std::size_t i = 0; i < second.size(); ++i) os << (i ? ", " : "") << second[i];
        os << "]";
        return os.str();
    }
};

struct BatteryResult {
    std::string name;
    std::size_t instances = 0;
    std::size_t comparisons = 0;
    std::size_t violations = 0;
    std::optional<Counterexample> first_violation;

    bool passed() const { return violations == 0; }
};

struct BatteryOptions {
    std::size_t instances = 10000;
    std::size_t max_length = 24;
    std::int64_t max_units = 1 << 16;  // values lie in [-max_units, max_units] * 2^-10
    Seed seed{7};
};

namespace detail {

inline std::int64_t draw_int(StreamRng& rng, std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(rng() % span);
}

inline double dyadic(StreamRng& rng, std::int64_t lo_units, std::int64_t hi_units) {
    return std::ldexp(static_cast<double>(draw_int(rng, lo_units, hi_units)), -10);
}

inline constexpr std::uint32_t kMonotoneScope = 0x6d6f6e6f;  // "mono"
inline constexpr std::uint32_t kWeylScope = 0x7765796c;      // "weyl"
inline constexpr std::uint32_t kScaleScope = 0x7363616c;     // "scal"

}  // namespace detail

/// a_i <= b_i for all i implies kth_largest(a, m) <= kth_largest(b, m) for every m.
inline BatteryResult monotone_order_battery(const BatteryOptions& opt = {},
                                            const OrderStatistic& order = default_order_statistic()) {
    BatteryResult res;
    res.name = "monotone-order";
    for (std::size_t t = 0; t < opt.instances; ++t) {
        StreamRng rng(opt.seed.substream(detail::kMonotoneScope, static_cast<std::uint32_t>(t), 0));
        const auto n = static_cast<std::size_t>(detail::draw_int(rng, 1, static_cast<std::int64_t>(opt.max_length)));
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = detail::dyadic(rng, -opt.max_units, opt.max_units);
            // Roughly a quarter of coordinates tie exactly.
            b[i] = detail::draw_int(rng, 0, 3) == 0 ? a[i] : a[i] + detail::dyadic(rng, 0, opt.max_units);
        }
        ++res.instances;
        for (std::size_t m = 1; m <= n; ++m) {
            ++res.comparisons;
            const double lhs = order(a, m), rhs = order(b, m);
            if (!(lhs <= rhs)) {
                if (!res.first_violation) res.first_violation = Counterexample{t, m, a, b, lhs, rhs};
                ++res.violations;
            }
        }
    }
    return res;
}

/// |kth_largest(|x + eps|, m) - kth_largest(|x|, m)| <= max_i |eps_i| for every m.
inline BatteryResult weyl_battery(const BatteryOptions& opt = {},
                                  const OrderStatistic& order = default_order_statistic()) {
    BatteryResult res;
    res.name = "weyl";
    for (std::size_t t = 0; t < opt.instances; ++t) {
        StreamRng rng(opt.seed.substream(detail::kWeylScope, static_cast<std::uint32_t>(t), 0));
        const auto n = static_cast<std::size_t>(detail::draw_int(rng, 1, static_cast<std::int64_t>(opt.max_length)));
        // Perturbation scale varies from tiny to as large as the data.
        const auto eps_units = std::int64_t{1} << detail::draw_int(rng, 0, 16);
        std::vector<double> x(n), eps(n), ax(n), axe(n);
        double bound = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = detail::dyadic(rng, -opt.max_units, opt.max_units);
            eps[i] = detail::dyadic(rng, -eps_units, eps_units);
            ax[i] = std::abs(x[i]);
            axe[i] = std::abs(x[i] + eps[i]);
            bound = std::max(bound, std::abs(eps[i]));
        }
        ++res.instances;
        for (std::size_t m = 1; m <= n; ++m) {
            ++res.comparisons;
            const double lhs = std::abs(order(axe, m) - order(ax, m));
            if (!(lhs <= bound)) {
                if (!res.first_violation) res.first_violation = Counterexample{t, m, x, eps, lhs, bound};
                ++res.violations;
            }
        }
    }
    return res;
}

struct ScaleInvarianceResult {
    std::size_t samples = 0;
    std::size_t skipped = 0;  // degenerate draws (none expected for continuous samples)
    double max_abs_diff_hill = 0.0;
    double max_abs_diff_moment = 0.0;
    double tolerance = 1e-12;

    bool passed() const { return max_abs_diff_hill <= tolerance && max_abs_diff_moment <= tolerance; }
};

/// hill(c y) == hill(y) and moment(c y) == moment(y) on random Pareto-type samples and random c > 0.
inline ScaleInvarianceResult scale_invariance_battery(std::size_t samples = 1000, Seed seed = Seed{11},
                                                      double tolerance = 1e-12) {
    ScaleInvarianceResult res;
    res.tolerance = tolerance;
    for (std::size_t t = 0; t < samples; ++t) {
        const auto stream = seed.substream(detail::kScaleScope, static_cast<std::uint32_t>(t), 0);
        StreamRng rng(seed.substream(detail::kScaleScope, static_cast<std::uint32_t>(t), 1));
        const auto n = static_cast<std::size_t>(detail::draw_int(rng, 20, 2000));
        const double alpha = 0.5 + 20.0 * rng.uniform();
        const double c = std::exp(std::log(1e-6) + std::log(1e12) * rng.uniform());
        const auto y = pareto_sample(alpha, n, stream);
        std::vector<double> cy(n);
        for (std::size_t i = 0; i < n; ++i) cy[i] = c * y[i];
        const auto spec = TailSpec::square_root();
        ++res.samples;
        const auto h0 = try_estimate(EviMethod::hill, y, spec), h1 = try_estimate(EviMethod::hill, cy, spec);
        const auto m0 = try_estimate(EviMethod::moment, y, spec), m1 = try_estimate(EviMethod::moment, cy, spec);
        if (h0.has_value() != h1.has_value() || m0.has_value() != m1.has_value()) {
            res.max_abs_diff_hill = std::numeric_limits<double>::infinity();
            continue;
        }
        if (!h0 || !m0) {
            ++res.skipped;
            continue;
        }
        res.max_abs_diff_hill = std::max(res.max_abs_diff_hill, std::abs(h0->gamma_hat - h1->gamma_hat));
        res.max_abs_diff_moment = std::max(res.max_abs_diff_moment, std::abs(m0->gamma_hat - m1->gamma_hat));
    }
    return res;
}

}  // namespace latent_evi
