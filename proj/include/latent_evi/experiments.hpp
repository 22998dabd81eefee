#pragma once

// Monte Carlo studies of extreme value index estimation on unmixed latent series.
//
// One replication: generate the latent matrix Z, center it, mix X = Z Omega^T, unmix,
// then estimate the extreme value index of |z^k| and |z_hat^k| for every component
// and keep the largest estimate on each side. A study repeats this over a grid of
// sample sizes and summarizes the differences.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "latent_evi/bss.hpp"
#include "latent_evi/errors.hpp"
#include "latent_evi/evt.hpp"
#include "latent_evi/rng.hpp"
#include "latent_evi/simulate.hpp"

namespace latent_evi {

struct MixingSpec {
    enum class Kind { uniform, identity };

    Kind kind = Kind::uniform;
    double lo = -100.0;
    double hi = 100.0;
    double max_condition = 1e6;

    friend bool operator==(const MixingSpec&, const MixingSpec&) = default;
};

struct HistogramSpec {
    double lo = -2.0;
    double hi = 2.0;
    double width = 0.05;

    std::size_t bins() const { return static_cast<std::size_t>(std::llround((hi - lo) / width)); }

    friend bool operator==(const HistogramSpec&, const HistogramSpec&) = default;
};

/// Theoretical inputs of the rate conditions: the heaviest latent index and the unmixing rate exponent.
struct RateInputs {
    double gamma_max = 0.0;
    double c_exponent = 0.5;

    friend bool operator==(const RateInputs&, const RateInputs&) = default;
};

struct ScenarioSpec {
    std::string name;
    std::vector<GeneratorSpec> components;
    UnmixerSpec unmixer = UnmixerSpec::fobi();
    std::vector<std::size_t> sample_sizes;
    std::size_t replications = 200;
    TailSpec tail = TailSpec::power(0.25);
    std::vector<EviMethod> estimators{EviMethod::hill, EviMethod::moment};
    Seed seed{20210401};
    MixingSpec mixing;
    HistogramSpec histogram;
    double agreement_eps = 0.05;
    std::optional<RateInputs> rate;

    std::string component_label(std::size_t k) const {
        const auto& l = components.at(k).label;
        return l.empty() ? "z" + std::to_string(k + 1) : l;
    }

    void validate() const {
        if (components.empty()) throw InvalidArgument("scenario needs at least one component");
        for (const auto& c : components) c.validate();
        if (replications < 1) throw InvalidArgument("replications must be >= 1");
        if (estimators.empty()) throw InvalidArgument("scenario needs at least one estimator");
        const std::size_t p = components.size();
        for (auto n : sample_sizes) {
            if (n < 4 * p) throw InvalidArgument("sample size " + std::to_string(n) + " is below 4p");
            if (n > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("sample size too large");
        }
        std::set<std::string> labels;
        std::set<std::uint32_t> hashes{mixing_stream_word()};
        for (std::size_t k = 0; k < p; ++k) {
            auto label = component_label(k);
            if (!labels.insert(label).second) throw InvalidArgument("duplicate component label '" + label + "'");
            if (!hashes.insert(label_hash(label)).second)
                throw InvalidArgument("component label '" + label + "' collides with another stream");
        }
        if (mixing.kind == MixingSpec::Kind::uniform) {
            if (!(mixing.lo < mixing.hi)) throw InvalidArgument("mixing range needs lo < hi");
            if (!(mixing.max_condition > 1.0)) throw InvalidArgument("mixing max_condition must exceed 1");
        }
        if (!(histogram.width > 0.0) || !(histogram.lo < histogram.hi))
            throw InvalidArgument("histogram needs lo < hi and width > 0");
        if (!(agreement_eps > 0.0)) throw InvalidArgument("agreement_eps must be > 0");
        if (unmixer.kind == UnmixerSpec::Kind::sobi) {
            if (unmixer.lags.lags.empty()) throw InvalidArgument("sobi needs lags");
        }
        if (rate && (!(rate->gamma_max >= 0.0) || !(rate->c_exponent > 0.0)))
            throw InvalidArgument("rate inputs need gamma_max >= 0 and c_exponent > 0");
    }

    static std::uint32_t mixing_stream_word() { return label_hash("#mixing"); }

    /// Stream of component k at sample size n, replicate r: keyed by the component label.
    Stream component_stream(std::size_t n, std::size_t r, std::size_t k) const {
        return seed.substream(static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(r),
                              label_hash(component_label(k)));
    }
    Stream mixing_stream(std::size_t n, std::size_t r) const {
        return seed.substream(static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(r), mixing_stream_word());
    }
};

struct EstimatorRecord {
    EviMethod method = EviMethod::hill;
    std::vector<std::optional<double>> on_true;       // gamma_hat(|z^k|)
    std::vector<std::optional<double>> on_estimated;  // gamma_hat(|z_hat^k|)
    std::optional<double> max_true;
    std::optional<double> max_estimated;
};

struct ReplicationRecord {
    std::size_t n = 0;
    std::size_t replicate = 0;
    std::size_t k_n = 0;
    std::vector<EstimatorRecord> estimates;  // one per scenario estimator, same order
    bool unmixer_ok = true;
    std::string unmixer_error;
    bool converged = true;
    bool degenerate_spectrum = false;
    double md_index = std::numeric_limits<double>::quiet_NaN();
    int mixing_draws = 0;
};

namespace detail {

inline std::optional<double> max_present(const std::vector<std::optional<double>>& v) {
    std::optional<double> best;
    for (const auto& x : v)
        if (x && (!best || *x > *best)) best = x;
    return best;
}

inline std::vector<std::optional<double>> per_component(EviMethod method, const Matrix& m, const TailSpec& tail) {
    std::vector<std::optional<double>> out;
    out.reserve(static_cast<std::size_t>(m.cols()));
    std::vector<double> col(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) col[static_cast<std::size_t>(i)] = std::abs(m(i, k));
        auto e = try_estimate(method, col, tail);
        out.push_back(e ? std::optional<double>(e->gamma_hat) : std::nullopt);
    }
    return out;
}

}  // namespace detail

/// Latent matrix (n x p, uncentered) of replicate r.
inline Matrix generate_latent(const ScenarioSpec& spec, std::size_t n, std::size_t r) {
    const auto p = static_cast<Eigen::Index>(spec.components.size());
    Matrix z(static_cast<Eigen::Index>(n), p);
    for (Eigen::Index k = 0; k < p; ++k) {
        auto col = generate(spec.components[static_cast<std::size_t>(k)], n,
                            spec.component_stream(n, r, static_cast<std::size_t>(k)));
        z.col(k) = Eigen::Map<const Vector>(col.data(), static_cast<Eigen::Index>(n));
    }
    return z;
}

inline MixingMatrix draw_mixing(const ScenarioSpec& spec, std::size_t n, std::size_t r) {
    const auto p = spec.components.size();
    if (spec.mixing.kind == MixingSpec::Kind::identity) {
        const auto pi = static_cast<Eigen::Index>(p);
        return {Matrix::Identity(pi, pi), 0, 1.0};
    }
    return random_mixing_matrix(p, spec.mixing.lo, spec.mixing.hi, spec.mixing_stream(n, r), spec.mixing.max_condition);
}

/// One replication; a deterministic function of (spec, n, r).
inline ReplicationRecord run_replication(const ScenarioSpec& spec, std::size_t n, std::size_t r) {
    ReplicationRecord rec;
    rec.n = n;
    rec.replicate = r;
    rec.k_n = resolve_threshold(spec.tail, n);

    const Matrix z = center(generate_latent(spec, n, r)).data;
    const auto mix = draw_mixing(spec, n, r);
    rec.mixing_draws = mix.draws;
    const Matrix x = z * mix.omega.transpose();

    Matrix z_hat;
    try {
        const auto res = run_unmixer(x, spec.unmixer);
        rec.converged = res.converged;
        rec.degenerate_spectrum = res.degenerate_spectrum;
        z_hat = unmix(x, res);
        rec.md_index = align_components(res.gamma_hat, mix.omega).md_index;
    } catch (const Error& e) {
        rec.unmixer_ok = false;
        rec.unmixer_error = e.what();
    }

    for (auto method : spec.estimators) {
        EstimatorRecord est;
        est.method = method;
        est.on_true = detail::per_component(method, z, spec.tail);
        if (rec.unmixer_ok) {
            est.on_estimated = detail::per_component(method, z_hat, spec.tail);
        } else {
            est.on_estimated.assign(spec.components.size(), std::nullopt);
        }
        est.max_true = detail::max_present(est.on_true);
        est.max_estimated = detail::max_present(est.on_estimated);
        rec.estimates.push_back(std::move(est));
    }
    return rec;
}

/// Runs replicates 0..R-1 at size n on `threads` workers. Output is ordered by replicate,
/// so the result does not depend on the number of threads.
inline std::vector<ReplicationRecord> run_replications(const ScenarioSpec& spec, std::size_t n,
                                                       unsigned threads = 1) {
    std::vector<ReplicationRecord> out(spec.replications);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (std::size_t r; (r = next.fetch_add(1)) < out.size();) {
            if (failed) return;
            try {
                out[r] = run_replication(spec, n, r);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
                return;
            }
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(out.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

/// Sample quantile with linear interpolation between order statistics (Hyndman-Fan type 7).
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Histogram {
    double lo = -2.0;
    double width = 0.05;
    std::vector<std::size_t> counts_true;
    std::vector<std::size_t> counts_estimated;
    std::size_t below_true = 0, below_estimated = 0;
    std::size_t above_true = 0, above_estimated = 0;

    /// Fraction of mass shared by the two histograms (out-of-range tallies count as bins).
    double overlap() const {
        std::size_t shared = std::min(below_true, below_estimated) + std::min(above_true, above_estimated);
        std::size_t tot_t = below_true + above_true, tot_e = below_estimated + above_estimated;
        for (std::size_t b = 0; b < counts_true.size(); ++b) {
            shared += std::min(counts_true[b], counts_estimated[b]);
            tot_t += counts_true[b];
            tot_e += counts_estimated[b];
        }
        const auto tot = std::max(tot_t, tot_e);
        return tot == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(shared) / static_cast<double>(tot);
    }

    /// Left edge of the fullest in-range bin of the given side.
    double mode(bool estimated) const {
        const auto& c = estimated ? counts_estimated : counts_true;
        auto it = std::max_element(c.begin(), c.end());
        return lo + width * static_cast<double>(it - c.begin());
    }

    friend bool operator==(const Histogram&, const Histogram&) = default;
};

inline Histogram make_histogram(const HistogramSpec& spec, const std::vector<double>& on_true,
                                const std::vector<double>& on_estimated) {
    Histogram h;
    h.lo = spec.lo;
    h.width = spec.width;
    const auto bins = spec.bins();
    h.counts_true.assign(bins, 0);
    h.counts_estimated.assign(bins, 0);
    auto add = [&](double v, std::vector<std::size_t>& counts, std::size_t& below, std::size_t& above) {
        if (v < spec.lo) {
            ++below;
            return;
        }
        if (v > spec.hi) {
            ++above;
            return;
        }
        auto b = static_cast<std::size_t>(std::floor((v - spec.lo) / spec.width));
        counts[std::min(b, bins - 1)]++;
    };
    for (double v : on_true) add(v, h.counts_true, h.below_true, h.above_true);
    for (double v : on_estimated) add(v, h.counts_estimated, h.below_estimated, h.above_estimated);
    return h;
}

/// Summary of one (sample size, estimator) cell.
struct CellSummary {
    std::size_t n = 0;
    EviMethod method = EviMethod::hill;
    std::size_t k_n = 0;
    std::size_t replications = 0;
    std::size_t paired = 0;  // replicates with both max-estimates present
    std::size_t missing_true = 0;
    std::size_t missing_estimated = 0;
    std::size_t unmixer_failures = 0;
    double q1 = std::numeric_limits<double>::quiet_NaN();      // quartiles of sqrt(k_n)|diff|
    double median = std::numeric_limits<double>::quiet_NaN();
    double q3 = std::numeric_limits<double>::quiet_NaN();
    double agreement_eps = 0.05;
    double agreement_fraction = std::numeric_limits<double>::quiet_NaN();  // share of all replicates with |diff| < eps
    double overlap = std::numeric_limits<double>::quiet_NaN();
    double mean_true = std::numeric_limits<double>::quiet_NaN();
    double mean_estimated = std::numeric_limits<double>::quiet_NaN();
    double median_md_index = std::numeric_limits<double>::quiet_NaN();
    Histogram histogram;
};

struct StudySummary {
    std::string scenario;
    std::vector<CellSummary> cells;

    const CellSummary* find(std::size_t n, EviMethod m) const {
        for (const auto& c : cells)
            if (c.n == n && c.method == m) return &c;
        return nullptr;
    }
};

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Aggregates the records of one sample size into one cell per estimator.
inline std::vector<CellSummary> summarize(const ScenarioSpec& spec, std::size_t n,
                                          const std::vector<ReplicationRecord>& records) {
    std::vector<CellSummary> cells;
    std::vector<double> md;
    std::size_t failures = 0;
    for (const auto& rec : records) {
        if (!std::isnan(rec.md_index)) md.push_back(rec.md_index);
        if (!rec.unmixer_ok) ++failures;
    }
    const double med_md = quantile(md, 0.5);
    for (std::size_t e = 0; e < spec.estimators.size(); ++e) {
        CellSummary c;
        c.n = n;
        c.method = spec.estimators[e];
        c.k_n = resolve_threshold(spec.tail, n);
        c.replications = records.size();
        c.unmixer_failures = failures;
        c.agreement_eps = spec.agreement_eps;
        c.median_md_index = med_md;
        std::vector<double> on_true, on_est, scaled;
        std::size_t agree = 0;
        const double root_k = std::sqrt(static_cast<double>(c.k_n));
        for (const auto& rec : records) {
            const auto& est = rec.estimates.at(e);
            if (est.max_true) on_true.push_back(*est.max_true); else ++c.missing_true;
            if (est.max_estimated) on_est.push_back(*est.max_estimated); else ++c.missing_estimated;
            if (est.max_true && est.max_estimated) {
                const double d = std::abs(*est.max_true - *est.max_estimated);
                scaled.push_back(root_k * d);
                if (d < spec.agreement_eps) ++agree;
            }
        }
        c.paired = scaled.size();
        c.q1 = quantile(scaled, 0.25);
        c.median = quantile(scaled, 0.5);
        c.q3 = quantile(scaled, 0.75);
        if (c.replications > 0) c.agreement_fraction = static_cast<double>(agree) / static_cast<double>(c.replications);
        c.mean_true = mean_of(on_true);
        c.mean_estimated = mean_of(on_est);
        c.histogram = make_histogram(spec.histogram, on_true, on_est);
        c.overlap = c.histogram.overlap();
        cells.push_back(std::move(c));
    }
    return cells;
}

inline StudySummary run_study(const ScenarioSpec& spec, unsigned threads = 1) {
    spec.validate();
    StudySummary s;
    s.scenario = spec.name;
    for (auto n : spec.sample_sizes) {
        auto cells = summarize(spec, n, run_replications(spec, n, threads));
        for (auto& c : cells) s.cells.push_back(std::move(c));
    }
    return s;
}

/// The ratios max_l g_nl / c_n and sqrt(k_n) max_l g_nl / c_n over a size grid, with
/// max_l g_nl = n^gamma_max and c_n = n^c_exponent.
struct RateDiagnostic {
    double gamma_max = 0.0;
    double c_exponent = 0.0;
    TailSpec tail;
    std::vector<std::size_t> n;
    std::vector<std::size_t> k_n;
    std::vector<double> consistency_ratio;
    std::vector<double> normality_ratio;
    bool consistency = false;
    bool normality = false;
};

namespace detail {

inline bool decreasing_below_one(const std::vector<double>& r) {
    if (r.empty()) return false;
    for (std::size_t i = 1; i < r.size(); ++i)
        if (!(r[i] < r[i - 1])) return false;
    return r.back() < 1.0;
}

}  // namespace detail

inline RateDiagnostic rate_diagnostic(const ScenarioSpec& spec, double gamma_max, double c_exponent) {
    if (!(gamma_max >= 0.0) || !(c_exponent > 0.0))
        throw InvalidArgument("rate diagnostic needs gamma_max >= 0 and c_exponent > 0");
    RateDiagnostic d;
    d.gamma_max = gamma_max;
    d.c_exponent = c_exponent;
    d.tail = spec.tail;
    d.n = spec.sample_sizes;
    std::sort(d.n.begin(), d.n.end());
    d.n.erase(std::unique(d.n.begin(), d.n.end()), d.n.end());
    for (auto n : d.n) {
        const auto k = resolve_threshold(spec.tail, n);
        const double ratio = std::pow(static_cast<double>(n), gamma_max - c_exponent);
        d.k_n.push_back(k);
        d.consistency_ratio.push_back(ratio);
        d.normality_ratio.push_back(std::sqrt(static_cast<double>(k)) * ratio);
    }
    d.consistency = detail::decreasing_below_one(d.consistency_ratio);
    d.normality = detail::decreasing_below_one(d.normality_ratio);
    return d;
}

}  // namespace latent_evi
