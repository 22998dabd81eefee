#pragma once

// Latent component generators: Pareto, ARCH(1), fractional Gaussian noise and its
// centered square, plus uniform random mixing matrices. Every generator is a pure
// function of its parameters and a Stream.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>

#include "latent_evi/errors.hpp"
#include "latent_evi/rng.hpp"

namespace latent_evi {

/// ARCH(1) coefficient giving |x_t| a regularly varying tail with index 5 (extreme value index 1/5).
inline double heavy_tail_arch_alpha1() { return std::pow(8.0 * std::sqrt(2.0 / std::numbers::pi), -0.4); }

inline std::vector<double> pareto_sample(double alpha, std::size_t n, const Stream& stream) {
    if (!(alpha > 0.0)) throw InvalidArgument("Pareto shape must be > 0");
    StreamRng rng(stream);
    std::vector<double> out(n);
    const double inv = -1.0 / alpha;
    for (auto& x : out) x = std::pow(rng.uniform(), inv);
    return out;
}

inline std::vector<double> gaussian_sample(std::size_t n, const Stream& stream) {
    StreamRng rng(stream);
    std::vector<double> out(n);
    for (auto& x : out) x = rng.normal();
    return out;
}

inline std::vector<double> uniform_sample(double lo, double hi, std::size_t n, const Stream& stream) {
    if (!(lo < hi)) throw InvalidArgument("uniform range needs lo < hi");
    StreamRng rng(stream);
    std::vector<double> out(n);
    for (auto& x : out) x = lo + (hi - lo) * rng.uniform();
    return out;
}

/// x_t = sigma_t eps_t with sigma_t^2 = alpha0 + alpha1 x_{t-1}^2, started from the stationary variance.
inline std::vector<double> arch1_sample(double alpha0, double alpha1, std::size_t n, std::size_t burn_in,
                                        const Stream& stream) {
    if (!(alpha0 > 0.0)) throw InvalidArgument("ARCH(1) needs alpha0 > 0");
    if (!(alpha1 >= 0.0 && alpha1 < 1.0)) throw InvalidArgument("ARCH(1) needs 0 <= alpha1 < 1");
    StreamRng rng(stream);
    std::vector<double> out(n);
    double var = alpha0 / (1.0 - alpha1);
    for (std::size_t t = 0; t < burn_in + n; ++t) {
        const double x = std::sqrt(var) * rng.normal();
        if (t >= burn_in) out[t - burn_in] = x;
        var = alpha0 + alpha1 * x * x;
    }
    return out;
}

/// Tail index kappa of a stationary ARCH(1): the root of alpha1^{k/2} E|eps|^k = 1 (extreme value index of |x| is 1/kappa).
inline double arch1_tail_index(double alpha1) {
    if (!(alpha1 > 0.0 && alpha1 < 1.0)) throw InvalidArgument("tail index needs 0 < alpha1 < 1");
    // log of alpha1^{k/2} * 2^{k/2} Gamma((k+1)/2) / sqrt(pi); zero at k = 0 and at kappa > 2.
    auto f = [alpha1](double k) {
        return 0.5 * k * std::log(2.0 * alpha1) + std::lgamma(0.5 * (k + 1.0)) - 0.5 * std::log(std::numbers::pi);
    };
    double lo = 2.0, hi = 4.0;
    while (f(hi) < 0.0) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Autocovariance of unit-variance fGn at lag k: (|k+1|^2H - 2|k|^2H + |k-1|^2H) / 2.
inline double fgn_autocovariance(double hurst, std::size_t k) {
    const double h2 = 2.0 * hurst;
    const double kd = static_cast<double>(k);
    return 0.5 * (std::pow(kd + 1.0, h2) - 2.0 * std::pow(kd, h2) + std::pow(std::abs(kd - 1.0), h2));
}

struct GaussianPath {
    std::vector<double> values;
    bool used_cholesky = false;
    double min_embedding_eigenvalue = 0.0;
};

namespace detail {

inline constexpr std::size_t kCholeskyFallbackLimit = 4096;

/// Eigenvalues of the circulant embedding of size 2N, N = bit_ceil(n), of the autocovariance.
template <typename Autocov>
std::vector<double> circulant_eigenvalues(Autocov&& autocov, std::size_t n) {
    const std::size_t half = std::bit_ceil(std::max<std::size_t>(n, 2));
    const std::size_t m = 2 * half;
    std::vector<std::complex<double>> row(m), spectrum;
    for (std::size_t k = 0; k <= half; ++k) row[k] = autocov(k);
    for (std::size_t k = 1; k < half; ++k) row[m - k] = row[k];
    Eigen::FFT<double> fft;
    fft.fwd(spectrum, row);
    std::vector<double> lambda(m);
    for (std::size_t j = 0; j < m; ++j) lambda[j] = spectrum[j].real();
    return lambda;
}

/// Stationary zero-mean Gaussian sequence with the given autocovariance. Uses circulant
/// embedding; eigenvalues in [-1e-10, 0) are zeroed, anything more negative falls back to a
/// Cholesky factor of the n x n Toeplitz covariance (small n only).
template <typename Autocov>
GaussianPath stationary_gaussian(Autocov&& autocov, std::size_t n, const Stream& stream) {
    GaussianPath path;
    if (n == 0) return path;
    StreamRng rng(stream);
    std::vector<double> lambda = circulant_eigenvalues(autocov, n);
    const std::size_t m = lambda.size();
    double min_lambda = lambda[0];
    for (double l : lambda) min_lambda = std::min(min_lambda, l);
    path.min_embedding_eigenvalue = min_lambda;

    if (min_lambda < -1e-10) {
        if (n > kCholeskyFallbackLimit) {
            throw Error("circulant embedding has a negative eigenvalue (" + std::to_string(min_lambda) +
                        ") and n is too large for the Cholesky fallback");
        }
        Eigen::MatrixXd cov(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) cov(i, j) = autocov(i > j ? i - j : j - i);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) throw Error("Toeplitz covariance is not positive definite");
        Eigen::VectorXd eps(n);
        for (std::size_t i = 0; i < n; ++i) eps[i] = rng.normal();
        Eigen::VectorXd x = llt.matrixL() * eps;
        path.values.assign(x.data(), x.data() + n);
        path.used_cholesky = true;
        return path;
    }

    std::vector<std::complex<double>> weights(m), out;
    const double md = static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double scale = std::sqrt(std::max(lambda[j], 0.0) / md);
        const double re = rng.normal();
        const double im = rng.normal();
        weights[j] = {scale * re, scale * im};
    }
    Eigen::FFT<double> fft;
    fft.fwd(out, weights);
    path.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) path.values[k] = out[k].real();
    return path;
}

}  // namespace detail

inline GaussianPath fgn_path(double hurst, std::size_t n, const Stream& stream) {
    if (!(hurst > 0.0 && hurst < 1.0)) throw InvalidArgument("Hurst parameter must lie in (0,1)");
    return detail::stationary_gaussian([hurst](std::size_t k) { return fgn_autocovariance(hurst, k); }, n, stream);
}

inline std::vector<double> fgn_sample(double hurst, std::size_t n, const Stream& stream) {
    return fgn_path(hurst, n, stream).values;
}

/// (B_{t+1} - B_t)^2 - 1 for an fBm B with the given Hurst parameter.
inline std::vector<double> squared_fgn_centered(double hurst, std::size_t n, const Stream& stream) {
    auto v = fgn_sample(hurst, n, stream);
    for (auto& x : v) x = x * x - 1.0;
    return v;
}

struct MixingMatrix {
    Eigen::MatrixXd omega;
    int draws = 0;
    double condition = 0.0;
};

inline double condition_number(const Eigen::MatrixXd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    const double smin = s[s.size() - 1];
    return smin > 0.0 ? s[0] / smin : std::numeric_limits<double>::infinity();
}

/// p x p matrix with i.i.d. Uniform(lo, hi) entries, redrawn until its condition number is below max_condition.
inline MixingMatrix random_mixing_matrix(std::size_t p, double lo, double hi, const Stream& stream,
                                         double max_condition = 1e6) {
    if (p < 1) throw InvalidArgument("mixing matrix dimension must be >= 1");
    if (!(lo < hi)) throw InvalidArgument("mixing range needs lo < hi");
    if (!(max_condition > 1.0)) throw InvalidArgument("max_condition must exceed 1");
    constexpr int kMaxDraws = 100;
    StreamRng rng(stream);
    MixingMatrix out;
    out.omega.resize(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (out.draws = 1; out.draws <= kMaxDraws; ++out.draws) {
        for (Eigen::Index i = 0; i < out.omega.rows(); ++i)
            for (Eigen::Index j = 0; j < out.omega.cols(); ++j) out.omega(i, j) = lo + (hi - lo) * rng.uniform();
        out.condition = condition_number(out.omega);
        if (out.condition < max_condition) return out;
    }
    throw Error("no mixing matrix with condition number below " + std::to_string(max_condition) + " in " +
                std::to_string(kMaxDraws) + " draws");
}

/// Law of one latent component.
struct GeneratorSpec {
    enum class Kind { pareto, arch1, squared_fgn, gaussian };

    Kind kind = Kind::gaussian;
    double alpha = 0.0;              // pareto shape
    double alpha0 = 0.0;             // arch1
    double alpha1 = 0.0;             // arch1
    std::size_t burn_in = 1000;      // arch1
    double hurst = 0.5;              // squared_fgn
    std::string label;

    static GeneratorSpec pareto(double alpha, std::string label = {}) {
        GeneratorSpec g;
        g.kind = Kind::pareto;
        g.alpha = alpha;
        g.label = std::move(label);
        return g;
    }
    static GeneratorSpec arch1(double alpha0, double alpha1, std::size_t burn_in = 1000, std::string label = {}) {
        GeneratorSpec g;
        g.kind = Kind::arch1;
        g.alpha0 = alpha0;
        g.alpha1 = alpha1;
        g.burn_in = burn_in;
        g.label = std::move(label);
        return g;
    }
    static GeneratorSpec squared_fgn(double hurst, std::string label = {}) {
        GeneratorSpec g;
        g.kind = Kind::squared_fgn;
        g.hurst = hurst;
        g.label = std::move(label);
        return g;
    }
    static GeneratorSpec gaussian(std::string label = {}) {
        GeneratorSpec g;
        g.label = std::move(label);
        return g;
    }

    void validate() const {
        switch (kind) {
            case Kind::pareto:
                if (!(alpha > 0.0)) throw InvalidArgument("pareto: alpha must be > 0");
                break;
            case Kind::arch1:
                if (!(alpha0 > 0.0)) throw InvalidArgument("arch1: alpha0 must be > 0");
                if (!(alpha1 >= 0.0 && alpha1 < 1.0)) throw InvalidArgument("arch1: alpha1 must lie in [0,1)");
                break;
            case Kind::squared_fgn:
                if (!(hurst > 0.0 && hurst < 1.0)) throw InvalidArgument("squared_fgn: hurst must lie in (0,1)");
                break;
            case Kind::gaussian: break;
        }
    }

    friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

inline std::string_view to_string(GeneratorSpec::Kind k) {
    switch (k) {
        case GeneratorSpec::Kind::pareto: return "pareto";
        case GeneratorSpec::Kind::arch1: return "arch1";
        case GeneratorSpec::Kind::squared_fgn: return "squared_fgn";
        case GeneratorSpec::Kind::gaussian: return "gaussian";
    }
    return "?";
}

inline std::vector<double> generate(const GeneratorSpec& spec, std::size_t n, const Stream& stream) {
    spec.validate();
    switch (spec.kind) {
        case GeneratorSpec::Kind::pareto: return pareto_sample(spec.alpha, n, stream);
        case GeneratorSpec::Kind::arch1: return arch1_sample(spec.alpha0, spec.alpha1, n, spec.burn_in, stream);
        case GeneratorSpec::Kind::squared_fgn: return squared_fgn_centered(spec.hurst, n, stream);
        case GeneratorSpec::Kind::gaussian: return gaussian_sample(n, stream);
    }
    return {};
}

/// Extreme value index of |z| for a component of this law.
inline double theoretical_evi(const GeneratorSpec& spec) {
    switch (spec.kind) {
        case GeneratorSpec::Kind::pareto: return 1.0 / spec.alpha;
        case GeneratorSpec::Kind::arch1: return spec.alpha1 > 0.0 ? 1.0 / arch1_tail_index(spec.alpha1) : 0.0;
        default: return 0.0;
    }
}

}  // namespace latent_evi
