#pragma once

// Independent reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "latent_evi/rng.hpp"

namespace test_support {

using latent_evi::Stream;
using latent_evi::StreamRng;

/// Full sort, then the m-th smallest value.
inline double sorted_order_statistic(std::vector<double> v, std::size_t m) {
    std::sort(v.begin(), v.end());
    return v.at(m - 1);
}

/// (1/k) sum over the k largest of [log(y / y_(n-k,n))]^j, computed by a full sort.
inline double brute_log_moment(std::vector<double> v, std::size_t k, int j) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    const double thr = v[n - k - 1];
    double s = 0.0;
    for (std::size_t i = n - k; i < n; ++i) s += std::pow(std::log(v[i] / thr), j);
    return s / static_cast<double>(k);
}

/// x_t = phi x_{t-1} + e_t, started from the stationary distribution.
inline std::vector<double> ar1(double phi, std::size_t n, const Stream& stream) {
    StreamRng rng(stream);
    std::vector<double> x(n);
    double prev = rng.normal() / std::sqrt(1.0 - phi * phi);
    for (auto& v : x) {
        prev = phi * prev + rng.normal();
        v = prev;
    }
    return x;
}

/// Haar-ish random orthogonal matrix via QR of a Gaussian matrix.
inline Eigen::MatrixXd random_orthogonal(Eigen::Index p, StreamRng& rng) {
    Eigen::MatrixXd g(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    return q;
}

/// Minimum distance index by exhaustive search over permutations (small p only).
inline double brute_md_index(const Eigen::MatrixXd& g) {
    const auto p = g.rows();
    Eigen::MatrixXd t(p, p);
    for (Eigen::Index i = 0; i < p; ++i) t.row(i) = g.row(i).array().square() / g.row(i).squaredNorm();
    std::vector<int> perm(static_cast<std::size_t>(p));
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1.0;
    do {
        double s = 0.0;
        for (Eigen::Index i = 0; i < p; ++i) s += t(i, perm[static_cast<std::size_t>(i)]);
        best = std::max(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (p == 1) return 0.0;
    return std::sqrt(std::max(0.0, (static_cast<double>(p) - best) / static_cast<double>(p - 1)));
}

/// (1/(n-k)) sum_t x_t x_{t+k}: lag-k autocovariance of a series with known mean zero.
inline double zero_mean_autocovariance(const std::vector<double>& x, std::size_t k) {
    const std::size_t m = x.size() - k;
    double s = 0.0;
    for (std::size_t t = 0; t < m; ++t) s += x[t] * x[t + k];
    return s / static_cast<double>(m);
}

/// Exact standard deviation of zero_mean_autocovariance at lag k for a stationary Gaussian
/// series of length n with autocovariance c (Isserlis' theorem):
/// Var = m^-2 sum_{|d|<m} (m - |d|) (c_d^2 + c_{d+k} c_{d-k}), m = n - k.
template <typename Autocov>
double gaussian_autocovariance_se(Autocov&& c, std::size_t n, std::size_t k) {
    const auto m = static_cast<long long>(n - k);
    auto cov = [&](long long d) { return c(static_cast<std::size_t>(d < 0 ? -d : d)); };
    double v = 0.0;
    for (long long d = -(m - 1); d <= m - 1; ++d) {
        const double w = static_cast<double>(m - (d < 0 ? -d : d));
        const auto kk = static_cast<long long>(k);
        v += w * (cov(d) * cov(d) + cov(d + kk) * cov(d - kk));
    }
    return std::sqrt(v) / static_cast<double>(m);
}

inline std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index j) {
    return {m.col(j).data(), m.col(j).data() + m.rows()};
}

}  // namespace test_support
