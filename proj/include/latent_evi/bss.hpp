#pragma once

// Blind source separation for x_i = Omega z_i + mu.
//
// Data matrices are n x p with one observation per row. Every unmixer returns
// gamma_hat such that z_hat_i = gamma_hat (x_i - x_bar); the sources are
// identified up to order and sign, so results are compared through the gain
// matrix gamma_hat * Omega.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "latent_evi/errors.hpp"

namespace latent_evi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalue (or diagonal-profile) separation below which a component is not identifiable.
inline constexpr double kDegenerateGap = 1e-8;

struct Centered {
    Matrix data;
    Vector mean;
};

inline Centered center(const Matrix& x) {
    if (x.rows() < 2) throw InvalidArgument("centering needs at least 2 rows");
    Centered out;
    out.mean = x.colwise().mean().transpose();
    out.data = x.rowwise() - out.mean.transpose();
    return out;
}

/// (1/(n-tau)) sum_i x_i x_{i+tau}^T of already-centered rows; symmetrized on request.
inline Matrix autocovariance(const Matrix& x, std::size_t tau, bool symmetrize = true) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (tau >= n) throw InvalidArgument("lag " + std::to_string(tau) + " must be < n = " + std::to_string(n));
    const auto len = static_cast<Eigen::Index>(n - tau);
    Matrix s = x.topRows(len).transpose() * x.bottomRows(len);
    s /= static_cast<double>(len);
    if (symmetrize) s = (0.5 * (s + s.transpose())).eval();
    return s;
}

struct Whitened {
    Matrix whitener;  // symmetric Cov^{-1/2}
    Matrix data;      // (x - x_bar) W^T, sample covariance I
    Vector mean;
};

/// Symmetric inverse square root of the sample covariance (denominator n, matching autocovariance at lag 0).
inline Whitened whiten(const Matrix& x) {
    if (x.cols() < 1 || x.rows() <= x.cols()) throw InvalidArgument("whitening needs n > p >= 1");
    auto c = center(x);
    const Matrix cov = autocovariance(c.data, 0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    const Vector& ev = eig.eigenvalues();
    const double largest = ev.maxCoeff();
    const double ratio = largest > 0.0 ? ev.minCoeff() / largest : 0.0;
    if (!(ratio > 1e-10)) throw IllConditioned(ratio);
    Whitened out;
    out.whitener = eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    out.whitener = (0.5 * (out.whitener + out.whitener.transpose())).eval();
    out.data = c.data * out.whitener.transpose();
    out.mean = std::move(c.mean);
    return out;
}

/// Sum of squared off-diagonal entries.
inline double off_diagonal(const Matrix& m) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (i != j) s += m(i, j) * m(i, j);
    return s;
}

struct JointDiagonalization {
    Matrix rotation;                  // orthogonal V; V^T M_k V is approximately diagonal
    bool converged = false;
    int sweeps = 0;
    std::vector<double> off_history;  // sum_k off(V^T M_k V) before the first sweep and after each sweep
};

/// Jacobi (Givens) joint diagonalization of symmetric matrices. Each plane rotation uses the
/// closed-form angle that maximizes the sum of squared diagonals over the family, so the
/// off-diagonal criterion never increases. Stops after a sweep whose rotations all have
/// |sin(theta)| <= tol.
inline JointDiagonalization joint_diagonalize(const std::vector<Matrix>& matrices, double tol = 1e-12,
                                              int max_sweeps = 100) {
    if (matrices.empty()) throw InvalidArgument("joint diagonalization needs at least one matrix");
    const Eigen::Index p = matrices.front().rows();
    for (const auto& m : matrices) {
        if (m.rows() != p || m.cols() != p) throw InvalidArgument("joint diagonalization needs equal square matrices");
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw InvalidArgument("joint diagonalization needs symmetric matrices");
    }
    std::vector<Matrix> a = matrices;
    JointDiagonalization out;
    out.rotation = Matrix::Identity(p, p);
    auto criterion = [&a] {
        double s = 0.0;
        for (const auto& m : a) s += off_diagonal(m);
        return s;
    };
    out.off_history.push_back(criterion());

    for (out.sweeps = 0; out.sweeps < max_sweeps;) {
        bool rotated = false;
        for (Eigen::Index i = 0; i + 1 < p; ++i) {
            for (Eigen::Index j = i + 1; j < p; ++j) {
                double g11 = 0.0, g12 = 0.0, g22 = 0.0;
                for (const auto& m : a) {
                    const double h1 = m(i, i) - m(j, j);
                    const double h2 = m(i, j) + m(j, i);
                    g11 += h1 * h1;
                    g12 += h1 * h2;
                    g22 += h2 * h2;
                }
                const double ton = g11 - g22;
                const double toff = 2.0 * g12;
                const double theta = 0.5 * std::atan2(toff, ton + std::sqrt(ton * ton + toff * toff));
                const double c = std::cos(theta), s = std::sin(theta);
                if (std::abs(s) <= tol) continue;
                rotated = true;
                for (auto& m : a) {
                    // M <- G^T M G with G = [c -s; s c] acting on the (i, j) plane.
                    for (Eigen::Index k = 0; k < p; ++k) {
                        const double mi = m(i, k), mj = m(j, k);
                        m(i, k) = c * mi + s * mj;
                        m(j, k) = -s * mi + c * mj;
                    }
                    for (Eigen::Index k = 0; k < p; ++k) {
                        const double mi = m(k, i), mj = m(k, j);
                        m(k, i) = c * mi + s * mj;
                        m(k, j) = -s * mi + c * mj;
                    }
                }
                for (Eigen::Index k = 0; k < p; ++k) {
                    const double vi = out.rotation(k, i), vj = out.rotation(k, j);
                    out.rotation(k, i) = c * vi + s * vj;
                    out.rotation(k, j) = -s * vi + c * vj;
                }
            }
        }
        ++out.sweeps;
        out.off_history.push_back(criterion());
        if (!rotated) {
            out.converged = true;
            break;
        }
    }
    return out;
}

/// sum_k off(V^T M_k V).
inline double off_diagonal_mass(const std::vector<Matrix>& matrices, const Matrix& v) {
    double s = 0.0;
    for (const auto& m : matrices) s += off_diagonal(v.transpose() * m * v);
    return s;
}

struct LagSet {
    std::vector<std::size_t> lags;

    static LagSet range(std::size_t first, std::size_t last) {
        LagSet l;
        for (std::size_t t = first; t <= last; ++t) l.lags.push_back(t);
        return l;
    }

    void validate(std::size_t n) const {
        if (lags.empty()) throw InvalidArgument("lag set must be nonempty");
        for (std::size_t i = 0; i < lags.size(); ++i) {
            if (lags[i] < 1) throw InvalidArgument("lags must be positive");
            if (i > 0 && lags[i] <= lags[i - 1]) throw InvalidArgument("lags must be strictly increasing");
        }
        if (lags.back() >= n) throw InvalidArgument("largest lag must be < n");
    }

    friend bool operator==(const LagSet&, const LagSet&) = default;
};

struct UnmixerSpec {
    enum class Kind { amuse, sobi, fobi, identity };

    Kind kind = Kind::fobi;
    std::size_t lag = 1;  // amuse
    LagSet lags;          // sobi
    double tol = 1e-12;   // sobi
    int max_sweeps = 100; // sobi

    static UnmixerSpec amuse(std::size_t tau = 1) {
        UnmixerSpec s;
        s.kind = Kind::amuse;
        s.lag = tau;
        return s;
    }
    static UnmixerSpec sobi(LagSet lags) {
        UnmixerSpec s;
        s.kind = Kind::sobi;
        s.lags = std::move(lags);
        return s;
    }
    static UnmixerSpec fobi() { return {}; }
    /// gamma_hat = I; only centers the data.
    static UnmixerSpec identity() {
        UnmixerSpec s;
        s.kind = Kind::identity;
        return s;
    }

    friend bool operator==(const UnmixerSpec&, const UnmixerSpec&) = default;
};

inline std::string to_string(const UnmixerSpec& s) {
    switch (s.kind) {
        case UnmixerSpec::Kind::amuse: return "amuse:" + std::to_string(s.lag);
        case UnmixerSpec::Kind::fobi: return "fobi";
        case UnmixerSpec::Kind::identity: return "identity";
        case UnmixerSpec::Kind::sobi: {
            std::string out = "sobi:";
            for (std::size_t i = 0; i < s.lags.lags.size(); ++i) {
                if (i) out += ',';
                out += std::to_string(s.lags.lags[i]);
            }
            return out;
        }
    }
    return {};
}

/// Parses "fobi", "identity", "amuse[:TAU]", "sobi[:A-B]" or "sobi:T1,T2,...". Bare "sobi" uses lags 1..12.
inline UnmixerSpec parse_unmixer(std::string_view text) {
    auto colon = text.find(':');
    std::string_view head = text.substr(0, colon);
    std::string arg = colon == std::string_view::npos ? std::string() : std::string(text.substr(colon + 1));
    auto to_lag = [&](const std::string& s) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || v < 1) throw InvalidArgument("invalid lag '" + s + "' in '" + std::string(text) + "'");
        return static_cast<std::size_t>(v);
    };
    const bool bare = colon == std::string_view::npos;
    if (head == "fobi" && bare) return UnmixerSpec::fobi();
    if (head == "identity" && bare) return UnmixerSpec::identity();
    if (head == "amuse") return UnmixerSpec::amuse(bare ? 1 : to_lag(arg));
    if (head == "sobi") {
        if (bare) return UnmixerSpec::sobi(LagSet::range(1, 12));
        if (auto dash = arg.find('-'); dash != std::string::npos) {
            const auto first = to_lag(arg.substr(0, dash)), last = to_lag(arg.substr(dash + 1));
            if (last < first) throw InvalidArgument("empty lag range in '" + std::string(text) + "'");
            return UnmixerSpec::sobi(LagSet::range(first, last));
        }
        LagSet l;
        std::size_t start = 0;
        while (start <= arg.size()) {
            auto comma = arg.find(',', start);
            l.lags.push_back(to_lag(arg.substr(start, comma - start)));
            if (l.lags.size() > 1 && l.lags.back() <= l.lags[l.lags.size() - 2])
                throw InvalidArgument("lags must be strictly increasing in '" + std::string(text) + "'");
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return UnmixerSpec::sobi(std::move(l));
    }
    throw InvalidArgument("unknown unmixer '" + std::string(text) + "' (expected amuse[:TAU], sobi[:LAGS], fobi or identity)");
}

struct UnmixingResult {
    Matrix gamma_hat;
    Matrix whitener;
    Vector sample_mean;
    UnmixerSpec method;
    Vector spectrum;         // eigenvalues (AMUSE/FOBI) or sums of squared diagonals (SOBI), in row order
    Vector eigenvalue_gaps;  // per component: distance to the nearest other component's spectrum/profile
    bool degenerate_spectrum = false;
    bool converged = true;
    int sweeps = 0;
};

namespace detail {

inline Vector nearest_gaps(const Vector& values) {
    const auto p = values.size();
    Vector gaps = Vector::Constant(p, std::numeric_limits<double>::infinity());
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            if (i != j) gaps[i] = std::min(gaps[i], std::abs(values[i] - values[j]));
    return gaps;
}

inline void set_gaps(UnmixingResult& r, Vector gaps) {
    r.eigenvalue_gaps = std::move(gaps);
    r.degenerate_spectrum = r.eigenvalue_gaps.size() > 1 && r.eigenvalue_gaps.minCoeff() < kDegenerateGap;
}

// Rows of gamma_hat = eigenvectors of a symmetric scatter of whitened data, by descending eigenvalue.
inline UnmixingResult from_scatter(const Whitened& w, const Matrix& scatter, UnmixerSpec method) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(scatter);
    const auto p = scatter.rows();
    UnmixingResult r;
    r.method = std::move(method);
    r.whitener = w.whitener;
    r.sample_mean = w.mean;
    r.spectrum.resize(p);
    Matrix u(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        r.spectrum[j] = eig.eigenvalues()[p - 1 - j];
        u.col(j) = eig.eigenvectors().col(p - 1 - j);
    }
    r.gamma_hat = u.transpose() * w.whitener;
    set_gaps(r, nearest_gaps(r.spectrum));
    return r;
}

}  // namespace detail

/// AMUSE: eigenvectors of the symmetrized lag-tau autocovariance of the whitened data.
inline UnmixingResult amuse(const Matrix& x, std::size_t tau = 1) {
    if (tau < 1) throw InvalidArgument("AMUSE lag must be >= 1");
    if (tau >= static_cast<std::size_t>(x.rows())) throw InvalidArgument("AMUSE lag must be < n");
    const auto w = whiten(x);
    return detail::from_scatter(w, autocovariance(w.data, tau), UnmixerSpec::amuse(tau));
}

/// SOBI: joint diagonalizer of the symmetrized whitened autocovariances at every lag in the set.
inline UnmixingResult sobi(const Matrix& x, const LagSet& lags, double tol = 1e-12, int max_sweeps = 100) {
    lags.validate(static_cast<std::size_t>(x.rows()));
    const auto w = whiten(x);
    std::vector<Matrix> family;
    family.reserve(lags.lags.size());
    for (auto tau : lags.lags) family.push_back(autocovariance(w.data, tau));
    auto jd = joint_diagonalize(family, tol, max_sweeps);

    const auto p = x.cols();
    // diag(V^T M_k V) per matrix, one column per lag.
    Matrix diag(p, static_cast<Eigen::Index>(family.size()));
    for (std::size_t k = 0; k < family.size(); ++k)
        diag.col(static_cast<Eigen::Index>(k)) = (jd.rotation.transpose() * family[k] * jd.rotation).diagonal();
    Vector power = diag.rowwise().squaredNorm();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return power[a] > power[b]; });

    UnmixingResult r;
    r.method = UnmixerSpec::sobi(lags);
    r.method.tol = tol;
    r.method.max_sweeps = max_sweeps;
    r.whitener = w.whitener;
    r.sample_mean = w.mean;
    r.converged = jd.converged;
    r.sweeps = jd.sweeps;
    Matrix v(p, p);
    r.spectrum.resize(p);
    Vector gaps(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto src = order[static_cast<std::size_t>(j)];
        v.col(j) = jd.rotation.col(src);
        r.spectrum[j] = power[src];
        double g = std::numeric_limits<double>::infinity();
        for (Eigen::Index other = 0; other < p; ++other)
            if (other != src) g = std::min(g, (diag.row(src) - diag.row(other)).cwiseAbs().maxCoeff());
        gaps[j] = g;
    }
    r.gamma_hat = v.transpose() * w.whitener;
    detail::set_gaps(r, std::move(gaps));
    return r;
}

/// FOBI: eigenvectors of (1/n) sum ||y_i||^2 y_i y_i^T for whitened y. Needs distinct kurtoses.
inline UnmixingResult fobi(const Matrix& x) {
    const auto w = whiten(x);
    const Vector r2 = w.data.rowwise().squaredNorm();
    Matrix scatter = w.data.transpose() * r2.asDiagonal() * w.data;
    scatter /= static_cast<double>(w.data.rows());
    return detail::from_scatter(w, scatter, UnmixerSpec::fobi());
}

inline UnmixingResult identity_unmixer(const Matrix& x) {
    UnmixingResult r;
    r.method = UnmixerSpec::identity();
    r.gamma_hat = Matrix::Identity(x.cols(), x.cols());
    r.whitener = r.gamma_hat;
    r.sample_mean = center(x).mean;
    r.spectrum = Vector::Zero(x.cols());
    r.eigenvalue_gaps = Vector::Constant(x.cols(), std::numeric_limits<double>::infinity());
    return r;
}

inline UnmixingResult run_unmixer(const Matrix& x, const UnmixerSpec& spec) {
    switch (spec.kind) {
        case UnmixerSpec::Kind::amuse: return amuse(x, spec.lag);
        case UnmixerSpec::Kind::sobi: return sobi(x, spec.lags, spec.tol, spec.max_sweeps);
        case UnmixerSpec::Kind::fobi: return fobi(x);
        case UnmixerSpec::Kind::identity: return identity_unmixer(x);
    }
    throw InvalidArgument("unknown unmixer");
}

/// Row i of the result is gamma_hat (x_i - x_bar).
inline Matrix unmix(const Matrix& x, const UnmixingResult& r) {
    if (r.gamma_hat.cols() != x.cols() || r.sample_mean.size() != x.cols())
        throw InvalidArgument("unmixing result does not match the data dimension");
    return (x.rowwise() - r.sample_mean.transpose()) * r.gamma_hat.transpose();
}

namespace detail {

/// Hungarian algorithm (shortest augmenting path, O(p^3)): row -> column assignment minimizing total cost.
inline std::vector<std::size_t> min_cost_assignment(const Matrix& cost) {
    const auto n = static_cast<std::size_t>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);  // match[col] = row, 1-based, 0 = free
    std::vector<char> used(n + 1);
    for (std::size_t row = 1; row <= n; ++row) {
        match[0] = row;
        std::size_t col0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[col0] = 1;
            const std::size_t r0 = match[col0];
            double delta = inf;
            std::size_t col1 = 0;
            for (std::size_t c = 1; c <= n; ++c) {
                if (used[c]) continue;
                const double cur = cost(static_cast<Eigen::Index>(r0 - 1), static_cast<Eigen::Index>(c - 1)) - u[r0] - v[c];
                if (cur < minv[c]) {
                    minv[c] = cur;
                    way[c] = col0;
                }
                if (minv[c] < delta) {
                    delta = minv[c];
                    col1 = c;
                }
            }
            for (std::size_t c = 0; c <= n; ++c) {
                if (used[c]) {
                    u[match[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col0 = col1;
        } while (match[col0] != 0);
        do {
            const std::size_t col1 = way[col0];
            match[col0] = match[col1];
            col0 = col1;
        } while (col0 != 0);
    }
    std::vector<std::size_t> assignment(n);
    for (std::size_t c = 1; c <= n; ++c) assignment[match[c] - 1] = c - 1;
    return assignment;
}

}  // namespace detail

/// Minimum distance index of a gain matrix G: (p-1)^{-1/2} min over signed permutations P J and
/// diagonal D of ||P J D G - I||_F. Zero iff G has exactly one nonzero per row and column; at most 1.
inline double md_index(const Matrix& gain) {
    const auto p = gain.rows();
    if (gain.cols() != p) throw InvalidArgument("gain matrix must be square");
    if (p == 1) return 0.0;
    const Vector row_norm2 = gain.rowwise().squaredNorm();
    if ((row_norm2.array() <= 0.0).any()) throw InvalidArgument("gain matrix has a zero row");
    const Matrix share = gain.cwiseAbs2().array().colwise() / row_norm2.array();
    const auto assignment = detail::min_cost_assignment(-share);
    double best = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) best += share(i, static_cast<Eigen::Index>(assignment[static_cast<std::size_t>(i)]));
    const double pd = static_cast<double>(p);
    return std::sqrt(std::clamp((pd - best) / (pd - 1.0), 0.0, 1.0));
}

struct AlignmentReport {
    std::vector<std::size_t> permutation;  // estimated row k matches true source permutation[k]
    Vector signs;
    double md_index = 0.0;
    Matrix gain;
};

/// Matches estimated sources (rows of gamma_hat) to true sources (columns of omega).
/// The permutation is greedy on |G| (largest remaining entry first, lowest row index on ties);
/// md_index uses the optimal assignment.
inline AlignmentReport align_components(const Matrix& gamma_hat, const Matrix& omega) {
    const auto p = gamma_hat.rows();
    if (gamma_hat.cols() != p || omega.rows() != p || omega.cols() != p)
        throw InvalidArgument("alignment needs square matrices of equal size");
    if (Eigen::FullPivLU<Matrix>(gamma_hat).rank() < p || Eigen::FullPivLU<Matrix>(omega).rank() < p)
        throw InvalidArgument("alignment needs invertible matrices");
    AlignmentReport rep;
    rep.gain = gamma_hat * omega;
    rep.permutation.assign(static_cast<std::size_t>(p), 0);
    rep.signs = Vector::Ones(p);
    std::vector<char> row_done(static_cast<std::size_t>(p)), col_done(static_cast<std::size_t>(p));
    for (Eigen::Index step = 0; step < p; ++step) {
        double best = -1.0;
        Eigen::Index bi = 0, bj = 0;
        for (Eigen::Index i = 0; i < p; ++i) {
            if (row_done[static_cast<std::size_t>(i)]) continue;
            for (Eigen::Index j = 0; j < p; ++j) {
                if (col_done[static_cast<std::size_t>(j)]) continue;
                const double a = std::abs(rep.gain(i, j));
                if (a > best) {
                    best = a;
                    bi = i;
                    bj = j;
                }
            }
        }
        row_done[static_cast<std::size_t>(bi)] = col_done[static_cast<std::size_t>(bj)] = 1;
        rep.permutation[static_cast<std::size_t>(bi)] = static_cast<std::size_t>(bj);
        rep.signs[bi] = rep.gain(bi, bj) < 0.0 ? -1.0 : 1.0;
    }
    rep.md_index = md_index(rep.gain);
    return rep;
}

}  // namespace latent_evi
