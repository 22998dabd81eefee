#pragma once

// Return series, rolling-window tail estimates and latent factor extraction for
// multivariate financial data.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "latent_evi/bss.hpp"
#include "latent_evi/csv.hpp"
#include "latent_evi/evt.hpp"

namespace latent_evi {

/// True for strings of the form YYYY-MM-DD with plausible month/day ranges.
inline bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (s[i] < '0' || s[i] > '9') return false;
    const int month = (s[5] - '0') * 10 + (s[6] - '0');
    const int day = (s[8] - '0') * 10 + (s[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

struct PriceSeries {
    std::vector<std::string> dates;
    std::vector<double> values;

    /// Throws unless dates are ISO, strictly increasing and aligned with positive values.
    void validate() const {
        if (dates.size() != values.size()) throw InvalidArgument("dates and values differ in length");
        for (std::size_t i = 0; i < dates.size(); ++i) {
            if (!is_iso_date(dates[i])) throw InvalidArgument("not an ISO date: '" + dates[i] + "'");
            if (i > 0 && !(dates[i - 1] < dates[i]))
                throw InvalidArgument("dates must be strictly increasing (at '" + dates[i] + "')");
            if (!(values[i] > 0.0) || !std::isfinite(values[i]))
                throw InvalidArgument("price on " + dates[i] + " is not a positive finite number");
        }
    }
};

/// r_t = log(p_{t+1}) - log(p_t).
inline std::vector<double> log_returns(std::span<const double> prices) {
    if (prices.size() < 2) throw InvalidArgument("log_returns needs at least 2 prices");
    for (double p : prices)
        if (!(p > 0.0) || !std::isfinite(p)) throw InvalidArgument("prices must be positive and finite");
    std::vector<double> r(prices.size() - 1);
    for (std::size_t t = 0; t + 1 < prices.size(); ++t) r[t] = std::log(prices[t + 1]) - std::log(prices[t]);
    return r;
}

inline std::vector<double> log_returns(const PriceSeries& prices) {
    prices.validate();
    return log_returns(std::span<const double>(prices.values));
}

/// Divides by the sample standard deviation (denominator n - 1) after optionally removing the mean.
/// The output has sample variance 1.
inline std::vector<double> standardize(std::span<const double> x, bool remove_mean = true) {
    if (x.size() < 2) throw InvalidArgument("standardize needs at least 2 values");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(x.size() - 1);
    if (!(var > 0.0)) throw InvalidArgument("cannot standardize a sample with zero variance");
    const double sd = std::sqrt(var);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (remove_mean ? x[i] - mean : x[i]) / sd;
    return out;
}

enum class Tail { left, right, abs };

inline std::string_view to_string(Tail t) {
    switch (t) {
        case Tail::left: return "left";
        case Tail::right: return "right";
        case Tail::abs: return "abs";
    }
    return "?";
}

inline Tail parse_tail(std::string_view s) {
    if (s == "left") return Tail::left;
    if (s == "right") return Tail::right;
    if (s == "abs") return Tail::abs;
    throw InvalidArgument("unknown tail '" + std::string(s) + "' (expected left, right or abs)");
}

struct RollingEviTrace {
    std::vector<std::size_t> center_index;  // window start + window/2 - 1 (0-based)
    std::vector<std::optional<double>> estimates;
    Tail tail = Tail::right;
    std::size_t window = 0;
    std::size_t k = 0;
    EviMethod method = EviMethod::hill;

    std::size_t missing() const {
        return static_cast<std::size_t>(std::count(estimates.begin(), estimates.end(), std::nullopt));
    }
};

/// Index of the reported day of a window starting at `start` (the 30th day of a 60-day window).
inline std::size_t window_center(std::size_t start, std::size_t window) { return start + window / 2 - 1; }

/// Fixed-k estimate over every window of length `window`. The left tail is the right tail of -x.
/// Windows with no spread, a nonpositive threshold or a degenerate moment ratio give nullopt.
inline RollingEviTrace rolling_evi(std::span<const double> x, std::size_t window, std::size_t k, Tail tail,
                                   EviMethod method = EviMethod::hill) {
    if (window < 2) throw InvalidArgument("window must be >= 2");
    if (window > x.size()) throw InvalidArgument("window exceeds the series length");
    if (k < 1 || k >= window) throw InvalidArgument("k must satisfy 1 <= k < window");

    RollingEviTrace out;
    out.tail = tail;
    out.window = window;
    out.k = k;
    out.method = method;
    const auto count = x.size() - window + 1;
    out.center_index.reserve(count);
    out.estimates.reserve(count);

    const auto spec = TailSpec::fixed(k);
    std::vector<double> buf(window);
    for (std::size_t start = 0; start < count; ++start) {
        for (std::size_t i = 0; i < window; ++i) {
            const double v = x[start + i];
            buf[i] = tail == Tail::right ? v : tail == Tail::left ? -v : std::abs(v);
        }
        const auto [lo, hi] = std::minmax_element(buf.begin(), buf.end());
        std::optional<double> value;
        if (*lo != *hi) {
            if (auto e = try_estimate(method, buf, spec)) value = e->gamma_hat;
        }
        out.center_index.push_back(window_center(start, window));
        out.estimates.push_back(value);
    }
    return out;
}

struct FactorAnalysis {
    Matrix latents;   // n x p, row i = gamma_hat (x_i - x_bar)
    Matrix loadings;  // inverse of gamma_hat; column j is the loading vector of factor j
    UnmixingResult unmixing;
};

/// Unmixes x and inverts the unmixing matrix. Latent signs are not identified, so each factor
/// is oriented to make its loading column sum nonnegative; left and right tails then refer to
/// the direction in which the observed series move together.
inline FactorAnalysis factor_analysis(const Matrix& x, const UnmixerSpec& unmixer = UnmixerSpec::sobi(LagSet::range(1, 12))) {
    FactorAnalysis f;
    f.unmixing = run_unmixer(x, unmixer);
    Eigen::FullPivLU<Matrix> lu(f.unmixing.gamma_hat);
    if (!lu.isInvertible()) throw IllConditioned(0.0);
    f.loadings = lu.inverse();
    for (Eigen::Index j = 0; j < f.loadings.cols(); ++j) {
        if (f.loadings.col(j).sum() < 0.0) {
            f.loadings.col(j) *= -1.0;
            f.unmixing.gamma_hat.row(j) *= -1.0;
        }
    }
    f.latents = unmix(x, f.unmixing);
    return f;
}

/// latents * loadings^T + x_bar, which recovers the input data.
inline Matrix reconstruct(const FactorAnalysis& f) {
    return (f.latents * f.loadings.transpose()).rowwise() + f.unmixing.sample_mean.transpose();
}

/// A date column followed by one or more numeric columns, all rows complete.
struct SeriesTable {
    std::vector<std::string> dates;
    std::vector<std::string> names;
    Matrix values;  // rows = dates, columns = names

    std::vector<double> column(Eigen::Index j) const {
        std::vector<double> out(static_cast<std::size_t>(values.rows()));
        for (Eigen::Index i = 0; i < values.rows(); ++i) out[static_cast<std::size_t>(i)] = values(i, j);
        return out;
    }
};

/// Reads a CSV whose first column holds ISO dates (strictly increasing) and whose other
/// columns are numeric. A column named "date" is used if present; otherwise the first column.
inline SeriesTable read_series_table(const std::string& path) {
    const auto t = csv::read(path);
    std::size_t date_col = 0;
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == "date" || t.header[i] == "Date") date_col = i;
    if (t.header.size() < 2) throw InvalidArgument(path + ": need a date column and at least one series");
    if (t.rows.empty()) throw InvalidArgument(path + ": no data rows");

    SeriesTable out;
    for (std::size_t j = 0; j < t.header.size(); ++j)
        if (j != date_col) out.names.push_back(t.header[j]);
    out.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(out.names.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        if (!is_iso_date(row[date_col])) throw InvalidArgument(path + ": not an ISO date: '" + row[date_col] + "'");
        if (i > 0 && !(out.dates.back() < row[date_col]))
            throw InvalidArgument(path + ": dates must be strictly increasing (at '" + row[date_col] + "')");
        out.dates.push_back(row[date_col]);
        Eigen::Index c = 0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j == date_col) continue;
            const double v = csv::parse_double(row[j], path);
            if (!std::isfinite(v)) throw InvalidArgument(path + ": missing or non-finite value on " + row[date_col]);
            out.values(static_cast<Eigen::Index>(i), c++) = v;
        }
    }
    return out;
}

}  // namespace latent_evi
