#pragma once

// CSV export of study results.
//
// summary.csv     n,estimator,statistic,value       one row per (n, estimator, statistic)
// histograms.csv  n,estimator,bin_lo,bin_hi,count_true,count_estimated
//                 out-of-range tallies use bin_lo=-inf (below) and bin_hi=inf (above)
// records.csv     n,replicate,estimator,max_true,max_estimated,md_index,unmixer_ok
//
// Missing values are empty cells. Doubles are written with 17 significant digits so a
// re-read summary compares equal to the one written.

#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "latent_evi/csv.hpp"
#include "latent_evi/experiments.hpp"

namespace latent_evi {

namespace detail {

struct StatField {
    const char* name;
    double (*get)(const CellSummary&);
    void (*set)(CellSummary&, double);
};

template <auto Member>
double get_count(const CellSummary& c) { return static_cast<double>(c.*Member); }
template <auto Member>
void set_count(CellSummary& c, double v) { c.*Member = static_cast<std::size_t>(v); }
template <auto Member>
double get_real(const CellSummary& c) { return c.*Member; }
template <auto Member>
void set_real(CellSummary& c, double v) { c.*Member = v; }
template <auto Member>
double get_hist_count(const CellSummary& c) { return static_cast<double>(c.histogram.*Member); }
template <auto Member>
void set_hist_count(CellSummary& c, double v) { c.histogram.*Member = static_cast<std::size_t>(v); }

#define LATENT_EVI_COUNT(field) StatField{#field, &get_count<&CellSummary::field>, &set_count<&CellSummary::field>}
#define LATENT_EVI_REAL(field) StatField{#field, &get_real<&CellSummary::field>, &set_real<&CellSummary::field>}
#define LATENT_EVI_HIST(field) StatField{#field, &get_hist_count<&Histogram::field>, &set_hist_count<&Histogram::field>}

inline const std::vector<StatField>& stat_fields() {
    static const std::vector<StatField> fields{
        LATENT_EVI_COUNT(k_n),
        LATENT_EVI_COUNT(replications),
        LATENT_EVI_COUNT(paired),
        LATENT_EVI_COUNT(missing_true),
        LATENT_EVI_COUNT(missing_estimated),
        LATENT_EVI_COUNT(unmixer_failures),
        LATENT_EVI_REAL(q1),
        LATENT_EVI_REAL(median),
        LATENT_EVI_REAL(q3),
        LATENT_EVI_REAL(agreement_eps),
        LATENT_EVI_REAL(agreement_fraction),
        LATENT_EVI_REAL(overlap),
        LATENT_EVI_REAL(mean_true),
        LATENT_EVI_REAL(mean_estimated),
        LATENT_EVI_REAL(median_md_index),
        LATENT_EVI_HIST(below_true),
        LATENT_EVI_HIST(below_estimated),
        LATENT_EVI_HIST(above_true),
        LATENT_EVI_HIST(above_estimated),
        StatField{"hist_lo", [](const CellSummary& c) { return c.histogram.lo; },
                  [](CellSummary& c, double v) { c.histogram.lo = v; }},
        StatField{"hist_width", [](const CellSummary& c) { return c.histogram.width; },
                  [](CellSummary& c, double v) { c.histogram.width = v; }},
    };
    return fields;
}

#undef LATENT_EVI_COUNT
#undef LATENT_EVI_REAL
#undef LATENT_EVI_HIST

inline std::size_t parse_size(const std::string& s) {
    const double v = csv::parse_double(s);
    if (!(v >= 0.0) || v != std::floor(v)) throw InvalidArgument("expected a count, got '" + s + "'");
    return static_cast<std::size_t>(v);
}

}  // namespace detail

inline const std::vector<std::string>& summary_header() {
    static const std::vector<std::string> h{"n", "estimator", "statistic", "value"};
    return h;
}

inline const std::vector<std::string>& histogram_header() {
    static const std::vector<std::string> h{"n", "estimator", "bin_lo", "bin_hi", "count_true", "count_estimated"};
    return h;
}

struct ExportPaths {
    std::filesystem::path summary;
    std::filesystem::path histograms;
};

inline ExportPaths export_summary(const StudySummary& summary, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    ExportPaths paths{dir / "summary.csv", dir / "histograms.csv"};
    csv::Writer s(paths.summary.string());
    s.row(summary_header());
    csv::Writer h(paths.histograms.string());
    h.row(histogram_header());
    for (const auto& c : summary.cells) {
        const std::string n = std::to_string(c.n);
        const std::string m(to_string(c.method));
        for (const auto& f : detail::stat_fields()) s.row({n, m, f.name, csv::format(f.get(c))});
        const auto& hist = c.histogram;
        h.row({n, m, "-inf", csv::format(hist.lo), std::to_string(hist.below_true), std::to_string(hist.below_estimated)});
        for (std::size_t b = 0; b < hist.counts_true.size(); ++b) {
            const double lo = hist.lo + hist.width * static_cast<double>(b);
            h.row({n, m, csv::format(lo), csv::format(lo + hist.width), std::to_string(hist.counts_true[b]),
                   std::to_string(hist.counts_estimated[b])});
        }
        const double hi = hist.lo + hist.width * static_cast<double>(hist.counts_true.size());
        h.row({n, m, csv::format(hi), "inf", std::to_string(hist.above_true), std::to_string(hist.above_estimated)});
    }
    s.close();
    h.close();
    return paths;
}

/// Reads back the files written by export_summary (the scenario name is not stored).
inline StudySummary read_summary(const std::filesystem::path& dir) {
    const auto s = csv::read((dir / "summary.csv").string());
    const auto h = csv::read((dir / "histograms.csv").string());
    if (s.header != summary_header()) throw InvalidArgument("unexpected summary.csv header");
    if (h.header != histogram_header()) throw InvalidArgument("unexpected histograms.csv header");

    StudySummary out;
    std::map<std::pair<std::size_t, std::string>, std::size_t> index;
    auto cell = [&](const std::string& n, const std::string& m) -> CellSummary& {
        auto key = std::make_pair(detail::parse_size(n), m);
        auto it = index.find(key);
        if (it == index.end()) {
            CellSummary c;
            c.n = key.first;
            c.method = parse_evi_method(m);
            it = index.emplace(key, out.cells.size()).first;
            out.cells.push_back(std::move(c));
        }
        return out.cells[it->second];
    };
    for (const auto& row : s.rows) {
        auto& c = cell(row[0], row[1]);
        bool known = false;
        for (const auto& f : detail::stat_fields()) {
            if (row[2] == f.name) {
                f.set(c, csv::parse_double(row[3], "summary.csv"));
                known = true;
            }
        }
        if (!known) throw InvalidArgument("unknown statistic '" + row[2] + "' in summary.csv");
    }
    for (const auto& row : h.rows) {
        auto& c = cell(row[0], row[1]);
        const auto ct = detail::parse_size(row[4]);
        const auto ce = detail::parse_size(row[5]);
        if (row[2] == "-inf") {
            c.histogram.below_true = ct;
            c.histogram.below_estimated = ce;
        } else if (row[3] == "inf") {
            c.histogram.above_true = ct;
            c.histogram.above_estimated = ce;
        } else {
            c.histogram.counts_true.push_back(ct);
            c.histogram.counts_estimated.push_back(ce);
        }
    }
    return out;
}

inline void export_records(const std::vector<ReplicationRecord>& records, const ScenarioSpec& spec,
                           const std::filesystem::path& path) {
    csv::Writer w(path.string());
    w.row({"n", "replicate", "estimator", "max_true", "max_estimated", "md_index", "unmixer_ok"});
    auto opt = [](const std::optional<double>& v) { return v ? csv::format(*v) : std::string(); };
    for (const auto& r : records) {
        for (std::size_t e = 0; e < r.estimates.size(); ++e) {
            w.row({std::to_string(r.n), std::to_string(r.replicate), std::string(to_string(spec.estimators[e])),
                   opt(r.estimates[e].max_true), opt(r.estimates[e].max_estimated), csv::format(r.md_index),
                   r.unmixer_ok ? "1" : "0"});
        }
    }
    w.close();
}

}  // namespace latent_evi
