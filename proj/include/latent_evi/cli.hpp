#pragma once

// Command-line front end. Each subcommand is also callable as a function taking a config
// struct, which is what the tests use.
//
// Exit codes: 0 success, 1 runtime failure or property violation, 2 usage or configuration error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "latent_evi/check.hpp"
#include "latent_evi/report.hpp"
#include "latent_evi/rolling.hpp"
#include "latent_evi/scenario.hpp"

namespace latent_evi::cli {

inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

inline constexpr const char* kSeedEnv = "LATENT_EVI_SEED";

/// Seed from LATENT_EVI_SEED, if set. A malformed value is a configuration error.
inline std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv(kSeedEnv);
    if (!v || !*v) return std::nullopt;
    try {
        std::size_t used = 0;
        const auto s = std::stoull(v, &used);
        if (used != std::string(v).size()) throw std::invalid_argument(v);
        return s;
    } catch (const std::exception&) {
        throw ConfigError(std::string(kSeedEnv) + " is not a nonnegative integer: '" + v + "'");
    }
}

namespace detail {

inline std::string fmt(double v, const char* spec = "%.4f") {
    if (std::isnan(v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto comma = s.find(',', start);
        if (comma == std::string::npos) comma = s.size();
        if (comma > start) out.push_back(s.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

/// Runs `body`, mapping library errors onto exit codes.
template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace detail

/// A bundled scenario name or a path to a JSON file. A file without a "seed" field takes the
/// seed from LATENT_EVI_SEED when that is set.
inline ScenarioSpec resolve_scenario(const std::string& name_or_path) {
    if (auto s = bundled_scenario(name_or_path)) return *s;
    std::string stem = std::filesystem::path(name_or_path).stem().string();
    if (!std::filesystem::exists(name_or_path)) {
        if (auto s = bundled_scenario(stem)) return *s;
        throw ConfigError("no scenario file '" + name_or_path + "' and no bundled scenario of that name");
    }
    std::ifstream in(name_or_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(name_or_path + ": invalid JSON: " + e.what());
    }
    if (j.is_object() && !j.contains("seed")) {
        if (auto s = env_seed()) j["seed"] = *s;
    }
    auto spec = scenario_from_json(j);
    if (spec.name.empty()) spec.name = stem;
    return spec;
}

// ---------------------------------------------------------------------------------------------
// simulate

struct SimulateConfig {
    std::string scenario;
    std::string out_dir;  // default: "<scenario name>-out"
    std::optional<std::size_t> replications;
    std::vector<std::size_t> sizes;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    bool records = false;
    bool quiet = false;
};

inline void print_summary(const StudySummary& s, std::ostream& out) {
    out << "scenario " << s.scenario << "\n";
    char line[256];
    std::snprintf(line, sizeof line, "%8s %-7s %4s %5s %9s %9s %9s %7s %7s %9s %9s %6s\n", "n", "method", "k_n", "reps",
                  "q1", "median", "q3", "agree", "overlap", "mean_z", "mean_zhat", "md");
    out << line;
    for (const auto& c : s.cells) {
        std::snprintf(line, sizeof line, "%8zu %-7s %4zu %5zu %9s %9s %9s %7s %7s %9s %9s %6s\n", c.n,
                      std::string(to_string(c.method)).c_str(), c.k_n, c.replications, detail::fmt(c.q1).c_str(),
                      detail::fmt(c.median).c_str(), detail::fmt(c.q3).c_str(),
                      detail::fmt(c.agreement_fraction, "%.3f").c_str(), detail::fmt(c.overlap, "%.3f").c_str(),
                      detail::fmt(c.mean_true).c_str(), detail::fmt(c.mean_estimated).c_str(),
                      detail::fmt(c.median_md_index, "%.3f").c_str());
        out << line;
    }
}

inline void write_rate(const RateDiagnostic& d, const std::filesystem::path& path) {
    csv::Writer w(path.string());
    w.row({"n", "k_n", "consistency_ratio", "normality_ratio"});
    for (std::size_t i = 0; i < d.n.size(); ++i)
        w.row({std::to_string(d.n[i]), std::to_string(d.k_n[i]), csv::format(d.consistency_ratio[i]),
               csv::format(d.normality_ratio[i])});
    w.close();
}

inline void print_rate(const RateDiagnostic& d, std::ostream& out) {
    out << "rate diagnostic: gamma_max = " << d.gamma_max << ", c_n = n^" << d.c_exponent
        << ", k_n = " << to_string(d.tail) << "\n";
    for (std::size_t i = 0; i < d.n.size(); ++i)
        out << "  n = " << d.n[i] << "  k_n = " << d.k_n[i] << "  n^g/c_n = " << detail::fmt(d.consistency_ratio[i], "%.6g")
            << "  sqrt(k_n) n^g/c_n = " << detail::fmt(d.normality_ratio[i], "%.6g") << "\n";
    out << "consistency verdict: " << (d.consistency ? "true" : "false") << "\n";
    out << "normality verdict: " << (d.normality ? "true" : "false") << "\n";
}

inline int cmd_simulate(const SimulateConfig& cfg, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        auto spec = resolve_scenario(cfg.scenario);
        if (cfg.replications) spec.replications = *cfg.replications;
        if (!cfg.sizes.empty()) spec.sample_sizes = cfg.sizes;
        if (cfg.seed) spec.seed.root = *cfg.seed;
        spec.validate();
        const std::filesystem::path dir = cfg.out_dir.empty() ? spec.name + "-out" : cfg.out_dir;

        StudySummary summary;
        summary.scenario = spec.name;
        std::vector<ReplicationRecord> all;
        try {
            for (auto n : spec.sample_sizes) {
                auto recs = run_replications(spec, n, cfg.threads);
                auto cells = summarize(spec, n, recs);
                summary.cells.insert(summary.cells.end(), cells.begin(), cells.end());
                if (cfg.records) all.insert(all.end(), recs.begin(), recs.end());
            }
        } catch (const InvalidArgument& e) {
            // Data-dependent failures inside the study are runtime errors, not usage errors.
            throw Error(e.what());
        }
        const auto paths = export_summary(summary, dir);
        if (cfg.records) export_records(all, spec, dir / "records.csv");
        std::ofstream(dir / "scenario.json") << scenario_to_json(spec).dump(2) << "\n";
        if (!cfg.quiet) {
            print_summary(summary, out);
            out << "wrote " << paths.summary.string() << " and " << paths.histograms.string() << "\n";
        }
        if (spec.rate) {
            const auto d = rate_diagnostic(spec, spec.rate->gamma_max, spec.rate->c_exponent);
            write_rate(d, dir / "rate.csv");
            if (!cfg.quiet) print_rate(d, out);
        }
        return kOk;
    });
}

// ---------------------------------------------------------------------------------------------
// estimate

struct EstimateConfig {
    std::string input;
    std::string unmixer;  // empty: fobi for p > 1, identity for p = 1
    std::string tail = "power:0.25";
    std::string estimators = "hill,moment";
    std::string json_out;
    std::string csv_out;
    bool quiet = false;
};

struct ComponentEstimate {
    std::string component;
    EviMethod method = EviMethod::hill;
    std::optional<double> gamma_hat;
    std::string status;  // ok, point_mass_at_zero, degenerate_tail
};

struct EstimateReport {
    std::size_t n = 0;
    std::size_t p = 0;
    std::string unmixer;
    std::string tail;
    std::size_t k_n = 0;
    bool k_clamped = false;
    bool degenerate_spectrum = false;
    bool converged = true;
    std::vector<ComponentEstimate> rows;

    nlohmann::json to_json() const {
        nlohmann::json j{{"n", n},           {"p", p}, {"unmixer", unmixer}, {"tail", tail}, {"k_n", k_n},
                         {"k_clamped", k_clamped}, {"degenerate_spectrum", degenerate_spectrum},
                         {"converged", converged}};
        j["estimates"] = nlohmann::json::array();
        for (const auto& r : rows) {
            nlohmann::json e{{"component", r.component}, {"method", std::string(to_string(r.method))}, {"status", r.status}};
            e["gamma_hat"] = r.gamma_hat ? nlohmann::json(*r.gamma_hat) : nlohmann::json(nullptr);
            j["estimates"].push_back(e);
        }
        return j;
    }
};

/// Numeric matrix from a CSV; a column named "date" or "Date" is ignored.
inline std::pair<std::vector<std::string>, Matrix> read_matrix_csv(const std::string& path) {
    const auto t = csv::read(path);
    std::vector<std::size_t> cols;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
        if (t.header[j] == "date" || t.header[j] == "Date") continue;
        cols.push_back(j);
        names.push_back(t.header[j]);
    }
    if (cols.empty()) throw InvalidArgument(path + ": no numeric columns");
    Matrix m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const double v = csv::parse_double(t.rows[i][cols[c]], path);
            if (!std::isfinite(v)) throw InvalidArgument(path + ": missing or non-finite value in row " + std::to_string(i + 2));
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
        }
    }
    return {names, m};
}

/// Unmixes the data and estimates the index of every component's absolute values.
inline EstimateReport estimate_components(const std::vector<std::string>& names, const Matrix& x,
                                          const UnmixerSpec& unmixer, const TailSpec& tail,
                                          const std::vector<EviMethod>& methods) {
    EstimateReport rep;
    rep.n = static_cast<std::size_t>(x.rows());
    rep.p = static_cast<std::size_t>(x.cols());
    rep.unmixer = to_string(unmixer);
    rep.tail = to_string(tail);
    if (rep.n < 2) throw InvalidArgument("need at least 2 rows");
    const auto k = resolve_threshold_checked(tail, rep.n);
    rep.k_n = k.k;
    rep.k_clamped = k.clamped;

    const auto res = run_unmixer(x, unmixer);
    rep.degenerate_spectrum = res.degenerate_spectrum;
    rep.converged = res.converged;
    // Identity means no unmixing at all: the raw columns are estimated, not their centered versions.
    const bool named = unmixer.kind == UnmixerSpec::Kind::identity;
    const Matrix z = named ? x : unmix(x, res);

    std::vector<double> col(rep.n);
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        for (Eigen::Index i = 0; i < z.rows(); ++i) col[static_cast<std::size_t>(i)] = std::abs(z(i, c));
        const auto label = named ? names[static_cast<std::size_t>(c)] : "factor" + std::to_string(c + 1);
        for (auto m : methods) {
            ComponentEstimate e{label, m, std::nullopt, "ok"};
            try {
                e.gamma_hat = estimate(m, col, tail).gamma_hat;
            } catch (const PointMassAtZero&) {
                e.status = "point_mass_at_zero";
            } catch (const DegenerateTail&) {
                e.status = "degenerate_tail";
            }
            rep.rows.push_back(e);
        }
    }
    return rep;
}

inline int cmd_estimate(const EstimateConfig& cfg, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto tail = parse_tail_spec(cfg.tail);
        std::vector<EviMethod> methods;
        for (const auto& m : detail::split_list(cfg.estimators)) methods.push_back(parse_evi_method(m));
        if (methods.empty()) throw ConfigError("no estimators given");
        const auto [names, x] = read_matrix_csv(cfg.input);
        UnmixerSpec unmixer = x.cols() == 1 ? UnmixerSpec::identity()
                              : cfg.unmixer.empty() ? UnmixerSpec::fobi()
                                                    : parse_unmixer(cfg.unmixer);
        if (x.cols() == 1 && !cfg.unmixer.empty() && cfg.unmixer != "identity")
            err << "note: single column, unmixing skipped\n";

        const auto rep = estimate_components(names, x, unmixer, tail, methods);
        if (!cfg.json_out.empty()) {
            std::ofstream f(cfg.json_out);
            if (!f) throw Error("cannot write '" + cfg.json_out + "'");
            f << rep.to_json().dump(2) << "\n";
        }
        if (!cfg.csv_out.empty()) {
            csv::Writer w(cfg.csv_out);
            w.row({"component", "method", "gamma_hat", "k_n", "status"});
            for (const auto& r : rep.rows)
                w.row({r.component, std::string(to_string(r.method)), r.gamma_hat ? csv::format(*r.gamma_hat) : "",
                       std::to_string(rep.k_n), r.status});
            w.close();
        }
        if (!cfg.quiet) {
            out << "n = " << rep.n << ", p = " << rep.p << ", unmixer " << rep.unmixer << ", k_n = " << rep.k_n
                << (rep.k_clamped ? " (clamped)" : "") << "\n";
            if (rep.degenerate_spectrum) out << "warning: unmixer spectrum is degenerate; components may be mixed\n";
            if (!rep.converged) out << "warning: joint diagonalization did not converge\n";
            for (const auto& r : rep.rows)
                out << "  " << r.component << "  " << to_string(r.method) << "  "
                    << (r.gamma_hat ? detail::fmt(*r.gamma_hat, "%.6f") : std::string("NA")) << "  " << r.status << "\n";
        }
        return kOk;
    });
}

// ---------------------------------------------------------------------------------------------
// rolling

struct RollingConfig {
    std::string input;
    std::string out_dir = "rolling-out";
    std::size_t window = 60;
    std::size_t k = 16;
    std::string tails = "left,right";
    std::string factors = "sobi";  // unmixer spec, or "none"
    std::string method = "hill";
    bool returns = false;  // input columns are already returns
    bool standardize = true;
    bool quiet = false;
};

inline int cmd_rolling(const RollingConfig& cfg, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        const auto method = parse_evi_method(cfg.method);
        std::vector<Tail> tails;
        for (const auto& t : detail::split_list(cfg.tails)) tails.push_back(parse_tail(t));
        if (tails.empty()) throw ConfigError("no tails given");
        std::optional<UnmixerSpec> unmixer;
        if (cfg.factors != "none") unmixer = parse_unmixer(cfg.factors);
        if (!std::filesystem::exists(cfg.input)) throw ConfigError("input file '" + cfg.input + "' does not exist");
        const auto table = read_series_table(cfg.input);

        // Returns matrix (rows aligned with `dates`).
        std::vector<std::string> dates;
        const auto p = table.values.cols();
        Matrix r;
        if (cfg.returns) {
            dates = table.dates;
            r = table.values;
        } else {
            if (table.values.rows() < 2) throw InvalidArgument("need at least 2 prices");
            dates.assign(table.dates.begin() + 1, table.dates.end());
            r.resize(table.values.rows() - 1, p);
            for (Eigen::Index j = 0; j < p; ++j) {
                const auto col = table.column(j);
                const auto lr = log_returns(std::span<const double>(col));
                r.col(j) = Eigen::Map<const Vector>(lr.data(), static_cast<Eigen::Index>(lr.size()));
            }
        }
        if (cfg.standardize) {
            for (Eigen::Index j = 0; j < p; ++j) {
                std::vector<double> col(r.col(j).data(), r.col(j).data() + r.rows());
                const auto s = standardize(col);
                r.col(j) = Eigen::Map<const Vector>(s.data(), r.rows());
            }
        }
        const auto n = static_cast<std::size_t>(r.rows());
        if (cfg.window > n) throw InvalidArgument("window " + std::to_string(cfg.window) + " exceeds the " + std::to_string(n) + " returns");
        if (cfg.k < 1 || cfg.k >= cfg.window) throw InvalidArgument("k must satisfy 1 <= k < window");

        std::filesystem::create_directories(cfg.out_dir);
        const std::filesystem::path dir = cfg.out_dir;
        csv::Writer traces((dir / "traces.csv").string());
        traces.row({"series", "source", "tail", "method", "window", "k", "center_index", "date", "gamma_hat"});
        std::size_t rows = 0, missing = 0;
        auto emit = [&](const std::string& name, const char* source, const Matrix& data, Eigen::Index j) {
            std::vector<double> col(data.col(j).data(), data.col(j).data() + data.rows());
            for (auto tail : tails) {
                const auto tr = rolling_evi(col, cfg.window, cfg.k, tail, method);
                for (std::size_t i = 0; i < tr.estimates.size(); ++i) {
                    traces.row({name, source, std::string(to_string(tail)), std::string(to_string(method)),
                                std::to_string(cfg.window), std::to_string(cfg.k), std::to_string(tr.center_index[i]),
                                dates[tr.center_index[i]], tr.estimates[i] ? csv::format(*tr.estimates[i]) : ""});
                }
                rows += tr.estimates.size();
                missing += tr.missing();
            }
        };
        for (Eigen::Index j = 0; j < p; ++j) emit(table.names[static_cast<std::size_t>(j)], "series", r, j);

        if (unmixer) {
            const auto fa = factor_analysis(r, *unmixer);
            for (Eigen::Index j = 0; j < p; ++j) emit("factor" + std::to_string(j + 1), "factor", fa.latents, j);

            csv::Writer lw((dir / "loadings.csv").string());
            std::vector<std::string> header{"series"};
            for (Eigen::Index j = 0; j < p; ++j) header.push_back("factor" + std::to_string(j + 1));
            lw.row(header);
            for (Eigen::Index i = 0; i < p; ++i) {
                std::vector<std::string> row{table.names[static_cast<std::size_t>(i)]};
                for (Eigen::Index j = 0; j < p; ++j) row.push_back(csv::format(fa.loadings(i, j)));
                lw.row(row);
            }
            lw.close();

            csv::Writer fw((dir / "factors.csv").string());
            header[0] = "date";
            fw.row(header);
            for (Eigen::Index i = 0; i < fa.latents.rows(); ++i) {
                std::vector<std::string> row{dates[static_cast<std::size_t>(i)]};
                for (Eigen::Index j = 0; j < p; ++j) row.push_back(csv::format(fa.latents(i, j)));
                fw.row(row);
            }
            fw.close();
            if (!cfg.quiet && fa.unmixing.degenerate_spectrum)
                out << "warning: unmixer spectrum is degenerate; factors may be mixed\n";
        }
        traces.close();
        if (!cfg.quiet) {
            out << n << " returns, " << p << " series, window " << cfg.window << ", k " << cfg.k << "\n";
            out << "wrote " << rows << " trace rows (" << missing << " missing) to " << (dir / "traces.csv").string()
                << "\n";
        }
        return kOk;
    });
}

// ---------------------------------------------------------------------------------------------
// check

struct CheckConfig {
    std::string scenario;  // optional: adds the rate diagnostic of this scenario
    std::size_t instances = 10000;
    std::size_t samples = 1000;
    std::optional<std::uint64_t> seed;
    std::optional<double> gamma_max;
    std::optional<double> c_exponent;
    OrderStatistic order = default_order_statistic();
    bool quiet = false;
};

inline int cmd_check(const CheckConfig& cfg, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        std::optional<ScenarioSpec> spec;
        if (!cfg.scenario.empty()) spec = resolve_scenario(cfg.scenario);
        std::optional<RateInputs> rate;
        if (spec && spec->rate) rate = spec->rate;
        if (cfg.gamma_max || cfg.c_exponent) {
            if (!spec) throw ConfigError("--gamma-max/--c-exponent need --scenario");
            if (!rate && !(cfg.gamma_max && cfg.c_exponent))
                throw ConfigError("scenario has no rate inputs; give both --gamma-max and --c-exponent");
            if (!rate) rate = RateInputs{};
            if (cfg.gamma_max) rate->gamma_max = *cfg.gamma_max;
            if (cfg.c_exponent) rate->c_exponent = *cfg.c_exponent;
        }

        const std::uint64_t root = cfg.seed ? *cfg.seed : env_seed().value_or(7);
        BatteryOptions opt;
        opt.instances = cfg.instances;
        opt.seed.root = root;
        bool ok = true;
        for (const auto& res : {monotone_order_battery(opt, cfg.order), weyl_battery(opt, cfg.order)}) {
            if (!cfg.quiet)
                out << res.name << ": " << res.instances << " instances, " << res.comparisons << " comparisons, "
                    << res.violations << " violations\n";
            if (!res.passed()) {
                ok = false;
                err << res.name << " violated: " << res.first_violation->describe() << "\n";
            }
        }
        const auto scale = scale_invariance_battery(cfg.samples, Seed{root});
        if (!cfg.quiet)
            out << "scale-invariance: " << scale.samples << " samples, max |diff| hill " << scale.max_abs_diff_hill
                << ", moment " << scale.max_abs_diff_moment << " (tolerance " << scale.tolerance << ")\n";
        if (!scale.passed()) {
            ok = false;
            err << "scale invariance violated\n";
        }
        if (spec && rate) {
            print_rate(rate_diagnostic(*spec, rate->gamma_max, rate->c_exponent), out);
        } else if (spec) {
            out << "scenario " << spec->name << " has no rate inputs\n";
        }
        return ok ? kOk : kFailure;
    });
}

// ---------------------------------------------------------------------------------------------

/// Parses argv and dispatches to the subcommands.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Extreme value index estimation for latent components of multivariate series", "latent_evi"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Print progress details");

    SimulateConfig sim;
    std::string sim_sizes;
    auto* s = app.add_subcommand("simulate", "Run a Monte Carlo study from a scenario");
    s->add_option("--scenario", sim.scenario, "Scenario JSON file or bundled name (paper-sec5, paper-appB)")->required();
    s->add_option("--out", sim.out_dir, "Output directory (default <name>-out)");
    s->add_option("--replications", sim.replications, "Override the replication count");
    s->add_option("--sizes", sim_sizes, "Override sample sizes, comma separated");
    s->add_option("--seed", sim.seed, "Override the root seed");
    s->add_option("--threads", sim.threads, "Worker threads (results do not depend on this)")->check(CLI::PositiveNumber);
    s->add_flag("--records", sim.records, "Also write per-replicate records.csv");
    s->add_flag("-q,--quiet", sim.quiet, "No summary table");

    EstimateConfig est;
    auto* e = app.add_subcommand("estimate", "Unmix a data file and estimate per-component indices");
    e->add_option("--input", est.input, "CSV with one numeric column per series")->required();
    e->add_option("--unmixer", est.unmixer, "amuse[:TAU], sobi[:A-B|:t1,t2,..], fobi or identity");
    e->add_option("--tail", est.tail, "fixed:K, power:A, sqrt or log");
    e->add_option("--estimators", est.estimators, "Comma separated subset of hill,moment");
    e->add_option("--json", est.json_out, "Write the report as JSON");
    e->add_option("--csv", est.csv_out, "Write the report as CSV");
    e->add_flag("-q,--quiet", est.quiet, "No table on stdout");

    RollingConfig rol;
    auto* r = app.add_subcommand("rolling", "Rolling-window tail estimates for series and their latent factors");
    r->add_option("--input", rol.input, "CSV: date column plus one column per series")->required();
    r->add_option("--out", rol.out_dir, "Output directory");
    r->add_option("--window", rol.window, "Window length");
    r->add_option("--k", rol.k, "Number of upper order statistics");
    r->add_option("--tails", rol.tails, "Comma separated subset of left,right,abs");
    r->add_option("--factors", rol.factors, "Unmixer for the factor traces, or none");
    r->add_option("--method", rol.method, "hill or moment");
    auto* as_prices = r->add_flag("--prices", "Input columns are prices (default)");
    auto* as_returns = r->add_flag("--returns", rol.returns, "Input columns are already returns");
    as_prices->excludes(as_returns);
    bool raw = false;
    r->add_flag("--no-standardize", raw, "Skip unit-variance standardization");
    r->add_flag("-q,--quiet", rol.quiet, "No summary on stdout");

    CheckConfig chk;
    auto* c = app.add_subcommand("check", "Run the order-statistic property batteries and a rate diagnostic");
    c->add_option("--scenario", chk.scenario, "Scenario whose rate inputs to diagnose");
    c->add_option("--instances", chk.instances, "Instances per property battery");
    c->add_option("--samples", chk.samples, "Samples for the scale-invariance battery");
    c->add_option("--seed", chk.seed, "Root seed");
    c->add_option("--gamma-max", chk.gamma_max, "Override the heaviest theoretical index");
    c->add_option("--c-exponent", chk.c_exponent, "Override the exponent of c_n");
    c->add_flag("-q,--quiet", chk.quiet, "Only report failures");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kOk : kUsage;
    }
    if (verbose) err << "latent_evi: running " << app.get_subcommands().front()->get_name() << "\n";

    if (s->parsed()) {
        try {
            for (const auto& v : detail::split_list(sim_sizes)) {
                std::size_t used = 0;
                const auto n = std::stoull(v, &used);
                if (used != v.size()) throw std::invalid_argument(v);
                sim.sizes.push_back(n);
            }
        } catch (const std::exception&) {
            err << "error: --sizes must be a comma separated list of integers\n";
            return kUsage;
        }
        return cmd_simulate(sim, out, err);
    }
    if (e->parsed()) return cmd_estimate(est, out, err);
    if (r->parsed()) {
        rol.standardize = !raw;
        return cmd_rolling(rol, out, err);
    }
    return cmd_check(chk, out, err);
}

}  // namespace latent_evi::cli
