#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "latent_evi/report.hpp"
#include "latent_evi/scenario.hpp"

using namespace latent_evi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("latent_evi_report_" + name);
    fs::remove_all(p);
    return p;
}

bool same_number(double a, double b) { return (std::isnan(a) && std::isnan(b)) || std::abs(a - b) <= 1e-15 * std::max(1.0, std::abs(a)); }

ScenarioSpec tiny() {
    ScenarioSpec s;
    s.name = "tiny";
    s.components = {GeneratorSpec::pareto(3, "a"), GeneratorSpec::pareto(8, "b")};
    s.sample_sizes = {200, 400};
    s.replications = 5;
    s.seed = Seed{3};
    return s;
}

}  // namespace

TEST(Report, SummaryRoundTrip) {
    const auto study = run_study(tiny());
    const auto dir = scratch("roundtrip");
    const auto paths = export_summary(study, dir);
    EXPECT_TRUE(fs::exists(paths.summary));
    EXPECT_TRUE(fs::exists(paths.histograms));
    const auto back = read_summary(dir);
    ASSERT_EQ(back.cells.size(), study.cells.size());
    for (std::size_t i = 0; i < back.cells.size(); ++i) {
        const auto& a = study.cells[i];
        const auto& b = back.cells[i];
        EXPECT_EQ(a.n, b.n);
        EXPECT_EQ(a.method, b.method);
        EXPECT_EQ(a.k_n, b.k_n);
        EXPECT_EQ(a.paired, b.paired);
        EXPECT_EQ(a.missing_true, b.missing_true);
        for (auto [x, y] : {std::pair{a.q1, b.q1}, {a.median, b.median}, {a.q3, b.q3},
                            {a.agreement_fraction, b.agreement_fraction}, {a.overlap, b.overlap},
                            {a.mean_true, b.mean_true}, {a.median_md_index, b.median_md_index}})
            EXPECT_TRUE(same_number(x, y)) << x << " vs " << y;
        EXPECT_EQ(a.histogram.counts_true, b.histogram.counts_true);
        EXPECT_EQ(a.histogram.counts_estimated, b.histogram.counts_estimated);
        EXPECT_EQ(a.histogram.below_true, b.histogram.below_true);
        EXPECT_EQ(a.histogram.above_estimated, b.histogram.above_estimated);
    }
    fs::remove_all(dir);
}

TEST(Report, HistogramRowsCoverTheRange) {
    const auto study = run_study(tiny());
    const auto dir = scratch("hist");
    export_summary(study, dir);
    const auto h = csv::read((dir / "histograms.csv").string());
    EXPECT_EQ(h.header, histogram_header());
    // 80 bins of width 0.05 on [-2, 2] plus the two open-ended tallies, per cell.
    EXPECT_EQ(h.rows.size(), study.cells.size() * 82);
    EXPECT_EQ(h.rows[0][2], "-inf");
    EXPECT_EQ(h.rows[81][3], "inf");
    EXPECT_DOUBLE_EQ(csv::parse_double(h.rows[1][2]), -2.0);
    EXPECT_DOUBLE_EQ(csv::parse_double(h.rows[80][3]), 2.0);
    fs::remove_all(dir);
}

TEST(Report, EmptyStudyWritesHeadersOnly) {
    const auto dir = scratch("empty");
    export_summary(StudySummary{}, dir);
    EXPECT_TRUE(read_summary(dir).cells.empty());
    fs::remove_all(dir);
}

TEST(Report, RejectsForeignFiles) {
    const auto dir = scratch("foreign");
    fs::create_directories(dir);
    std::ofstream(dir / "summary.csv") << "a,b\n1,2\n";
    std::ofstream(dir / "histograms.csv") << "n,estimator,bin_lo,bin_hi,count_true,count_estimated\n";
    EXPECT_THROW(read_summary(dir), InvalidArgument);
    std::ofstream(dir / "summary.csv") << "n,estimator,statistic,value\n100,hill,bogus,1\n";
    EXPECT_THROW(read_summary(dir), InvalidArgument);
    fs::remove_all(dir);
}

TEST(Report, RecordsFile) {
    const auto spec = tiny();
    const auto recs = run_replications(spec, 200);
    const auto dir = scratch("records");
    fs::create_directories(dir);
    export_records(recs, spec, dir / "records.csv");
    const auto t = csv::read((dir / "records.csv").string());
    EXPECT_EQ(t.header, (std::vector<std::string>{"n", "replicate", "estimator", "max_true", "max_estimated",
                                                  "md_index", "unmixer_ok"}));
    ASSERT_EQ(t.rows.size(), 10u);
    EXPECT_EQ(t.rows[3][1], "1");
    EXPECT_EQ(t.rows[3][2], "moment");
    EXPECT_NEAR(csv::parse_double(t.rows[0][3]), *recs[0].estimates[0].max_true, 1e-15);
    fs::remove_all(dir);
}

TEST(Scenario, JsonRoundTripOfBundledDesigns) {
    for (const char* name : {"paper-sec5", "paper-appB"}) {
        const auto s = bundled_scenario(name).value();
        const auto back = scenario_from_json(scenario_to_json(s));
        EXPECT_EQ(scenario_to_json(back), scenario_to_json(s)) << name;
        EXPECT_EQ(back.components, s.components);
        EXPECT_EQ(back.unmixer, s.unmixer);
        EXPECT_EQ(back.sample_sizes, s.sample_sizes);
        EXPECT_EQ(back.seed.root, s.seed.root);
    }
    EXPECT_FALSE(bundled_scenario("nope"));
}

TEST(Scenario, BundledFilesMatchBuiltIns) {
    for (const char* name : {"paper-sec5", "paper-appB"}) {
        const auto path = std::string(LATENT_EVI_SOURCE_DIR) + "/scenarios/" + name + ".json";
        const auto file = load_scenario_file(path);
        EXPECT_EQ(scenario_to_json(file), scenario_to_json(bundled_scenario(name).value())) << name;
    }
}

TEST(Scenario, DependentDesignParameters) {
    const auto s = dependent_series_scenario();
    ASSERT_EQ(s.components.size(), 3u);
    EXPECT_EQ(s.components[0].kind, GeneratorSpec::Kind::arch1);
    EXPECT_DOUBLE_EQ(s.components[0].alpha0, 0.25);
    EXPECT_NEAR(s.components[0].alpha1, std::pow(8.0 * std::sqrt(2.0 / 3.141592653589793), -0.4), 1e-15);
    EXPECT_DOUBLE_EQ(s.components[1].hurst, 0.75);
    EXPECT_DOUBLE_EQ(s.components[2].hurst, 0.8);
    EXPECT_EQ(s.unmixer, UnmixerSpec::amuse(1));
    EXPECT_EQ(s.tail, TailSpec::power(0.25));
    EXPECT_EQ(s.replications, 200u);
    const auto b = iid_pareto_scenario();
    EXPECT_EQ(b.unmixer, UnmixerSpec::fobi());
    EXPECT_DOUBLE_EQ(b.components[2].alpha, 30.0);
    EXPECT_DOUBLE_EQ(b.mixing.lo, -100.0);
    EXPECT_DOUBLE_EQ(b.mixing.hi, 100.0);
}

TEST(Scenario, StrictParsing) {
    const std::string ok = R"({"name":"x","components":[{"kind":"pareto","alpha":2},{"kind":"gaussian"}],
        "sample_sizes":[100],"replications":3,"unmixer":{"kind":"sobi","lags":[1,2,3]},
        "tail":{"rule":"fixed","k":5},"seed":9})";
    const auto s = parse_scenario(ok);
    EXPECT_EQ(s.components.size(), 2u);
    EXPECT_EQ(s.tail, TailSpec::fixed(5));
    EXPECT_EQ(s.seed.root, 9u);
    for (const char* bad : {
             R"({"components":[{"kind":"pareto","alpha":2}],"unmixer":{"kind":"fobi"},"sample_sizes":[100],"typo":1})",
             R"({"components":[{"kind":"pareto","alpha":2,"beta":1}],"unmixer":{"kind":"fobi"},"sample_sizes":[100]})",
             R"({"components":[{"kind":"cauchy"}],"unmixer":{"kind":"fobi"},"sample_sizes":[100]})",
             R"({"components":[{"kind":"pareto","alpha":"2"}],"unmixer":{"kind":"fobi"},"sample_sizes":[100]})",
             R"({"components":[{"kind":"pareto","alpha":2}],"unmixer":{"kind":"fobi"},"sample_sizes":[-5]})",
             R"({"components":[{"kind":"pareto","alpha":2}],"unmixer":{"kind":"fobi"},"sample_sizes":[1.5]})",
             R"({"components":[{"kind":"pareto","alpha":-2}],"unmixer":{"kind":"fobi"},"sample_sizes":[100]})",
             R"({"components":[{"kind":"pareto","alpha":2}],"unmixer":{"kind":"fobi"}})",
             R"({"components":[{"kind":"pareto","alpha":2}],"unmixer":{"kind":"sobi","lags":[]},"sample_sizes":[100]})",
             R"({"components":[{"kind":"pareto","alpha":2}],"unmixer":{"kind":"fobi"},"sample_sizes":[100],"seed":-1})",
             R"([1,2])",
             R"({not json)"})
        EXPECT_THROW(parse_scenario(bad), ConfigError) << bad;
}
