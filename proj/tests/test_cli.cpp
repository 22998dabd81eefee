#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "latent_evi/cli.hpp"
#include "latent_evi/simulate.hpp"

using namespace latent_evi;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "latent_evi");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
protected:
    fs::path dir;
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("latent_evi_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        unsetenv(cli::kSeedEnv);
    }
    void TearDown() override {
        fs::remove_all(dir);
        unsetenv(cli::kSeedEnv);
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

void write_prices(const std::string& path, std::size_t days, std::size_t p) {
    std::ofstream f(path);
    f << "date";
    for (std::size_t j = 0; j < p; ++j) f << ",s" << j + 1;
    f << "\n";
    std::vector<double> level(p, 100.0);
    std::vector<std::vector<double>> shocks;
    for (std::size_t j = 0; j < p; ++j)
        shocks.push_back(pareto_sample(4.0, days, Seed{77}.substream(static_cast<std::uint32_t>(j), 0)));
    StreamRng sign(Seed{77}.substream(99, 0));
    for (std::size_t d = 0; d < days; ++d) {
        // 28-day months keep every date valid and increasing.
        const std::size_t year = 2000 + d / 336, rem = d % 336;
        char date[16];
        std::snprintf(date, sizeof date, "%04zu-%02zu-%02zu", year, rem / 28 + 1, rem % 28 + 1);
        f << date;
        for (std::size_t j = 0; j < p; ++j) {
            const double r = 0.01 * (shocks[j][d] - 4.0 / 3.0) * (sign.uniform() < 0.5 ? -1.0 : 1.0);
            level[j] *= std::exp(r + 0.003 * static_cast<double>(j) * (d % 5 == 0));
            f << "," << csv::format(level[j]);
        }
        f << "\n";
    }
}

}  // namespace

TEST_F(CliTest, HelpAndUsageErrors) {
    EXPECT_EQ(run_cli({"--help"}).code, 0);
    EXPECT_EQ(run_cli({}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"simulate"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"simulate", "--scenario", "paper-sec5", "--sizes", "10,x"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"simulate", "--scenario", "nope.json"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"rolling", "--input", "a.csv", "--prices", "--returns"}).code, cli::kUsage);
}

TEST_F(CliTest, SimulateSmokeRun) {
    const auto out = path("sim");
    const auto r = run_cli({"simulate", "--scenario", "paper-appB", "--replications", "1", "--sizes", "300", "--out",
                            out, "--records"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("scenario paper-appB"), std::string::npos);
    EXPECT_NE(r.out.find("consistency verdict: true"), std::string::npos);
    for (const char* f : {"summary.csv", "histograms.csv", "records.csv", "scenario.json", "rate.csv"})
        EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
    const auto summary = read_summary(out);
    ASSERT_EQ(summary.cells.size(), 2u);
    EXPECT_EQ(summary.cells[0].n, 300u);
    EXPECT_EQ(summary.cells[0].replications, 1u);

    // The written scenario reproduces the run byte for byte.
    const auto again = path("sim2");
    ASSERT_EQ(run_cli({"simulate", "--scenario", (fs::path(out) / "scenario.json").string(), "--out", again, "-q"}).code, 0);
    EXPECT_EQ(slurp(fs::path(out) / "summary.csv"), slurp(fs::path(again) / "summary.csv"));
    EXPECT_EQ(slurp(fs::path(out) / "histograms.csv"), slurp(fs::path(again) / "histograms.csv"));
}

TEST_F(CliTest, SimulateThreadsDoNotChangeOutput) {
    const auto a = path("a"), b = path("b");
    ASSERT_EQ(run_cli({"simulate", "--scenario", "paper-sec5", "--replications", "4", "--sizes", "300", "--out", a, "-q"}).code, 0);
    ASSERT_EQ(run_cli({"simulate", "--scenario", "paper-sec5", "--replications", "4", "--sizes", "300", "--out", b, "-q",
                       "--threads", "3"}).code, 0);
    EXPECT_EQ(slurp(fs::path(a) / "summary.csv"), slurp(fs::path(b) / "summary.csv"));
}

TEST_F(CliTest, SeedFromEnvironmentOnlyWhenFileHasNone) {
    const auto cfg = path("s.json");
    std::ofstream(cfg) << R"({"name":"envtest","components":[{"kind":"pareto","alpha":3},{"kind":"pareto","alpha":6}],
        "unmixer":{"kind":"fobi"},"sample_sizes":[200],"replications":3})";
    auto run = [&](const std::string& out) {
        EXPECT_EQ(run_cli({"simulate", "--scenario", cfg, "--out", path(out), "-q"}).code, 0);
        return slurp(fs::path(path(out)) / "summary.csv");
    };
    setenv(cli::kSeedEnv, "101", 1);
    const auto s101 = run("e1");
    EXPECT_NE(slurp(fs::path(path("e1")) / "scenario.json").find("\"seed\": 101"), std::string::npos);
    setenv(cli::kSeedEnv, "202", 1);
    EXPECT_NE(run("e2"), s101);
    setenv(cli::kSeedEnv, "101", 1);
    EXPECT_EQ(run("e3"), s101);

    // Bundled scenarios carry their own seed.
    setenv(cli::kSeedEnv, "999", 1);
    ASSERT_EQ(run_cli({"simulate", "--scenario", "paper-appB", "--replications", "1", "--sizes", "300", "--out", path("b"), "-q"}).code, 0);
    EXPECT_NE(slurp(fs::path(path("b")) / "scenario.json").find("\"seed\": 2"), std::string::npos);

    setenv(cli::kSeedEnv, "abc", 1);
    EXPECT_EQ(run_cli({"simulate", "--scenario", cfg, "--out", path("bad"), "-q"}).code, cli::kUsage);
}

TEST_F(CliTest, InvalidScenarioFileIsUsageError) {
    const auto cfg = path("bad.json");
    std::ofstream(cfg) << R"({"components":[],"unmixer":{"kind":"fobi"},"sample_sizes":[100]})";
    const auto r = run_cli({"simulate", "--scenario", cfg});
    EXPECT_EQ(r.code, cli::kUsage);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
    std::ofstream(cfg) << "{";
    EXPECT_EQ(run_cli({"simulate", "--scenario", cfg}).code, cli::kUsage);
}

TEST_F(CliTest, EstimateSingleColumnIsUnivariate) {
    const auto y = pareto_sample(4.0, 1000, Seed{5}.substream(0, 0));
    const auto in = path("one.csv");
    {
        std::ofstream f(in);
        f << "x\n";
        for (double v : y) f << csv::format(v) << "\n";
    }
    const auto json_path = path("one.json"), csv_path = path("one_out.csv");
    const auto r = run_cli({"estimate", "--input", in, "--tail", "sqrt", "--json", json_path, "--csv", csv_path});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(json_path));
    EXPECT_EQ(j["unmixer"], "identity");
    EXPECT_EQ(j["k_n"], 31);
    EXPECT_EQ(j["estimates"][0]["component"], "x");
    // The CSV round trip is exact, so the result equals a library call on the same data.
    const auto parsed = csv::read(in);
    std::vector<double> back;
    for (const auto& row : parsed.rows) back.push_back(csv::parse_double(row[0]));
    EXPECT_EQ(j["estimates"][0]["gamma_hat"].get<double>(), hill(abs_values(back), TailSpec::square_root()).gamma_hat);
    EXPECT_EQ(j["estimates"][1]["gamma_hat"].get<double>(), moment(abs_values(back), TailSpec::square_root()).gamma_hat);
    const auto t = csv::read(csv_path);
    EXPECT_EQ(t.header, (std::vector<std::string>{"component", "method", "gamma_hat", "k_n", "status"}));
    EXPECT_EQ(t.rows.size(), 2u);
}

TEST_F(CliTest, EstimateMultiColumnMatchesLibrary) {
    const auto in = path("prices.csv");
    write_prices(in, 800, 4);
    const auto json_path = path("est.json");
    const auto r = run_cli({"estimate", "--input", in, "--unmixer", "sobi:1-3", "--json", json_path, "-q"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    const auto j = nlohmann::json::parse(slurp(json_path));
    EXPECT_EQ(j["p"], 4);
    ASSERT_EQ(j["estimates"].size(), 8u);
    EXPECT_EQ(j["estimates"][0]["component"], "factor1");

    const auto [names, x] = cli::read_matrix_csv(in);
    const auto rep = cli::estimate_components(names, x, parse_unmixer("sobi:1-3"), TailSpec::power(0.25),
                                              {EviMethod::hill, EviMethod::moment});
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        if (rep.rows[i].gamma_hat)
            EXPECT_EQ(j["estimates"][i]["gamma_hat"].get<double>(), *rep.rows[i].gamma_hat);
        else
            EXPECT_TRUE(j["estimates"][i]["gamma_hat"].is_null());
    }
}

TEST_F(CliTest, EstimateReportsDegenerateComponents) {
    const auto in = path("flat.csv");
    std::ofstream(in) << "a\n0\n0\n0\n0\n1\n2\n";
    const auto csv_path = path("flat_out.csv");
    ASSERT_EQ(run_cli({"estimate", "--input", in, "--tail", "fixed:2", "--csv", csv_path, "-q"}).code, 0);
    const auto t = csv::read(csv_path);
    EXPECT_EQ(t.rows[0][4], "point_mass_at_zero");
    EXPECT_EQ(t.rows[0][2], "");
    EXPECT_EQ(run_cli({"estimate", "--input", path("missing.csv")}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"estimate", "--input", in, "--tail", "cube"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"estimate", "--input", in, "--estimators", "pickands"}).code, cli::kUsage);
}

TEST_F(CliTest, RollingWritesTracesAndLoadings) {
    const auto in = path("prices.csv");
    write_prices(in, 400, 4);
    const auto out = path("roll");
    const auto r = run_cli({"rolling", "--input", in, "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto traces = csv::read((fs::path(out) / "traces.csv").string());
    EXPECT_EQ(traces.header, (std::vector<std::string>{"series", "source", "tail", "method", "window", "k",
                                                       "center_index", "date", "gamma_hat"}));
    // 399 returns, 340 windows; 4 series + 4 factors, 2 tails each.
    EXPECT_EQ(traces.rows.size(), 340u * 16u);
    EXPECT_EQ(traces.rows[0][6], "29");
    const auto loadings = csv::read((fs::path(out) / "loadings.csv").string());
    EXPECT_EQ(loadings.header, (std::vector<std::string>{"series", "factor1", "factor2", "factor3", "factor4"}));
    EXPECT_EQ(loadings.rows.size(), 4u);
    const auto factors = csv::read((fs::path(out) / "factors.csv").string());
    EXPECT_EQ(factors.rows.size(), 399u);
    EXPECT_EQ(factors.header[0], "date");

    // The first trace row reports the 30th return's date; returns are dated by their later price.
    const auto prices = csv::read(in);
    EXPECT_EQ(traces.rows[0][7], prices.rows[30][0]);
}

TEST_F(CliTest, RollingFullWindowIsSingleRow) {
    const auto in = path("prices.csv");
    write_prices(in, 101, 1);
    const auto out = path("roll");
    ASSERT_EQ(run_cli({"rolling", "--input", in, "--out", out, "--window", "100", "--k", "10", "--factors", "none",
                       "--tails", "right", "-q"}).code, 0);
    const auto traces = csv::read((fs::path(out) / "traces.csv").string());
    ASSERT_EQ(traces.rows.size(), 1u);
    EXPECT_FALSE(fs::exists(fs::path(out) / "loadings.csv"));
    EXPECT_EQ(run_cli({"rolling", "--input", in, "--out", out, "--window", "101", "--factors", "none"}).code, cli::kUsage);
}

TEST_F(CliTest, RollingMissingFileIsUsageError) {
    const auto r = run_cli({"rolling", "--input", path("nope.csv")});
    EXPECT_EQ(r.code, cli::kUsage);
    EXPECT_NE(r.err.find("does not exist"), std::string::npos);
}

TEST_F(CliTest, CheckDefaultRunPasses) {
    const auto r = run_cli({"check", "--instances", "500", "--samples", "50", "--scenario", "paper-sec5"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("monotone-order: 500 instances"), std::string::npos);
    EXPECT_NE(r.out.find("weyl: 500 instances"), std::string::npos);
    EXPECT_NE(r.out.find("consistency verdict: true"), std::string::npos);
    EXPECT_NE(r.out.find("normality verdict: true"), std::string::npos);

    const auto f = run_cli({"check", "--instances", "10", "--samples", "5", "--scenario", "paper-sec5", "--gamma-max",
                            "0.6", "--c-exponent", "0.5"});
    EXPECT_EQ(f.code, 0);
    EXPECT_NE(f.out.find("consistency verdict: false"), std::string::npos);
    EXPECT_EQ(run_cli({"check", "--gamma-max", "0.3"}).code, cli::kUsage);
}

TEST_F(CliTest, CheckFaultyOrderStatisticFails) {
    cli::CheckConfig cfg;
    cfg.instances = 500;
    cfg.samples = 5;
    cfg.order = [](std::span<const double> s, std::size_t m) { return 2.0 * kth_largest(s, m); };
    std::ostringstream out, err;
    EXPECT_EQ(cli::cmd_check(cfg, out, err), cli::kFailure);
    EXPECT_NE(err.str().find("weyl violated: instance"), std::string::npos);
    EXPECT_NE(err.str().find("first  = ["), std::string::npos);
}

TEST(CliBinary, ExitCodesFromTheProcess) {
    const std::string exe = LATENT_EVI_CLI_PATH;
    auto status = [&](const std::string& args) {
        const int s = std::system((exe + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    EXPECT_EQ(status("--help"), 0);
    EXPECT_EQ(status("rolling --input /nonexistent/file.csv"), 2);
    EXPECT_EQ(status("check --instances 200 --samples 20"), 0);
    EXPECT_EQ(status("bogus"), 2);
}
