#include <gtest/gtest.h>

#include <cmath>

#include "latent_evi/experiments.hpp"
#include "latent_evi/scenario.hpp"
#include "test_support.hpp"

using namespace latent_evi;

namespace {

ScenarioSpec small_pareto(std::size_t reps = 6) {
    ScenarioSpec s;
    s.name = "small";
    s.components = {GeneratorSpec::pareto(5, "a"), GeneratorSpec::pareto(15, "b"), GeneratorSpec::pareto(30, "c")};
    s.unmixer = UnmixerSpec::fobi();
    s.sample_sizes = {500};
    s.replications = reps;
    s.tail = TailSpec::power(0.25);
    s.seed = Seed{17};
    return s;
}

void expect_same(const ReplicationRecord& a, const ReplicationRecord& b) {
    EXPECT_EQ(a.n, b.n);
    EXPECT_EQ(a.replicate, b.replicate);
    EXPECT_EQ(a.unmixer_ok, b.unmixer_ok);
    EXPECT_EQ(a.mixing_draws, b.mixing_draws);
    if (std::isnan(a.md_index)) EXPECT_TRUE(std::isnan(b.md_index)); else EXPECT_EQ(a.md_index, b.md_index);
    ASSERT_EQ(a.estimates.size(), b.estimates.size());
    for (std::size_t e = 0; e < a.estimates.size(); ++e) {
        EXPECT_EQ(a.estimates[e].on_true, b.estimates[e].on_true);
        EXPECT_EQ(a.estimates[e].on_estimated, b.estimates[e].on_estimated);
    }
}

}  // namespace

TEST(Replication, DeterministicWithOneEntryPerComponent) {
    const auto spec = small_pareto();
    const auto a = run_replication(spec, 500, 3);
    const auto b = run_replication(spec, 500, 3);
    expect_same(a, b);
    EXPECT_EQ(a.k_n, 4u);
    ASSERT_EQ(a.estimates.size(), 2u);
    for (const auto& e : a.estimates) {
        EXPECT_EQ(e.on_true.size(), 3u);
        EXPECT_EQ(e.on_estimated.size(), 3u);
        ASSERT_TRUE(e.max_true);
        double m = -1e300;
        for (const auto& v : e.on_true) m = std::max(m, v.value());
        EXPECT_EQ(*e.max_true, m);
    }
    const auto c = run_replication(spec, 500, 4);
    EXPECT_NE(a.estimates[0].on_true, c.estimates[0].on_true);
}

TEST(Replication, IdentityPipelineReproducesTrueEstimates) {
    auto spec = small_pareto();
    spec.mixing.kind = MixingSpec::Kind::identity;
    spec.unmixer = UnmixerSpec::identity();
    for (std::size_t r = 0; r < 5; ++r) {
        const auto rec = run_replication(spec, 500, r);
        EXPECT_EQ(rec.md_index, 0.0);
        for (const auto& e : rec.estimates)
            for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(*e.on_true[k], *e.on_estimated[k], 1e-12);
    }
}

TEST(Replication, TrueMaximumIgnoresComponentOrder) {
    // Streams are keyed by label, so reordering components leaves each latent series intact.
    auto spec = small_pareto();
    auto swapped = spec;
    std::swap(swapped.components[0], swapped.components[2]);
    for (std::size_t r = 0; r < 4; ++r) {
        const auto a = run_replication(spec, 500, r), b = run_replication(swapped, 500, r);
        for (std::size_t e = 0; e < 2; ++e) {
            EXPECT_EQ(*a.estimates[e].max_true, *b.estimates[e].max_true);
            EXPECT_EQ(a.estimates[e].on_true[0], b.estimates[e].on_true[2]);
        }
    }
    spec.mixing.kind = MixingSpec::Kind::identity;
    swapped.mixing.kind = MixingSpec::Kind::identity;
    const auto a = run_replication(spec, 500, 0), b = run_replication(swapped, 500, 0);
    EXPECT_NEAR(*a.estimates[0].max_estimated, *b.estimates[0].max_estimated, 1e-8);
}

TEST(Replication, ThreadCountDoesNotChangeResults) {
    const auto spec = small_pareto(7);
    const auto one = run_replications(spec, 500, 1);
    const auto three = run_replications(spec, 500, 3);
    ASSERT_EQ(one.size(), 7u);
    for (std::size_t r = 0; r < one.size(); ++r) {
        EXPECT_EQ(one[r].replicate, r);
        expect_same(one[r], three[r]);
    }
}

TEST(Replication, GeneratedComponentsAreUncorrelated) {
    const auto spec = dependent_series_scenario();
    const std::size_t n = 20000;
    const Matrix z = center(generate_latent(spec, n, 0)).data;
    for (Eigen::Index i = 0; i < z.cols(); ++i)
        for (Eigen::Index j = i + 1; j < z.cols(); ++j) {
            const double r = z.col(i).dot(z.col(j)) / (z.col(i).norm() * z.col(j).norm());
            // Squared fGn is long-range dependent; its effective sample is smaller than n.
            EXPECT_LT(std::abs(r), 6.0 / std::sqrt(static_cast<double>(n))) << i << "," << j;
        }
}

TEST(Scenario, ValidationErrors) {
    auto s = small_pareto();
    EXPECT_NO_THROW(s.validate());
    auto bad = s;
    bad.components.clear();
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = s;
    bad.sample_sizes = {11};
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = s;
    bad.components[1].label = "a";
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = s;
    bad.components[0].label = "#mixing";
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = s;
    bad.replications = 0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = s;
    bad.histogram.width = 0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = s;
    bad.agreement_eps = 0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = s;
    bad.mixing.lo = 5;
    bad.mixing.hi = 5;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = s;
    bad.rate = RateInputs{0.2, 0.0};
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Quantile, TypeSevenOracle) {
    EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.75), 3.25);
    EXPECT_DOUBLE_EQ(quantile({7}, 0.25), 7.0);
    EXPECT_TRUE(std::isnan(quantile({}, 0.5)));
    StreamRng rng(Seed{8}.substream(0, 0));
    for (int t = 0; t < 100; ++t) {
        std::vector<double> v(1 + t % 13);
        for (auto& x : v) x = rng.normal();
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const double h = (sorted.size() - 1) * q;
            const auto j = static_cast<std::size_t>(h);
            const double oracle = j + 1 < sorted.size() ? sorted[j] + (h - j) * (sorted[j + 1] - sorted[j]) : sorted[j];
            EXPECT_NEAR(quantile(v, q), oracle, 1e-15);
        }
    }
}

TEST(Histogram, CountsAndOverlap) {
    const HistogramSpec spec{0.0, 1.0, 0.25};
    EXPECT_EQ(spec.bins(), 4u);
    const auto h = make_histogram(spec, {-0.5, 0.0, 0.1, 0.3, 1.0, 2.0}, {0.1, 0.1, 0.9});
    EXPECT_EQ(h.counts_true, (std::vector<std::size_t>{2, 1, 0, 1}));
    EXPECT_EQ(h.below_true, 1u);
    EXPECT_EQ(h.above_true, 1u);
    EXPECT_EQ(h.counts_estimated, (std::vector<std::size_t>{2, 0, 0, 1}));
    // Shared: min(2,2) + min(1,0) + min(1,1) + tallies 0 = 3 of max(6, 3).
    EXPECT_DOUBLE_EQ(h.overlap(), 0.5);
    EXPECT_DOUBLE_EQ(h.mode(false), 0.0);
    const std::vector<double> same{0.2, 0.4, 0.45, 0.8};
    EXPECT_DOUBLE_EQ(make_histogram(spec, same, same).overlap(), 1.0);
    EXPECT_TRUE(std::isnan(make_histogram(spec, {}, {}).overlap()));
}

TEST(Summary, CellInvariants) {
    auto spec = small_pareto(12);
    spec.sample_sizes = {300, 1000};
    const auto study = run_study(spec);
    ASSERT_EQ(study.cells.size(), 4u);
    for (const auto& c : study.cells) {
        EXPECT_EQ(c.replications, 12u);
        EXPECT_EQ(c.paired + std::max(c.missing_true, c.missing_estimated) <= 12u, true);
        EXPECT_LE(c.q1, c.median);
        EXPECT_LE(c.median, c.q3);
        EXPECT_GE(c.agreement_fraction, 0.0);
        EXPECT_LE(c.agreement_fraction, 1.0);
        std::size_t tot = c.histogram.below_true + c.histogram.above_true;
        for (auto v : c.histogram.counts_true) tot += v;
        EXPECT_EQ(tot, 12u - c.missing_true);
        EXPECT_EQ(c.k_n, resolve_threshold(spec.tail, c.n));
    }
    ASSERT_NE(study.find(1000, EviMethod::moment), nullptr);
    EXPECT_EQ(study.find(999, EviMethod::hill), nullptr);

    const auto again = run_study(spec, 2);
    for (std::size_t i = 0; i < study.cells.size(); ++i) {
        EXPECT_EQ(study.cells[i].median, again.cells[i].median);
        EXPECT_EQ(study.cells[i].histogram, again.cells[i].histogram);
    }
}

TEST(Summary, SingleReplicateQuartilesCoincide) {
    auto spec = small_pareto(1);
    const auto recs = run_replications(spec, 500);
    const auto cells = summarize(spec, 500, recs);
    for (const auto& c : cells) {
        EXPECT_EQ(c.q1, c.median);
        EXPECT_EQ(c.q3, c.median);
        const auto& e = recs[0].estimates[c.method == EviMethod::hill ? 0 : 1];
        EXPECT_NEAR(c.median, std::sqrt(4.0) * std::abs(*e.max_true - *e.max_estimated), 1e-15);
    }
}

TEST(Summary, AgreementCountsFailedReplicatesAgainst) {
    auto spec = small_pareto(2);
    auto recs = run_replications(spec, 500);
    recs[1].unmixer_ok = false;
    for (auto& e : recs[1].estimates) e.max_estimated.reset();
    const auto cells = summarize(spec, 500, recs);
    for (const auto& c : cells) {
        EXPECT_EQ(c.paired, 1u);
        EXPECT_EQ(c.unmixer_failures, 1u);
        EXPECT_EQ(c.missing_estimated, 1u);
        EXPECT_LE(c.agreement_fraction, 0.5);
    }
}

TEST(RateDiagnostic, Verdicts) {
    auto spec = dependent_series_scenario();
    auto d = rate_diagnostic(spec, 0.2, 0.4);
    EXPECT_TRUE(d.consistency);
    EXPECT_TRUE(d.normality);
    ASSERT_EQ(d.n.size(), 4u);
    EXPECT_NEAR(d.consistency_ratio[0], std::pow(300.0, -0.2), 1e-15);
    EXPECT_NEAR(d.normality_ratio[3], std::sqrt(17.0) * std::pow(1e5, -0.2), 1e-15);

    EXPECT_FALSE(rate_diagnostic(spec, 0.6, 0.5).consistency);
    EXPECT_FALSE(rate_diagnostic(spec, 0.6, 0.5).normality);

    // sqrt(k_n) grows like n^(a/2): the normality ratio must still fall.
    EXPECT_TRUE(rate_diagnostic(spec, 0.2, 0.5).normality);
    spec.tail = TailSpec::power(0.7);
    const auto slow = rate_diagnostic(spec, 0.2, 0.5);
    EXPECT_TRUE(slow.consistency);
    EXPECT_FALSE(slow.normality);

    EXPECT_THROW(rate_diagnostic(spec, -0.1, 0.5), InvalidArgument);
    EXPECT_THROW(rate_diagnostic(spec, 0.1, 0.0), InvalidArgument);
}
