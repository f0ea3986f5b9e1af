#include "closetest/io.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "closetest/harness.hpp"
#include "closetest/rng.hpp"

using namespace closetest;

TEST(Io, DistributionJsonRoundTrip) {
    auto pi = family_zipf(12, 1.0);
    auto j = to_json(pi);
    auto back = distribution_from_json(j);
    ASSERT_EQ(pi.size(), back.size());
    for (std::size_t i = 0; i < pi.size(); ++i) EXPECT_DOUBLE_EQ(pi[i], back[i]);
}

TEST(Io, DistributionCsvRoundTrip) {
    auto pi = family_two_level(9);
    std::istringstream in(distribution_to_csv(pi));
    auto back = distribution_from_csv(in);
    ASSERT_EQ(pi.size(), back.size());
    for (std::size_t i = 0; i < pi.size(); ++i) EXPECT_DOUBLE_EQ(pi[i], back[i]);
}

TEST(Io, SplitCountsRoundTrip) {
    auto pi = family_uniform(6);
    RngStream rng(121);
    auto counts = sample_poissonized_direct(pi, pi, 60, rng);
    auto back = split_counts_from_json(to_json(counts));
    EXPECT_EQ(counts.k_bar, back.k_bar);
    EXPECT_EQ(counts.budgets, back.budgets);
    EXPECT_EQ(counts.truncated, back.truncated);
    for (int j = 0; j < 3; ++j) {
        EXPECT_EQ(counts.x[j], back.x[j]);
        EXPECT_EQ(counts.y[j], back.y[j]);
    }
}

TEST(Io, ConstantsAndReport) {
    TestConstants tc{1.5, 2.5, 3.5, 4.5, 0.05};
    auto back = constants_from_json(to_json(tc));
    EXPECT_DOUBLE_EQ(tc.c_inf, back.c_inf);
    EXPECT_DOUBLE_EQ(tc.c_23, back.c_23);
    EXPECT_DOUBLE_EQ(tc.c_2, back.c_2);
    EXPECT_DOUBLE_EQ(tc.c_1, back.c_1);
    EXPECT_DOUBLE_EQ(tc.gamma, back.gamma);

    auto pi = family_uniform(8);
    RngStream rng(122);
    auto counts = sample_poissonized_direct(pi, pi, 90, rng);
    auto rep = combined_test(counts, tc);
    auto j = to_json(rep, tc);
    EXPECT_EQ(rep.combined, j.at("combined").get<bool>());
    EXPECT_DOUBLE_EQ(rep.t23, j.at("statistics").at("t23").get<double>());
}

TEST(Io, RateBreakdownJsonAndCsv) {
    auto pi = family_zipf(32, 1.0);
    auto rb = upper_rate(pi, 256);
    auto back = rate_breakdown_from_json(to_json(rb));
    EXPECT_DOUBLE_EQ(rb.rho, back.rho);
    EXPECT_EQ(rb.minimizer, back.minimizer);
    EXPECT_EQ(rb.terms, back.terms);

    auto csv = rate_breakdown_to_csv(rb);
    EXPECT_NE(std::string::npos, csv.find("rho,"));
    EXPECT_NE(std::string::npos, csv.find("head_23,"));
}

TEST(Io, PriorAndDrawSerialize) {
    auto pi = family_zipf(64, 1.0);
    auto prior = build_prior(pi, 64, 0.1, 0.001, 4, 3.0, 0.125, 0.05);
    auto j = to_json(prior);
    EXPECT_EQ(prior.A.size(), j.at("A").size());
    EXPECT_EQ(pi.size(), j.at("eps_star").size());

    RngStream rng(123);
    auto draw = sample_alt(prior, rng);
    auto dj = to_json(draw);
    EXPECT_EQ(draw.valid, dj.at("valid").get<bool>());
    EXPECT_DOUBLE_EQ(draw.l1_distance, dj.at("l1_distance").get<double>());
}

TEST(Io, CompareReportLossFreeOnRates) {
    auto pi = family_uniform(16);
    RngStream rng(124);
    ReportOptions opt;
    auto rep = compare_report(pi, 100, 0.1, nullptr, opt, rng);
    auto j = to_json(rep);
    EXPECT_DOUBLE_EQ(rep.upper.rho, rate_breakdown_from_json(j.at("upper")).rho);
    EXPECT_DOUBLE_EQ(rep.lower.rho, rate_breakdown_from_json(j.at("lower")).rho);
    EXPECT_DOUBLE_EQ(rep.identity.rho, rate_breakdown_from_json(j.at("identity")).rho);
    EXPECT_DOUBLE_EQ(rep.dk16.rho, rate_breakdown_from_json(j.at("dk16")).rho);
    auto csv = compare_report_to_csv(rep);
    EXPECT_NE(std::string::npos, csv.find("upper,"));
    EXPECT_NE(std::string::npos, csv.find("range,lo,hi"));
}

TEST(Io, DistributionFileAutodetect) {
    auto pi = family_zipf(5, 0.7);
    {
        std::ofstream out("/tmp/closetest_dist.json");
        out << to_json(pi);
    }
    auto a = read_distribution_file("/tmp/closetest_dist.json");
    ASSERT_EQ(pi.size(), a.size());
    for (std::size_t i = 0; i < pi.size(); ++i) EXPECT_DOUBLE_EQ(pi[i], a[i]);
    {
        std::ofstream out("/tmp/closetest_dist.csv");
        out << distribution_to_csv(pi);
    }
    auto b = read_distribution_file("/tmp/closetest_dist.csv");
    ASSERT_EQ(pi.size(), b.size());
    for (std::size_t i = 0; i < pi.size(); ++i) EXPECT_DOUBLE_EQ(pi[i], b[i]);
}
