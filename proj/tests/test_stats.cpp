#include "test_support.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include "voterlab/stats.hpp"

using namespace voterlab;

TEST_CASE("bernoulli configurations", "[stats]") {
    Rng rng(1);
    REQUIRE(bernoulli_config(50, 0.0, rng) == OpinionConfig(50, 0));
    REQUIRE(bernoulli_config(50, 1.0, rng) == OpinionConfig(50, 1));
    const auto eta = bernoulli_config(10000, 0.3, rng);
    double ones = 0;
    for (auto x : eta) ones += x;
    REQUIRE_WITHIN_SIGMA(ones / 1e4, 0.3, std::sqrt(0.21 / 1e4), 4.0);
    REQUIRE_THROWS_AS(bernoulli_config(5, 1.5, rng), SpecError);
}

TEST_CASE("resampled configurations", "[stats]") {
    Rng rng(2);
    const auto eta = bernoulli_config(200, 0.5, rng);
    REQUIRE(resample_config(eta, 0.0, 0.5, rng) == eta);
    REQUIRE(resample_config(eta, 1.0, 0.5, rng).size() == eta.size());

    const double eps = 0.2;
    const double p = 0.3;
    const int trials = 100000;
    int differ = 0;
    int ones = 0;
    for (int t = 0; t < trials; ++t) {
        OpinionConfig x = bernoulli_config(1, p, rng);
        const auto y = resample_config(x, eps, p, rng);
        differ += x[0] != y[0];
        ones += y[0];
    }
    const double expected = 2 * p * (1 - p) * eps;
    REQUIRE_WITHIN_SIGMA(differ / double(trials), expected, std::sqrt(expected * (1 - expected) / trials), 4.0);
    REQUIRE_WITHIN_SIGMA(ones / double(trials), p, std::sqrt(p * (1 - p) / trials), 4.0);
}

TEST_CASE("summary statistics", "[stats]") {
    const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
    const auto s = summarize(xs);
    REQUIRE(s.mean == Catch::Approx(2.5));
    REQUIRE(s.variance == Catch::Approx(5.0 / 3.0));
    REQUIRE(s.standard_error == Catch::Approx(std::sqrt(5.0 / 12.0)));
    REQUIRE(s.ci.low < s.mean);
    REQUIRE_THROWS_AS(summarize(std::vector<double>{1.0}), SpecError);
}

TEST_CASE("Wilson interval", "[stats]") {
    const auto s = proportion(50, 100);
    REQUIRE(s.mean == 0.5);
    // Reference values for 50/100 at 95%.
    REQUIRE(s.ci.low == Catch::Approx(0.4038).margin(1e-4));
    REQUIRE(s.ci.high == Catch::Approx(0.5962).margin(1e-4));
    const auto zero = proportion(0, 20);
    REQUIRE(zero.ci.low == 0.0);
    REQUIRE(zero.ci.high > 0.1);
    REQUIRE_THROWS_AS(proportion(3, 2), SpecError);
}

TEST_CASE("paired covariance", "[stats]") {
    const std::vector<std::pair<double, double>> constant(100, {1.0, 1.0});
    const auto c = paired_covariance(constant);
    REQUIRE(c.covariance == 0.0);
    REQUIRE(c.standard_error == 0.0);

    // Two-sample closed form: (x1-x2)(y1-y2)/2.
    const std::vector<std::pair<double, double>> two = {{1.0, 3.0}, {2.0, 7.0}};
    REQUIRE(paired_covariance(two).covariance == Catch::Approx(2.0));

    Rng rng(3);
    std::vector<std::pair<double, double>> copies;
    for (int i = 0; i < 40000; ++i) {
        const double x = rng.bernoulli(0.5);
        copies.emplace_back(x, x);
    }
    const auto s = paired_covariance(copies);
    REQUIRE_WITHIN_SIGMA(s.covariance, 0.25, s.standard_error, 4.0);
    REQUIRE(s.standard_error > 0.0);
}

TEST_CASE("correlation with jackknife", "[stats]") {
    Rng rng(4);
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 20000; ++i) {
        const double x = rng.bernoulli(0.5);
        const double y = rng.bernoulli(0.2) ? 1.0 - x : x;
        pairs.emplace_back(x, y);
    }
    const auto r = correlation(pairs);
    REQUIRE_WITHIN_SIGMA(r.correlation, 0.6, r.standard_error, 4.0);

    // Jackknife SE against the spread of independent replicates.
    std::vector<double> estimates;
    double mean_se = 0.0;
    for (std::uint64_t rep = 0; rep < 300; ++rep) {
        Rng r_rng = derive_stream(7, rep);
        std::vector<std::pair<double, double>> sample;
        for (int i = 0; i < 1000; ++i) {
            const double x = r_rng.bernoulli(0.5);
            sample.emplace_back(x, r_rng.bernoulli(0.2) ? 1.0 - x : x);
        }
        const auto c = correlation(sample);
        estimates.push_back(c.correlation);
        mean_se += c.standard_error / 300.0;
    }
    REQUIRE(mean_se == Catch::Approx(std::sqrt(summarize(estimates).variance)).epsilon(0.15));

    const std::vector<std::pair<double, double>> flat(10, {1.0, 0.0});
    REQUIRE(std::isnan(correlation(flat).correlation));
}

TEST_CASE("regularised gamma matches boost", "[stats]") {
    for (double a : {0.5, 1.0, 2.5, 10.0, 50.0}) {
        for (double x : {0.01, 0.5, 1.0, 3.0, 9.9, 40.0, 80.0}) {
            const double expected = boost::math::gamma_q(a, x);
            REQUIRE(regularized_gamma_q(a, x) == Catch::Approx(expected).epsilon(1e-10).margin(1e-300));
        }
    }
    REQUIRE(regularized_gamma_q(3.0, 0.0) == 1.0);
    REQUIRE(chi_square_sf(3.841458820694124, 1) == Catch::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("chi-square uniformity", "[stats]") {
    const std::vector<std::uint64_t> even(6, 1000);
    const auto r = uniformity_chisq(even);
    REQUIRE(r.statistic == 0.0);
    REQUIRE(r.dof == 5);
    REQUIRE(r.p_value == Catch::Approx(1.0));

    const std::vector<std::uint64_t> skewed = {2000, 1000, 1000, 1000, 1000, 1000};
    REQUIRE(uniformity_chisq(skewed).p_value < 1e-10);
    REQUIRE_THROWS_AS(uniformity_chisq(std::vector<std::uint64_t>{1, 2, 1}), SpecError);
}

TEST_CASE("chi-square calibration under the null", "[stats][statistical]") {
    int passed = 0;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
        Rng rng = derive_stream(5, rep);
        std::vector<std::uint64_t> counts(6, 0);
        for (int i = 0; i < 100000; ++i) ++counts[rng.below(6)];
        passed += uniformity_chisq(counts).p_value > 0.001;
    }
    REQUIRE(passed >= 198);
}

TEST_CASE("contingency table", "[stats]") {
    const std::vector<std::vector<std::uint64_t>> same = {{10, 20, 30}, {20, 40, 60}};
    REQUIRE(contingency_chisq(same).statistic == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(contingency_chisq(same).dof == 2);
    const std::vector<std::vector<std::uint64_t>> differ = {{100, 0}, {0, 100}};
    REQUIRE(contingency_chisq(differ).p_value < 1e-10);
    const std::vector<std::vector<std::uint64_t>> with_empty = {{10, 0, 5}, {12, 0, 6}};
    REQUIRE(contingency_chisq(with_empty).dof == 1);
}

TEST_CASE("Kolmogorov-Smirnov tests", "[stats]") {
    Rng rng(6);
    std::vector<double> exp2, exp3, other;
    for (int i = 0; i < 5000; ++i) {
        exp2.push_back(rng.exponential(2.0));
        exp3.push_back(rng.exponential(3.0));
        other.push_back(rng.exponential(2.0));
    }
    REQUIRE(ks_exponential(exp2, 2.0).p_value > 0.001);
    REQUIRE(ks_exponential(exp3, 2.0).p_value < 1e-6);
    REQUIRE(ks_two_sample(exp2, other).p_value > 0.001);
    REQUIRE(ks_two_sample(exp2, exp3).p_value < 1e-6);
    REQUIRE(kolmogorov_sf(0.0) == 1.0);
    REQUIRE(kolmogorov_sf(1.3580986393225505) == Catch::Approx(0.05).epsilon(1e-6));
}
