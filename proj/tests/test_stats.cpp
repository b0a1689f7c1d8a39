#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "detdiff/stats.hpp"

using namespace detdiff;

TEST_CASE("normal quantile accuracy") {
    // bisection oracle on the cdf
    auto oracle = [](double p) {
        double lo = -10, hi = 10;
        for (int i = 0; i < 80; ++i) {
            double mid = 0.5 * (lo + hi);
            (norm_cdf(mid) < p ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    for (double p : {1e-8, 1e-4, 0.02, 0.3, 0.5, 0.8, 0.975, 1 - 1e-6}) {
        REQUIRE_THAT(norm_quantile(p), Catch::Matchers::WithinAbs(oracle(p), 2e-9));
    }
    CHECK_THROWS_AS(norm_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(norm_quantile(1.0), std::domain_error);
}

TEST_CASE("shapiro-wilk reference vector") {
    // frozen against a reference AS R94 implementation (scipy.stats.shapiro)
    std::vector<double> x = {148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236};
    auto rep = shapiro_wilk(x);
    CHECK_THAT(rep.W, Catch::Matchers::WithinAbs(0.788815, 5e-4));
    CHECK_THAT(rep.p_value, Catch::Matchers::WithinAbs(0.006704, 5e-4));

    std::vector<double> y = {0.139, 0.157, 0.175, 0.256, 0.344, 0.413, 0.503, 0.577,
                             0.614, 0.655, 0.954, 1.392, 1.557, 1.648, 1.690, 1.994,
                             2.174, 2.206, 3.245, 3.510, 3.571, 4.354, 4.980, 6.084, 8.351};
    auto repy = shapiro_wilk(y);
    CHECK_THAT(repy.W, Catch::Matchers::WithinAbs(0.834666, 5e-4));
    CHECK_THAT(repy.p_value, Catch::Matchers::WithinAbs(0.000913, 2e-4));
}

TEST_CASE("shapiro-wilk calibration on seeded draws") {
    // near-nominal rejection rate on normal data
    int reject = 0, above = 0;
    for (uint64_t s = 0; s < 100; ++s) {
        Rng r = Rng::stream(1234, s);
        std::vector<double> x;
        for (int i = 0; i < 500; ++i) x.push_back(r.next_normal());
        auto rep = shapiro_wilk(x);
        if (rep.p_value < 0.05) ++reject;
        if (rep.p_value > 0.05) ++above;
    }
    CHECK(above >= 90);
    CHECK(reject <= 10);

    // heavy skew is rejected decisively
    Rng r = Rng::stream(99, 0);
    std::vector<double> e;
    for (int i = 0; i < 500; ++i) e.push_back(-std::log(r.next_unit()));
    CHECK(shapiro_wilk(e).p_value < 0.01);

    CHECK_THROWS_AS(shapiro_wilk(std::vector<double>{1.0, 2.0}), std::domain_error);
    CHECK_THROWS_AS(shapiro_wilk(std::vector<double>(5001, 1.0)), std::domain_error);
}

TEST_CASE("W and p are scale and shift invariant") {
    Rng r = Rng::stream(7, 3);
    std::vector<double> x;
    for (int i = 0; i < 200; ++i) x.push_back(r.next_normal() * 2 + 1);
    auto base = shapiro_wilk(x);
    std::vector<double> y;
    for (double v : x) y.push_back(v * 37.5 - 4.0);
    auto scaled = shapiro_wilk(y);
    CHECK_THAT(scaled.W, Catch::Matchers::WithinAbs(base.W, 1e-12));
    CHECK_THAT(scaled.p_value, Catch::Matchers::WithinAbs(base.p_value, 1e-10));
}

TEST_CASE("qq quantiles") {
    Rng r = Rng::stream(21, 0);
    std::vector<double> x;
    for (int i = 0; i < 500; ++i) x.push_back(r.next_normal());
    auto qq = qq_quantiles(x);
    REQUIRE(qq.sample.size() == qq.theoretical.size());
    for (size_t i = 0; i + 1 < qq.sample.size(); ++i) {
        REQUIRE(qq.sample[i] <= qq.sample[i + 1]);
        REQUIRE(qq.theoretical[i] < qq.theoretical[i + 1]);
    }
    // gaussian data hugs the reference line away from the extreme tails
    double worst = 0;
    for (size_t i = 5; i + 5 < qq.sample.size(); ++i)
        worst = std::max(worst, std::fabs(qq.sample[i] -
                                          (qq.line_intercept + qq.line_slope * qq.theoretical[i])));
    CHECK(worst < 0.2 * qq.line_slope);

    // heavy tails depart from the line at the ends
    std::vector<double> t;
    Rng r2 = Rng::stream(21, 1);
    for (int i = 0; i < 500; ++i) {
        double u = r2.next_normal();
        t.push_back(u * u * u); // symmetric, heavy-tailed
    }
    auto qt = qq_quantiles(t);
    double tail_dev = std::fabs(qt.sample.back() -
                                (qt.line_intercept + qt.line_slope * qt.theoretical.back()));
    CHECK(tail_dev > 0.5 * qt.line_slope);

    // degenerate data flagged, no division happens
    auto qd = qq_quantiles(std::vector<double>(20, 3.14));
    CHECK(qd.degenerate);
    CHECK(qd.line_slope == 0.0);
}

TEST_CASE("ensemble determinism and scaling") {
    EnsembleSpec spec;
    spec.a = 4;
    spec.db = Rational::pow10(-12);
    spec.n_samples = 24;
    spec.seed = 5;
    auto s1 = scaled_difference_ensemble(spec);
    auto s2 = scaled_difference_ensemble(spec);
    REQUIRE(s1 == s2); // bit identical

    spec.seed = 6;
    auto s3 = scaled_difference_ensemble(spec);
    REQUIRE(s1 != s3);

    // samples are O(1) after the db sqrt(-ln db) scaling
    double m = 0;
    for (double v : s1) m = std::max(m, std::fabs(v));
    CHECK(m < 10.0);
    CHECK(m > 1e-3);
}

TEST_CASE("ks distance") {
    Rng r = Rng::stream(31, 0);
    std::vector<double> x;
    for (int i = 0; i < 2000; ++i) x.push_back(r.next_normal() * 2.0);
    CHECK(ks_distance_normal(x, 0.0, 2.0) < 0.03);
    CHECK(ks_distance_normal(x, 0.0, 1.0) > 0.15);
}
