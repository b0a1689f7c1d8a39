#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "detdiff/map.hpp"

using namespace detdiff;

TEST_CASE("eval_map reduces into [-1/2, 1/2)") {
    MapParamsD odd(3.0, 0.0);
    CHECK(eval_map(odd, 0.0) == 0.0);
    CHECK(eval_map(odd, -0.5) == -0.5);

    MapParamsD mp(3.5, 0.1);
    CHECK_THAT(eval_map(mp, 0.3), Catch::Matchers::WithinAbs(0.15, 1e-15));

    CHECK_THROWS_AS(eval_map(mp, 0.6), std::domain_error);
    CHECK_THROWS_AS(eval_map(mp, 0.5), std::domain_error);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ua(2.1, 8.0), ub(-0.5, 0.5), ux(-0.5, 0.5);
    for (int t = 0; t < 2000; ++t) {
        MapParamsD r(ua(rng), ub(rng));
        double y = eval_map(r, ux(rng));
        REQUIRE(y >= -0.5);
        REQUIRE(y < 0.5);
    }
}

TEST_CASE("eval_map rational path agrees with the float path") {
    MapParamsQ q(Rational(7, 2), Rational(1, 10));
    Rational y = eval_map(q, Rational(3, 10));
    CHECK(y == Rational(3, 20)); // 3.5*0.3 + 0.1 - 1
}

TEST_CASE("eval_lift") {
    CHECK(eval_lift(MapParamsD(3, 0), 1.0) == 3.0);
    CHECK(eval_lift(MapParamsD(4, 0.25), 0.0) == 0.25);

    MapParamsD mp(3.0, 0.0);
    // lift(x+1) = lift(x) + a
    CHECK_THAT(eval_lift(mp, 0.37 + 1.0) - eval_lift(mp, 0.37), Catch::Matchers::WithinAbs(3.0, 1e-14));
    // one-step displacement identity: psi(x) = lift(x) - x
    auto psi = displacement(mp);
    CHECK_THAT(psi(0.4), Catch::Matchers::WithinAbs(0.8, 1e-15));
    CHECK_THAT(eval_lift(mp, 0.4) - 0.4, Catch::Matchers::WithinAbs(psi(0.4), 1e-15));
}

TEST_CASE("branch_set structure") {
    auto b30 = branch_set(MapParamsD(3, 0));
    CHECK(b30.p == 1);
    CHECK(b30.q == 1);
    CHECK(b30.branch_count() == 3);
    CHECK_THAT(b30.lower(0), Catch::Matchers::WithinAbs(-1.0 / 6, 1e-15));
    CHECK_THAT(b30.upper(0), Catch::Matchers::WithinAbs(1.0 / 6, 1e-15));

    auto b40 = branch_set(MapParamsD(4, 0));
    CHECK(b40.p == 2);
    CHECK(b40.q == 2);
    CHECK(b40.branch_count() == 5);

    auto b3h = branch_set(MapParamsQ(Rational(3), Rational(1, 2)));
    CHECK(b3h.p == 1);
    CHECK(b3h.q == 2);

    // endpoints strictly increase and tile I; each branch maps into [-1/2, 1/2)
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ua(2.05, 9.0), ub(-0.5, 0.5);
    for (int t = 0; t < 500; ++t) {
        MapParamsD mp(ua(rng), ub(rng));
        auto bs = branch_set(mp);
        REQUIRE(bs.endpoints.front() == -0.5);
        REQUIRE(bs.endpoints.back() == 0.5);
        for (size_t i = 0; i + 1 < bs.endpoints.size(); ++i)
            REQUIRE(bs.endpoints[i] < bs.endpoints[i + 1]);
        for (long k = -bs.p; k <= bs.q; ++k) {
            double mid = 0.5 * (bs.lower(k) + bs.upper(k));
            double img = mp.a * mid + mp.b - static_cast<double>(k);
            REQUIRE(img >= -0.5 - 1e-12);
            REQUIRE(img <= 0.5 + 1e-12);
            REQUIRE_THAT(eval_map(mp, mid), Catch::Matchers::WithinAbs(img, 1e-12));
        }
    }
}

TEST_CASE("preimages") {
    auto pre30 = preimages(MapParamsD(3, 0), 0.0);
    REQUIRE(pre30.size() == 3);
    CHECK_THAT(pre30[0], Catch::Matchers::WithinAbs(-1.0 / 3, 1e-15));
    CHECK_THAT(pre30[1], Catch::Matchers::WithinAbs(0.0, 1e-15));
    CHECK_THAT(pre30[2], Catch::Matchers::WithinAbs(1.0 / 3, 1e-15));

    auto pre40 = preimages(MapParamsD(4, 0), 0.2);
    REQUIRE(pre40.size() == 4);
    CHECK_THAT(pre40[0], Catch::Matchers::WithinAbs(-0.45, 1e-15));
    CHECK_THAT(pre40[3], Catch::Matchers::WithinAbs(0.3, 1e-15));

    // round trip and count bounds
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ua(2.05, 9.0), ub(-0.5, 0.5), ux(-0.5, 0.5);
    for (int t = 0; t < 1000; ++t) {
        MapParamsD mp(ua(rng), ub(rng));
        double x = ux(rng);
        auto ys = preimages(mp, x);
        REQUIRE(ys.size() >= static_cast<size_t>(std::floor(mp.a)));
        REQUIRE(ys.size() <= static_cast<size_t>(std::ceil(mp.a)));
        for (double y : ys)
            REQUIRE_THAT(eval_map(mp, y), Catch::Matchers::WithinAbs(x, 1e-12));
    }
}

TEST_CASE("conjugacy symmetry T_{a,b}(-x) = -T_{a,-b}(x)") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> ua(2.05, 9.0), ub(-0.5, 0.5), ux(-0.499, 0.499);
    for (int t = 0; t < 1000; ++t) {
        double a = ua(rng), b = ub(rng), x = ux(rng);
        MapParamsD mp(a, b), mn(a, -b);
        double lhs = eval_map(mp, -x);
        double rhs = -eval_map(mn, x);
        // compare as circle points: the half-open convention can differ at +-1/2
        double d = std::fabs(lhs - rhs);
        REQUIRE(std::min(d, 1.0 - d) <= 1e-12);
    }
}

TEST_CASE("breakpoint Lipschitz surrogate in the parameters") {
    const double a0 = 2.5;
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> ua(a0, 6.0), ub(-0.5, 0.5), ud(-0.01, 0.01);
    for (int t = 0; t < 500; ++t) {
        double a = ua(rng), b = ub(rng);
        double a2 = a + ud(rng), b2 = std::clamp(b + ud(rng), -0.5, 0.5);
        auto s1 = branch_set(MapParamsD(a, b));
        auto s2 = branch_set(MapParamsD(a2, b2));
        double bound = (std::fabs(a - a2) + std::fabs(b - b2)) / a0;
        long klo = std::max(-s1.p, -s2.p) + 1, khi = std::min(s1.q, s2.q);
        for (long k = klo; k <= khi; ++k) {
            double d = std::fabs(s1.lower(k) - s2.lower(k));
            REQUIRE(d <= bound + 1e-12);
        }
    }
}
