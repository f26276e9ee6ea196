#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "priomarket/market_model.hpp"

using namespace priomarket;
using namespace testutil;

TEST_CASE("cp positions") {
    CHECK(cp_position(1, 6) == 0.0);
    CHECK(cp_position(6, 6) == 1.0);
    CHECK(cp_position(3, 6) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK_THROWS_AS(cp_position(0, 6), InputError);
    CHECK_THROWS_AS(cp_position(7, 6), InputError);
}

TEST_CASE("thresholds at the default calibration") {
    const auto p = table2();
    const auto cps = table2_cps();
    const auto th = thresholds(p, cps[0], 6.0);
    CHECK(th.primary == doctest::Approx(0.168).epsilon(1e-12));
    CHECK(th.secondary == doctest::Approx(0.148).epsilon(1e-12));
    CHECK(thresholds(p, cps[0], 5.0).secondary == doctest::Approx(0.150).epsilon(1e-12));

    CPProfile free{1, 0.0, 2.27, false};
    const auto f = thresholds(p, free, 6.0);
    CHECK(f.primary == doctest::Approx(f.secondary).epsilon(1e-15));

    auto single = p;
    single.theta = 0.0;
    CHECK_THROWS_AS(thresholds(single, cps[0], 6.0), RegimeError);
}

TEST_CASE("thresholds are monotone") {
    const auto p = table2();
    CPProfile cp{1, 10.0, 2.27, false};
    double prev = 1e9;
    for (double d = 1.0; d <= 6.0; d += 0.5) {
        const double s = thresholds(p, cp, d).secondary;
        CHECK(s < prev);
        prev = s;
    }
    prev = 1e9;
    for (double S = 0.0; S <= 20.0; S += 2.0) {
        cp.S = S;
        const double s = thresholds(p, cp, 6.0).primary;
        CHECK(s < prev);
        prev = s;
    }
    cp.S = 10.0;
    auto q = p;
    prev = -1e9;
    for (double theta = 0.1; theta < 0.95; theta += 0.1) {
        q.theta = theta;
        const double s = thresholds(q, cp, 6.0).secondary;
        CHECK(s > prev);
        prev = s;
    }
}

TEST_CASE("bundle utilities") {
    const auto p = table2();
    const auto cps = table2_cps();
    const auto d = DelayProfile::uniform(p);
    CHECK(bundle_utility(0.2, Bundle::single(2), p, cps, d) == doctest::Approx(51.0));
    CHECK(bundle_utility(0.2, Bundle::dual(2, 3), p, cps, d) == doctest::Approx(38.0));
    CHECK(bundle_utility(0.7, Bundle::opt_out(), p, cps, d) == 0.0);
    CHECK_THROWS_AS(Bundle::dual(2, 2), InputError);
}

TEST_CASE("secondary increment does not depend on the primary") {
    const auto p = table2();
    const auto cps = table2_cps();
    const auto d = DelayProfile::uniform(p);
    for (double x = 0.0; x <= 1.0; x += 0.05) {
        for (int k = 1; k <= p.M; ++k) {
            const double expected =
                p.theta * (p.V - p.t * std::abs(x - cp_position(k, p.M)) - d.at(k)) - cps[k - 1].S;
            for (int j = 1; j <= p.M; ++j) {
                if (j == k) continue;
                const double inc = bundle_utility(x, Bundle::dual(j, k), p, cps, d) -
                                   bundle_utility(x, Bundle::single(j), p, cps, d);
                CHECK(inc == doctest::Approx(expected).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("best bundle at the default calibration") {
    const auto p = table2();
    const auto cps = table2_cps();
    const auto d = DelayProfile::uniform(p);
    CHECK(best_bundle(0.2, p, cps, d) == Bundle::single(2));
    CHECK(best_bundle(0.3, p, cps, d) == Bundle::dual(2, 3));
    CHECK(best_bundle(0.26, p, cps, d) == Bundle::dual(2, 3));
    // Repeated calls give identical answers.
    for (int i = 0; i < 5; ++i) CHECK(best_bundle(0.3, p, cps, d) == Bundle::dual(2, 3));
    CHECK(best_bundle(0.26, p, cps, d, CandidateSet::Adjacent) == Bundle::dual(2, 3));
}

TEST_CASE("best bundle never adds a loss-making secondary") {
    const auto p = table2();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> S(0.0, 20.0), dd(2.0, 6.0), x(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<CPProfile> cps;
        DelayProfile d = DelayProfile::uniform(p);
        for (int j = 1; j <= p.M; ++j) {
            cps.push_back({j, S(rng), 2.0, false});
            d.at(j) = dd(rng);
        }
        const double at = x(rng);
        const auto b = best_bundle(at, p, cps, d);
        if (b.kind() != Bundle::Kind::Dual) continue;
        const double inc = bundle_utility(at, b, p, cps, d) -
                           bundle_utility(at, Bundle::single(b.primary()), p, cps, d);
        CHECK(inc >= 0.0);
    }
}

TEST_CASE("assumption report") {
    auto p = table2();
    const auto cps = table2_cps();
    auto r = validate_assumptions(p, cps);
    CHECK_FALSE(r.part1_ok);
    CHECK(r.regime == Regime::PartialCoverage);
    CHECK(r.margins.at("part1") == doctest::Approx(-49.0));
    REQUIRE(r.infinite_bounds.size() == 1);
    CHECK(r.infinite_bounds[0] == "part2_upper");

    p.V = 200.0;
    r = validate_assumptions(p, cps);
    CHECK(r.part1_ok);
    CHECK(r.part2_lower_ok);
    CHECK_FALSE(r.part2_upper_ok);
    CHECK(r.margins.at("part2_lower") == doctest::Approx(0.5 - 10.0 / 139.0));
    CHECK(r.margins.at("part2_upper") == doctest::Approx(0.1 - 0.5));
    CHECK(r.regime == Regime::AllDual);

    p.theta = 0.085;
    r = validate_assumptions(p, cps);
    CHECK(r.regime == Regime::FullAssumption1);

    p.theta = 1e-6;
    CHECK(validate_assumptions(p, cps).regime == Regime::NoDual);
}

TEST_CASE("regime is FullAssumption1 exactly when all flags hold") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> V(50.0, 400.0), theta(0.01, 0.99), S(0.0, 20.0);
    for (int trial = 0; trial < 500; ++trial) {
        auto p = table2();
        p.V = V(rng);
        p.theta = theta(rng);
        std::vector<CPProfile> cps;
        for (int j = 1; j <= p.M; ++j) cps.push_back({j, S(rng), 2.0, false});
        const auto r = validate_assumptions(p, cps);
        CHECK((r.regime == Regime::FullAssumption1) ==
              (r.part1_ok && r.part2_lower_ok && r.part2_upper_ok));
    }
}

TEST_CASE("input validation") {
    auto p = table2();
    p.M = 2;
    CHECK_THROWS_AS(p.validate(), InputError);
    p = table2();
    p.theta = 1.0;
    CHECK_THROWS_AS(p.validate(), InputError);
    auto cps = table2_cps();
    cps[3].index = 7;
    CHECK_THROWS_AS(validate_cps(table2(), cps), InputError);
    auto d = DelayProfile::uniform(table2());
    d.at(2) = 6.1;
    CHECK_THROWS_AS(validate_delays(table2(), d), InputError);
    d.allow_throttling = true;
    CHECK_NOTHROW(validate_delays(table2(), d));
}
