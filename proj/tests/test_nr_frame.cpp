#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nrtomo/nr_frame.hpp"

using namespace nrtomo;

namespace {

RadarRequirements base_req() {
    RadarRequirements req;
    req.range_resolution_m = 41.7;
    req.max_unambiguous_range_m = 10000.0;
    req.max_unambiguous_velocity_mps = 1e-3;
    req.carrier_frequency_hz = 26e9;
    req.ssb_period_slots = 1;
    req.frame_length_slots = 10;
    return req;
}

}  // namespace

TEST_CASE("resolution lower bound") {
    RadarRequirements req = base_req();
    req.range_resolution_m = 5.3;  // c/(480*15e3*5.3) = 7.86 -> ceil(log2) = 3
    CHECK(mu_lower_bound_resolution(req) == 3);
    req.range_resolution_m = 2.6;  // 16.03 -> 5
    CHECK(mu_lower_bound_resolution(req) == 5);
    req.range_resolution_m = 41.7;  // 0.9992 -> 0
    CHECK(mu_lower_bound_resolution(req) == 0);
    req.range_resolution_m = 500.0;  // negative raw bound clamps to 0
    CHECK(mu_lower_bound_resolution(req) == 0);
}

TEST_CASE("range upper bound") {
    RadarRequirements req = base_req();
    req.max_unambiguous_range_m = 10000.0;  // c/(2*15e3*1e4) = 1 exactly
    CHECK(mu_upper_bound_range(req) == 0);
    req.max_unambiguous_range_m = 1250.0;  // = 8 exactly
    CHECK(mu_upper_bound_range(req) == 3);
    req.max_unambiguous_range_m = 5000.0;  // = 2 exactly
    CHECK(mu_upper_bound_range(req) == 1);
    req.max_unambiguous_range_m = 50.0;  // raw bound above 6 clamps to 6
    CHECK(mu_upper_bound_range(req) == 6);
}

TEST_CASE("prf lower bound") {
    RadarRequirements req = base_req();
    // 4 fc v n0 L0 = 4 * 7.5e8 * 1 * 1 = 3e9 = 10c exactly -> log2(1) = 0
    req.carrier_frequency_hz = 7.5e8;
    req.max_unambiguous_velocity_mps = 1.0;
    req.ssb_period_slots = 1;
    req.frame_length_slots = 1;
    CHECK(mu_lower_bound_prf(req) == 0);

    // 4*26e9*40*320/(10c) = 443733.3 -> ceil(log2) = 19: far outside {0..6}
    req = base_req();
    req.max_unambiguous_velocity_mps = 40.0;
    req.ssb_period_slots = 2;
    req.frame_length_slots = 160;
    CHECK(mu_lower_bound_prf(req) == 19);

    // tiny velocity: raw bound is negative, clamps to 0
    req = base_req();
    req.max_unambiguous_velocity_mps = 1e-3;
    CHECK(mu_lower_bound_prf(req) == 0);
}

TEST_CASE("pri and prf from mu") {
    CHECK(pri_from_mu(0, 1, 10) == 0.010);
    CHECK(pri_from_mu(3, 1, 10) == 0.00125);
    CHECK(1.0 / pri_from_mu(3, 1, 10) == 800.0);
    CHECK(pri_from_mu(1, 2, 10) == 0.010);
    CHECK_THROWS_AS(pri_from_mu(7, 1, 10), ConfigError);
    CHECK_THROWS_AS(pri_from_mu(0, 0, 10), ConfigError);
}

TEST_CASE("select numerology picks the window") {
    RadarRequirements req = base_req();
    req.range_resolution_m = 5.3;
    req.max_unambiguous_range_m = 1250.0;
    const NumerologyPlan plan = select_numerology(req);
    CHECK(plan.mu == 3);
    CHECK(plan.scs_hz == std::ldexp(15000.0, 3));
    CHECK(plan.ssb_bandwidth_hz == 240.0 * plan.scs_hz);
    CHECK(plan.prf_hz == 800.0);
    CHECK(std::abs(plan.prf_hz * plan.pri_s - 1.0) < 1e-12);
    CHECK(plan.range_resolution_m == doctest::Approx(5.2083333333).epsilon(1e-9));
    CHECK(plan.cp_duration_s ==
          doctest::Approx(plan.symbol_duration_s * 288.0 / 4096.0).epsilon(1e-12));
}

TEST_CASE("select numerology window edges") {
    RadarRequirements req = base_req();  // mu window exactly [0, 0]
    const NumerologyPlan plan = select_numerology(req);
    CHECK(plan.mu == 0);

    req.range_resolution_m = 1.0;  // needs mu >= 6, range caps mu at 0
    CHECK_THROWS_AS(select_numerology(req), InfeasibleError);
}

TEST_CASE("tie break") {
    RadarRequirements req = base_req();
    req.range_resolution_m = 21.0;          // lower bound 1
    req.max_unambiguous_range_m = 1250.0;   // upper bound 3
    CHECK(select_numerology(req, MuTieBreak::PreferSmallest).mu == 1);
    CHECK(select_numerology(req, MuTieBreak::PreferLargest).mu == 3);
}

TEST_CASE("requirements validation") {
    RadarRequirements req = base_req();
    req.range_resolution_m = -1.0;
    CHECK_THROWS_AS(select_numerology(req), ConfigError);
    req = base_req();
    req.ssb_period_slots = 0;
    CHECK_THROWS_AS(select_numerology(req), ConfigError);
}

TEST_CASE("selection agrees with exhaustive feasibility scan") {
    std::mt19937_64 rng(20260809);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int feasible_count = 0;
    for (int it = 0; it < 2000; ++it) {
        RadarRequirements req;
        req.range_resolution_m = std::pow(10.0, -0.3 + 2.3 * u(rng));
        req.max_unambiguous_range_m = std::pow(10.0, 2.0 + 2.5 * u(rng));
        req.max_unambiguous_velocity_mps = std::pow(10.0, -3.0 + 5.0 * u(rng));
        req.carrier_frequency_hz = std::pow(10.0, 9.0 + 2.0 * u(rng));
        req.ssb_period_slots = 1 + static_cast<int>(4.0 * u(rng));
        req.frame_length_slots = 10 + static_cast<int>(310.0 * u(rng));

        int brute = -1;
        for (int mu = 0; mu <= 6; ++mu)
            if (mu_feasible(mu, req)) {
                brute = mu;
                break;
            }
        if (brute < 0) {
            CHECK_THROWS_AS(select_numerology(req), InfeasibleError);
        } else {
            ++feasible_count;
            const NumerologyPlan plan = select_numerology(req);
            CHECK(plan.mu == brute);
            // The selected mu satisfies all three bound operations.
            CHECK(plan.mu >= mu_lower_bound_resolution(req));
            CHECK(plan.mu >= mu_lower_bound_prf(req));
            CHECK(plan.mu <= mu_upper_bound_range(req));
            // Largest-feasible variant agrees with a reverse scan.
            int brute_hi = -1;
            for (int mu = 6; mu >= 0; --mu)
                if (mu_feasible(mu, req)) {
                    brute_hi = mu;
                    break;
                }
            CHECK(select_numerology(req, MuTieBreak::PreferLargest).mu == brute_hi);
        }
    }
    CHECK(feasible_count > 100);  // the sweep exercises both outcomes
}

TEST_CASE("bound monotonicity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int it = 0; it < 200; ++it) {
        RadarRequirements req = base_req();
        req.range_resolution_m = std::pow(10.0, -0.3 + 2.0 * u(rng));
        req.max_unambiguous_range_m = std::pow(10.0, 2.0 + 2.5 * u(rng));
        RadarRequirements tighter = req;
        tighter.range_resolution_m *= 0.5;
        CHECK(mu_lower_bound_resolution(tighter) >= mu_lower_bound_resolution(req));
        RadarRequirements longer = req;
        longer.max_unambiguous_range_m *= 2.0;
        CHECK(mu_upper_bound_range(longer) <= mu_upper_bound_range(req));
    }
}
