#include "mgsim/droop.hpp"
#include "mgsim/errors.hpp"
#include "mgsim/units.hpp"

#include <doctest.h>

#include <vector>

using namespace mgsim;

namespace {

const NominalSetpoints kNom{units::hz_to_rad_s(60.0), 240.0};

// Large droop gains: 0.32 Hz/kW and 40 V/kVAr.
DroopParams table_gains() {
    return {units::hz_per_kw_to_rad_s_per_w(0.32), units::v_per_kvar_to_v_per_var(40.0), 0.1};
}

} // namespace

TEST_CASE("droop_frequency") {
    const auto d = table_gains();
    CHECK(droop_frequency(d, kNom, 0.0) == kNom.omega_star);
    CHECK(kNom.omega_star - droop_frequency(d, kNom, 100e3) == doctest::Approx(units::two_pi * 32.0));

    auto d2 = d;
    d2.n *= 2.0;
    CHECK(kNom.omega_star - droop_frequency(d2, kNom, 40e3) ==
          doctest::Approx(2.0 * (kNom.omega_star - droop_frequency(d, kNom, 40e3))));
}

TEST_CASE("droop_voltage") {
    const auto d = table_gains();
    CHECK(droop_voltage(d, kNom, 0.0, 0.0) == kNom.v_star);
    CHECK(droop_voltage(d, kNom, 75e3, 0.0) == doctest::Approx(kNom.v_star - 3000.0));
    CHECK(droop_voltage(d, kNom, 75e3, d.m * 75e3) == doctest::Approx(kNom.v_star));
}

TEST_CASE("droop laws are affine in power") {
    const DroopParams d{2e-5, 3e-6, 0.1};
    const double a = 12e3, b = -7.5e3;
    const double w0 = droop_frequency(d, kNom, 0.0);
    CHECK(droop_frequency(d, kNom, a + b) - w0 ==
          doctest::Approx((droop_frequency(d, kNom, a) - w0) + (droop_frequency(d, kNom, b) - w0)));
    const double v0 = droop_voltage(d, kNom, 0.0, 0.4);
    CHECK(droop_voltage(d, kNom, a + b, 0.4) - v0 ==
          doctest::Approx((droop_voltage(d, kNom, a, 0.4) - v0) + (droop_voltage(d, kNom, b, 0.4) - v0)));
}

TEST_CASE("steady_state_frequency") {
    const double n = units::hz_per_kw_to_rad_s_per_w(0.003);
    SUBCASE("no load") {
        const std::vector<double> ns{n, 2 * n};
        CHECK(steady_state_frequency(ns, kNom, 0.0) == kNom.omega_star);
    }
    SUBCASE("two equal gains") {
        const std::vector<double> ns{n, n};
        CHECK(steady_state_frequency(ns, kNom, 1e6) == doctest::Approx(kNom.omega_star - 0.5 * n * 1e6));
    }
    SUBCASE("ten equal gains agree with equal sharing through the droop law") {
        const std::vector<double> ns(10, n);
        const DroopParams d{n, 1e-6, 0.1};
        CHECK(steady_state_frequency(ns, kNom, 1.25e6) == doctest::Approx(droop_frequency(d, kNom, 1.25e5)));
    }
    CHECK_THROWS_AS(steady_state_frequency({}, kNom, 1.0), ValidationError);
    const std::vector<double> bad{n, 0.0};
    CHECK_THROWS_AS(steady_state_frequency(bad, kNom, 1.0), ValidationError);
}

TEST_CASE("droop parameter validation") {
    CHECK_NOTHROW(DroopParams{1e-5, 1e-6, 0.1}.validate());
    CHECK_THROWS_AS((DroopParams{0.0, 1e-6, 0.1}.validate()), ValidationError);
    CHECK_THROWS_AS((DroopParams{1e-5, -1.0, 0.1}.validate()), ValidationError);
    CHECK_THROWS_AS((DroopParams{1e-5, 1e-6, 0.0}.validate()), ValidationError);
    CHECK_THROWS_AS((NominalSetpoints{0.0, 240.0}.validate()), ValidationError);
}
