#include "mgsim/errors.hpp"
#include "mgsim/phasor_net.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace mgsim;

namespace {

constexpr double kBase = 200e3;

std::vector<Phasor> sources_from(std::span<const double> mags, std::span<const double> angles) {
    std::vector<Phasor> out;
    for (std::size_t i = 0; i < mags.size(); ++i) out.push_back(Phasor::polar(mags[i], angles[i]));
    return out;
}

} // namespace

TEST_CASE("phasor angles are normalized to (-pi, pi]") {
    constexpr double pi = std::numbers::pi;
    CHECK(Phasor::polar(1.0, pi).angle == doctest::Approx(pi));
    CHECK(Phasor::polar(1.0, -pi).angle == doctest::Approx(pi));
    CHECK(Phasor::polar(1.0, 3.0 * pi).angle == doctest::Approx(pi));
    CHECK(Phasor::polar(1.0, -0.5 * pi - 4.0 * pi).angle == doctest::Approx(-0.5 * pi));
    CHECK_THROWS_AS(Phasor::polar(-1.0, 0.0), ValidationError);
}

TEST_CASE("zero impedance and negative resistance are rejected") {
    CHECK_THROWS_AS(Impedance({0.0, 0.0}).validate(), ValidationError);
    CHECK_THROWS_AS(Impedance({-0.1, 0.2}).validate(), ValidationError);
    const std::vector<Phasor> v{Phasor::polar(240, 0)};
    const std::vector<Impedance> z{{0.0, 0.0}};
    CHECK_THROWS_AS(solve_network(v, z, {1e3, 0.0}), ValidationError);
}

TEST_CASE("identical IBRs on identical lines share exactly") {
    const std::vector<Phasor> v{Phasor::polar(240.0, 0.02), Phasor::polar(240.0, 0.02)};
    const std::vector<Impedance> z{{0.001, 0.005}, {0.001, 0.005}};
    const auto sol = solve_network(v, z, {150e3, 90e3});
    CHECK(sol.active[0] == sol.active[1]);
    CHECK(sol.reactive[0] == sol.reactive[1]);
    CHECK(sol.residual <= 1e-9 * kBase);
}

TEST_CASE("no load and equal sources give zero flows") {
    const std::vector<Phasor> v(3, Phasor::polar(240.0, 0.1));
    const std::vector<Impedance> z{{0.0, 0.003}, {0.01, 0.004}, {0.0, 0.009}};
    const auto sol = solve_network(v, z, {0.0, 0.0});
    CHECK(sol.pcc_voltage.magnitude == doctest::Approx(240.0).epsilon(1e-14));
    CHECK(sol.pcc_voltage.angle == doctest::Approx(0.1).epsilon(1e-14));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(sol.active[i]) < 1e-6);
        CHECK(std::abs(sol.reactive[i]) < 1e-6);
    }
}

TEST_CASE("the lower-reactance line carries more reactive power") {
    const std::vector<Phasor> v{Phasor::polar(240.0, 0.0), Phasor::polar(240.0, 0.0)};
    const std::vector<Impedance> z{{0.0, 0.003}, {0.0, 0.009}};
    const auto sol = solve_network(v, z, {100e3, 80e3});
    CHECK(sol.reactive[0] > sol.reactive[1]);
}

TEST_CASE("random three-IBR instances balance complex power") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> mag(236.0, 244.0), ang(-0.05, 0.05), x(0.002, 0.012), r(0.0, 0.004),
        p(0.0, 400e3), q(-100e3, 300e3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::vector<Phasor> v{Phasor::polar(mag(rng), ang(rng)), Phasor::polar(mag(rng), ang(rng)),
                                    Phasor::polar(mag(rng), ang(rng))};
        const std::vector<Impedance> z{{r(rng), x(rng)}, {r(rng), x(rng)}, {r(rng), x(rng)}};
        const LoadDemand load{p(rng), q(rng)};
        const auto sol = solve_network(v, z, load);
        CHECK(sol.residual <= 1e-9 * kBase);
        CHECK(oracle::power_balance_residual(v, z, sol.pcc_voltage, load) <= 1e-9 * kBase);
        // Injections at the terminals equal the sum the oracle recomputes.
        double p_sum = 0.0;
        for (double pi : sol.active) p_sum += pi;
        CHECK(p_sum >= load.active - 1e-9 * kBase);
    }
}

TEST_CASE("heavy load near the transfer limit falls back to Newton") {
    // One source through 1 ohm: fixed point loses contraction as the load
    // approaches the maximum transferable power V^2 / (2 X) = 28.8 kW.
    const std::vector<Phasor> v{Phasor::polar(240.0, 0.0)};
    const std::vector<Impedance> z{{0.0, 1.0}};
    const LoadDemand load{28.79e3, 0.0};
    const auto sol = solve_network(v, z, load);
    CHECK(sol.used_newton);
    CHECK(sol.residual <= 1e-9 * kBase);
    CHECK(oracle::kcl_residual(v, z, sol.pcc_voltage, load) * sol.pcc_voltage.magnitude <= 1e-9 * kBase);
}

TEST_CASE("infeasible load is reported as a plant failure") {
    const std::vector<Phasor> v{Phasor::polar(240.0, 0.0)};
    const std::vector<Impedance> z{{0.0, 1.0}};
    bool threw = false;
    try {
        solve_network(v, z, {100e3, 0.0});
    } catch (const PlantConvergenceError&) {
        threw = true;
    } catch (const PlantCollapseError&) {
        threw = true;
    }
    CHECK(threw);
}

TEST_CASE("equilibrium equalizes n_i P_i and pins the PCC angle") {
    const std::vector<double> mags{239.2, 239.9, 240.3, 240.8};
    const std::vector<Impedance> z{{0.0, 0.003}, {0.0, 0.005}, {0.002, 0.007}, {0.0, 0.009}};
    const std::vector<double> n{2e-5, 2e-5, 4e-5, 1e-5};
    const LoadDemand load{400e3, 300e3};
    const auto eq = solve_equilibrium(mags, z, load, n, {});
    const auto& net = eq.network;
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < 4; ++i) {
        lo = std::min(lo, n[i] * net.active[i]);
        hi = std::max(hi, n[i] * net.active[i]);
    }
    CHECK(hi - lo <= 1e-9 * kBase * 4e-5);
    CHECK(std::abs(net.pcc_voltage.angle) < 1e-12);
    // Inverse-n sharing: P_i / P_j = n_j / n_i.
    CHECK(net.active[2] / net.active[3] == doctest::Approx(0.25).epsilon(1e-10));
    const auto src = sources_from(mags, eq.angles);
    CHECK(oracle::power_balance_residual(src, z, net.pcc_voltage, load) <= 1e-9 * kBase);
}

TEST_CASE("permuting IBRs permutes the equilibrium") {
    const std::vector<double> mags{239.2, 240.3, 240.8};
    const std::vector<Impedance> z{{0.0, 0.003}, {0.001, 0.007}, {0.0, 0.009}};
    const std::vector<double> n{2e-5, 3e-5, 1e-5};
    const std::vector<std::size_t> perm{2, 0, 1};
    std::vector<double> mags_p, n_p;
    std::vector<Impedance> z_p;
    for (auto k : perm) {
        mags_p.push_back(mags[k]);
        z_p.push_back(z[k]);
        n_p.push_back(n[k]);
    }
    const LoadDemand load{250e3, 180e3};
    const auto a = solve_equilibrium(mags, z, load, n, {});
    const auto b = solve_equilibrium(mags_p, z_p, load, n_p, {});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(b.network.active[i] == doctest::Approx(a.network.active[perm[i]]).epsilon(1e-9));
        CHECK(b.network.reactive[i] == doctest::Approx(a.network.reactive[perm[i]]).epsilon(1e-9));
        CHECK(b.angles[i] == doctest::Approx(a.angles[perm[i]]).epsilon(1e-9));
    }
    CHECK(b.network.pcc_voltage.magnitude == doctest::Approx(a.network.pcc_voltage.magnitude).epsilon(1e-12));
}

TEST_CASE("single IBR carries the whole load") {
    const std::vector<double> mags{240.0};
    const std::vector<Impedance> z{{0.0, 0.004}};
    const std::vector<double> n{2e-5};
    const auto eq = solve_equilibrium(mags, z, {50e3, 20e3}, n, {});
    CHECK(std::abs(eq.network.active[0] - 50e3) <= 1e-9 * kBase);
    CHECK(eq.network.reactive[0] > 20e3); // plus line reactive losses
}

TEST_CASE("low-pass filter step") {
    SUBCASE("constant input is a fixed point") {
        CHECK(lowpass_step(3.5, 3.5, 0.1, 0.05) == doctest::Approx(3.5));
    }
    SUBCASE("unit step held for one time constant") {
        const double tau = 0.2, dt = tau / 50.0;
        double y = 0.0;
        for (int k = 0; k < 50; ++k) y = lowpass_step(y, 1.0, tau, dt);
        CHECK(y >= 0.60);
        CHECK(y <= 0.66);
        // Backward Euler: 1 - (1 + dt/tau)^-50, within 0.01 of 1 - e^-1.
        CHECK(std::abs(y - (1.0 - std::exp(-1.0))) < 0.01);
    }
    SUBCASE("very large tau barely moves") {
        CHECK(std::abs(lowpass_step(0.0, 1.0, 1e9, 0.05)) < 1e-10);
    }
    SUBCASE("output stays between previous value and input") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> val(-1e5, 1e5), tau(1e-3, 10.0), dt(1e-4, 1.0);
        for (int k = 0; k < 1000; ++k) {
            const double a = val(rng), b = val(rng);
            const double y = lowpass_step(a, b, tau(rng), dt(rng));
            CHECK(y >= std::min(a, b));
            CHECK(y <= std::max(a, b));
        }
    }
    CHECK_THROWS_AS(lowpass_step(0.0, 1.0, 0.0, 0.05), ValidationError);
}
