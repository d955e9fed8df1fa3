#pragma once

#include <complex>
#include <span>
#include <vector>

namespace mgsim {

using Complex = std::complex<double>;

/// Voltage phasor in polar form. Angle is kept in (-pi, pi].
struct Phasor {
    double magnitude = 0.0; // volts
    double angle = 0.0;     // radians

    static Phasor polar(double magnitude, double angle);
    static Phasor from_complex(Complex c);
    Complex to_complex() const;
};

double normalize_angle(double angle);

struct Impedance {
    double resistance = 0.0; // ohms
    double reactance = 0.0;  // ohms

    Complex value() const { return {resistance, reactance}; }
    void validate() const;
};

/// Constant-power demand at the PCC.
struct LoadDemand {
    double active = 0.0;   // W
    double reactive = 0.0; // var

    Complex value() const { return {active, reactive}; }
    void validate() const;
};

struct NetworkSolution {
    Phasor pcc_voltage;
    std::vector<double> active;   // W injected at each IBR terminal
    std::vector<double> reactive; // var injected at each IBR terminal
    double residual = 0.0;        // VA, |S delivered to PCC - S_load|
    int iterations = 0;
    bool used_newton = false;
};

struct SolverOptions {
    double base_power = 200e3; // VA, per-unit base for tolerances
    double tolerance_pu = 1e-9;
    int max_iterations = 200;

    double tolerance_va() const { return tolerance_pu * base_power; }
};

/// Solve the PCC voltage for given IBR source phasors feeding a constant-power
/// load through radial lines. Fixed-point on the current balance, with a 2x2
/// Newton fallback when the fixed point stalls.
///
/// Throws PlantConvergenceError if no iterate meets the tolerance and
/// PlantCollapseError if the PCC voltage iterate reaches zero.
NetworkSolution solve_network(std::span<const Phasor> ibr_voltages,
                              std::span<const Impedance> lines,
                              const LoadDemand& load,
                              const SolverOptions& opts = {});

/// Plant equilibrium with the frequency loop settled: source angles are chosen
/// so that every droop_n[i] * P_i is equal and the PCC angle is zero.
struct Equilibrium {
    std::vector<double> angles; // source angles relative to the PCC
    NetworkSolution network;
    int iterations = 0;
};

Equilibrium solve_equilibrium(std::span<const double> magnitudes,
                              std::span<const Impedance> lines,
                              const LoadDemand& load,
                              std::span<const double> droop_n,
                              std::span<const double> angle_guess,
                              const SolverOptions& opts = {});

/// Complex current flowing from each source into the PCC.
std::vector<Complex> line_currents(std::span<const Phasor> ibr_voltages,
                                   std::span<const Impedance> lines, Phasor pcc);

/// One backward-Euler step of 1/(tau s + 1).
double lowpass_step(double prev_filtered, double instantaneous, double tau, double dt);

} // namespace mgsim
