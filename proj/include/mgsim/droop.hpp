#pragma once

#include <span>

namespace mgsim {

/// P~f / Q~V droop gains of one IBR, SI units.
struct DroopParams {
    double n = 0.0;     // (rad/s) per W
    double m = 0.0;     // V per var
    double tau_s = 0.1; // power measurement filter time constant, s

    void validate() const;
};

struct NominalSetpoints {
    double omega_star = 0.0; // rad/s
    double v_star = 0.0;     // V

    void validate() const;
};

inline double droop_frequency(const DroopParams& p, const NominalSetpoints& nom, double p_filtered) {
    return nom.omega_star - p.n * p_filtered;
}

/// V* - m Q + v; the adjustment v is the secondary layer's correction.
inline double droop_voltage(const DroopParams& p, const NominalSetpoints& nom, double q_filtered,
                            double adjustment) {
    return nom.v_star - p.m * q_filtered + adjustment;
}

/// Network frequency once the P~f droops have settled: w* - P_L / sum(1/n_i).
double steady_state_frequency(std::span<const double> all_n, const NominalSetpoints& nom, double total_load);

} // namespace mgsim
