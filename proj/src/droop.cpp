#include "mgsim/droop.hpp"

#include "mgsim/errors.hpp"

#include <cmath>

namespace mgsim {

void DroopParams::validate() const {
    if (!(n > 0.0) || !(m > 0.0) || !(tau_s > 0.0) || !std::isfinite(n) || !std::isfinite(m) ||
        !std::isfinite(tau_s))
        throw ValidationError("droop parameters n, m and tau_s must be positive and finite");
}

void NominalSetpoints::validate() const {
    if (!(omega_star > 0.0) || !(v_star > 0.0))
        throw ValidationError("nominal frequency and voltage must be positive");
}

double steady_state_frequency(std::span<const double> all_n, const NominalSetpoints& nom, double total_load) {
    if (all_n.empty()) throw ValidationError("steady-state frequency needs at least one IBR");
    double inv_sum = 0.0;
    for (double n : all_n) {
        if (!(n > 0.0)) throw ValidationError("droop coefficient n must be positive");
        inv_sum += 1.0 / n;
    }
    return nom.omega_star - total_load / inv_sum;
}

} // namespace mgsim
