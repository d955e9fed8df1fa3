#pragma once

#include "mgsim/comm_graph.hpp"
#include "mgsim/droop.hpp"
#include "mgsim/ratio_consensus.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mgsim {

/// What one IBR asks of the secondary layer.
enum class IbrObjective { share_q, regulate_v };

/// Scenario-wide objective, derived from the per-IBR objectives.
enum class ObjectiveMode { share_q, regulate_v, mixed };

std::string_view to_string(IbrObjective o);
std::string_view to_string(ObjectiveMode m);
IbrObjective parse_objective(std::string_view s);
ObjectiveMode mode_of(std::span<const IbrObjective> objectives);

/// Per-IBR free parameters: a_v, a_q shape the local target alpha, beta_v,
/// beta_q shape the adjustment and thus the steady state.
struct ObjectiveWeights {
    double a_v = 0.0;
    double a_q = 0.0;
    double beta_v = 0.0;
    double beta_q = 0.0;

    /// beta_v = 1, beta_q = 0: equal m_i Q_i at steady state.
    static ObjectiveWeights share_q(double a_v, double a_q) { return {a_v, a_q, 1.0, 0.0}; }
    /// beta_v = 0, beta_q = 1, a_v = a_q = 0: V_i = V* at steady state.
    static ObjectiveWeights regulate_v() { return {0.0, 0.0, 0.0, 1.0}; }

    bool matches(IbrObjective o) const;
};

/// Parameters shared by all controllers: gradient step rho, regularization
/// gamma, and the per-tick consensus tolerance.
struct CtrlParams {
    double rho = 0.0;
    double gamma = 0.01;
    double epsilon_target = 1e-4; // V

    static CtrlParams with_default_rho(double gamma, double epsilon_target) {
        return {1.0 / (1.0 + gamma), gamma, epsilon_target};
    }
    /// Tolerance handed to the consensus solve at each tick (constant eps/2).
    double epsilon_at(std::size_t /*tick*/) const { return 0.5 * epsilon_target; }
    /// Throws ValidationError unless gamma > 0, 0 < rho < 2/(1+gamma), eps/2 >= 1e-12.
    void validate() const;
};

inline constexpr double kEpsilonFloor = 1e-12;

struct SecondaryState {
    double x = 0.0;     // local estimate of the per-tick optimum, V
    double alpha = 0.0; // local target from the latest measurement, V
    double v = 0.0;     // adjustment added to the droop set-point, V
};

struct Measurement {
    double voltage = 0.0;  // V_i(t), V
    double reactive = 0.0; // filtered Q_i(t), var
};

/// a_v (V* - V) + a_q m Q
double compute_alpha(const ObjectiveWeights& w, const DroopParams& droop, const NominalSetpoints& nom,
                     double v_meas, double q_filtered);

/// Minimizer of sum_i (x - alpha_i)^2 / 2 + gamma x^2 / 2, i.e. sum(alpha) / (N (1 + gamma)).
double x_star_oracle(std::span<const double> alphas, double gamma);

/// Descent step on f(x) = (x - alpha)^2 / 2 + gamma x^2 / 2.
inline double gradient_step(double x_prev, double alpha_prev, double rho, double gamma) {
    return x_prev - rho * ((1.0 + gamma) * x_prev - alpha_prev);
}

/// x + beta_q m Q - beta_v (V* - V)
double adjustment(const ObjectiveWeights& w, const DroopParams& droop, const NominalSetpoints& nom, double x,
                  double v_meas, double q_filtered);

struct TickResult {
    std::vector<SecondaryState> states;
    std::size_t consensus_rounds = 0;
};

/// One secondary tick for every IBR: gradient step from the stored alpha,
/// consensus over the post-gradient values, alpha refreshed from the new
/// measurements, adjustment computed from the agreed estimate.
TickResult secondary_tick(std::span<const SecondaryState> states, std::span<const Measurement> meas,
                          std::span<const ObjectiveWeights> weights, std::span<const DroopParams> droop,
                          const NominalSetpoints& nom, const CtrlParams& params, const CommGraph& g,
                          const ConsensusConfig& consensus);

struct SteadyStateReport {
    bool passed = true;
    double share_spread_rel = 0.0; // (max - min) / |mean| of m_i Q_i over the share_q group
    double share_mean = 0.0;       // V
    double max_voltage_dev = 0.0;  // max |V_i - V*| over the regulate_v group
    std::size_t share_count = 0;
    std::size_t regulate_count = 0;
    std::string detail;
};

struct SteadyStateTolerance {
    double share_rel = 0.01; // m_i Q_i spread as a fraction of the group mean
    double voltage_abs = 0.5; // V
};

/// Checks the steady-state property of each objective group on final
/// per-IBR (V, Q). Throws NotSteadyError when `settled` is false.
SteadyStateReport steady_state_check(std::span<const IbrObjective> objectives, std::span<const Measurement> final_vq,
                                     std::span<const DroopParams> droop, const NominalSetpoints& nom,
                                     const SteadyStateTolerance& tol, bool settled);

} // namespace mgsim
