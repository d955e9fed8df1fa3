#include "mgsim/secondary_ctrl.hpp"

#include "mgsim/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>

namespace mgsim {

std::string_view to_string(IbrObjective o) {
    return o == IbrObjective::share_q ? "share_q" : "regulate_v";
}

std::string_view to_string(ObjectiveMode m) {
    switch (m) {
    case ObjectiveMode::share_q: return "share_q";
    case ObjectiveMode::regulate_v: return "regulate_v";
    case ObjectiveMode::mixed: return "mixed";
    }
    return "mixed";
}

IbrObjective parse_objective(std::string_view s) {
    if (s == "share_q") return IbrObjective::share_q;
    if (s == "regulate_v") return IbrObjective::regulate_v;
    throw ValidationError(fmt::format("unknown objective '{}' (expected share_q or regulate_v)", s));
}

ObjectiveMode mode_of(std::span<const IbrObjective> objectives) {
    const auto shares = std::count(objectives.begin(), objectives.end(), IbrObjective::share_q);
    if (shares == static_cast<std::ptrdiff_t>(objectives.size())) return ObjectiveMode::share_q;
    if (shares == 0) return ObjectiveMode::regulate_v;
    return ObjectiveMode::mixed;
}

bool ObjectiveWeights::matches(IbrObjective o) const {
    if (o == IbrObjective::share_q) return beta_v == 1.0 && beta_q == 0.0;
    return beta_v == 0.0 && beta_q == 1.0 && a_v == 0.0 && a_q == 0.0;
}

void CtrlParams::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be positive");
    const double bound = 2.0 / (1.0 + gamma);
    if (!(rho > 0.0) || !(rho < bound))
        throw ValidationError(fmt::format("rho = {} outside (0, 2/(1+gamma)) = (0, {})", rho, bound));
    if (!(epsilon_at(0) >= kEpsilonFloor))
        throw ValidationError(fmt::format("epsilon target {} is below the floor {}", epsilon_target,
                                          2.0 * kEpsilonFloor));
}

double compute_alpha(const ObjectiveWeights& w, const DroopParams& droop, const NominalSetpoints& nom,
                     double v_meas, double q_filtered) {
    return w.a_v * (nom.v_star - v_meas) + w.a_q * droop.m * q_filtered;
}

double x_star_oracle(std::span<const double> alphas, double gamma) {
    if (alphas.empty()) throw ValidationError("x_star_oracle needs at least one alpha");
    double sum = 0.0;
    for (double a : alphas) sum += a;
    return sum / (static_cast<double>(alphas.size()) * (1.0 + gamma));
}

double adjustment(const ObjectiveWeights& w, const DroopParams& droop, const NominalSetpoints& nom, double x,
                  double v_meas, double q_filtered) {
    return x + w.beta_q * droop.m * q_filtered - w.beta_v * (nom.v_star - v_meas);
}

TickResult secondary_tick(std::span<const SecondaryState> states, std::span<const Measurement> meas,
                          std::span<const ObjectiveWeights> weights, std::span<const DroopParams> droop,
                          const NominalSetpoints& nom, const CtrlParams& params, const CommGraph& g,
                          const ConsensusConfig& consensus) {
    const std::size_t n = states.size();
    if (meas.size() != n || weights.size() != n || droop.size() != n || g.size() != n)
        throw ValidationError("secondary_tick: per-IBR inputs must all have the graph's size");

    std::vector<double> x_plus(n);
    for (std::size_t i = 0; i < n; ++i)
        x_plus[i] = gradient_step(states[i].x, states[i].alpha, params.rho, params.gamma);

    const auto agreed = consensus_epsilon(x_plus, g, consensus);

    TickResult out;
    out.consensus_rounds = agreed.rounds;
    out.states.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& s = out.states[i];
        s.x = agreed.values[i];
        s.alpha = compute_alpha(weights[i], droop[i], nom, meas[i].voltage, meas[i].reactive);
        s.v = adjustment(weights[i], droop[i], nom, s.x, meas[i].voltage, meas[i].reactive);
    }
    return out;
}

SteadyStateReport steady_state_check(std::span<const IbrObjective> objectives, std::span<const Measurement> final_vq,
                                     std::span<const DroopParams> droop, const NominalSetpoints& nom,
                                     const SteadyStateTolerance& tol, bool settled) {
    if (!settled) throw NotSteadyError("steady-state check requested before the run settled");
    if (objectives.size() != final_vq.size() || droop.size() != final_vq.size())
        throw ValidationError("steady_state_check: per-IBR inputs must have equal length");

    SteadyStateReport rep;
    double lo = 0.0, hi = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < final_vq.size(); ++i) {
        if (objectives[i] == IbrObjective::share_q) {
            const double mq = droop[i].m * final_vq[i].reactive;
            if (rep.share_count == 0) lo = hi = mq;
            lo = std::min(lo, mq);
            hi = std::max(hi, mq);
            sum += mq;
            ++rep.share_count;
        } else {
            rep.max_voltage_dev = std::max(rep.max_voltage_dev, std::abs(final_vq[i].voltage - nom.v_star));
            ++rep.regulate_count;
        }
    }
    if (rep.share_count > 0) {
        rep.share_mean = sum / static_cast<double>(rep.share_count);
        rep.share_spread_rel = rep.share_mean != 0.0 ? (hi - lo) / std::abs(rep.share_mean) : (hi - lo);
        if (rep.share_spread_rel > tol.share_rel) {
            rep.passed = false;
            rep.detail += fmt::format("m*Q spread {:.4g} exceeds {:.4g} of mean; ", rep.share_spread_rel, tol.share_rel);
        }
    }
    if (rep.regulate_count > 0 && rep.max_voltage_dev > tol.voltage_abs) {
        rep.passed = false;
        rep.detail += fmt::format("max |V - V*| {:.4g} V exceeds {:.4g} V; ", rep.max_voltage_dev, tol.voltage_abs);
    }
    return rep;
}

} // namespace mgsim
