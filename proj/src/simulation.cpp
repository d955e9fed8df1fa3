#include "mgsim/simulation.hpp"

#include "mgsim/errors.hpp"

#include <fmt/core.h>

#include <cmath>
#include <fstream>

namespace mgsim {

Simulation::Simulation(Scenario scenario) : scenario_(std::move(scenario)) {
    scenario_.validate();
    droop_ = scenario_.droop();
    lines_ = scenario_.lines();
    weights_ = scenario_.weights();
    for (const auto& d : droop_) droop_n_.push_back(d.n);

    const std::size_t n = scenario_.size();
    setpoint_.assign(n, scenario_.nominal.v_star);
    angles_.assign(n, 0.0);
    p_filt_.assign(n, 0.0);
    q_filt_.assign(n, 0.0);
    sec_.assign(n, SecondaryState{});
    for (const auto& b : scenario_.ibrs) log_.ibr_ids.push_back(b.id);
    log_.objectives = scenario_.objectives();
    log_.rows.reserve(scenario_.tick_count());
}

void Simulation::step() {
    if (done()) return;
    const std::size_t n = scenario_.size();
    const auto& nom = scenario_.nominal;
    const double dt = scenario_.tick;
    const double t = static_cast<double>(tick_) * dt;

    for (std::size_t i = 0; i < n; ++i) {
        if (!(setpoint_[i] > 0.0))
            throw PlantCollapseError(fmt::format("tick {}: IBR {} voltage set-point {:.6g} V is not positive", tick_,
                                                 scenario_.ibrs[i].id, setpoint_[i]));
    }

    TickRecord row;
    row.t = t;
    row.load = scenario_.load_at(t);

    Equilibrium eq;
    try {
        eq = solve_equilibrium(setpoint_, lines_, row.load, droop_n_, angles_, scenario_.solver);
    } catch (const PlantCollapseError& e) {
        throw PlantCollapseError(fmt::format("tick {} (t = {:.6g} s): {}", tick_, t, e.what()));
    } catch (const PlantConvergenceError& e) {
        throw PlantConvergenceError(fmt::format("tick {} (t = {:.6g} s): {}", tick_, t, e.what()));
    }
    angles_ = eq.angles;
    const auto& net = eq.network;

    for (std::size_t i = 0; i < n; ++i) {
        if (tick_ == 0) {
            p_filt_[i] = net.active[i];
            q_filt_[i] = net.reactive[i];
        } else {
            p_filt_[i] = lowpass_step(p_filt_[i], net.active[i], droop_[i].tau_s, dt);
            q_filt_[i] = lowpass_step(q_filt_[i], net.reactive[i], droop_[i].tau_s, dt);
        }
    }

    std::vector<Measurement> meas(n);
    for (std::size_t i = 0; i < n; ++i) meas[i] = {setpoint_[i], q_filt_[i]};

    const auto& enable = scenario_.secondary_enable_time;
    row.secondary_active = enable.has_value() && t >= *enable - 0.5 * dt;
    if (row.secondary_active) {
        auto res = secondary_tick(sec_, meas, weights_, droop_, nom, scenario_.ctrl, scenario_.graph,
                                  scenario_.consensus_at(tick_));
        sec_ = std::move(res.states);
        row.consensus_rounds = res.consensus_rounds;
    } else {
        // Keep alpha current so the first enabled tick steps from fresh measurements.
        for (std::size_t i = 0; i < n; ++i) {
            sec_[i].alpha = compute_alpha(weights_[i], droop_[i], nom, meas[i].voltage, meas[i].reactive);
            sec_[i].v = 0.0;
        }
    }

    row.pcc_v = net.pcc_voltage.magnitude;
    row.ibr.resize(n);
    row.plant.pcc = net.pcc_voltage;
    row.plant.residual = net.residual;
    row.plant.p_inst = net.active;
    row.plant.q_inst = net.reactive;
    for (std::size_t i = 0; i < n; ++i) {
        row.plant.sources.push_back(Phasor::polar(setpoint_[i], angles_[i]));
        row.ibr[i] = {p_filt_[i],
                      q_filt_[i],
                      setpoint_[i],
                      droop_frequency(droop_[i], nom, net.active[i]),
                      sec_[i].v,
                      sec_[i].x};
        setpoint_[i] = droop_voltage(droop_[i], nom, q_filt_[i], sec_[i].v);
    }
    log_.rows.push_back(std::move(row));
    ++tick_;
}

const TimeSeriesLog& Simulation::run() {
    while (!done()) step();
    return log_;
}

TimeSeriesLog run(const Scenario& scenario) {
    Simulation sim(scenario);
    sim.run();
    return sim.log();
}

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{
        "t",        "ibr_id",   "P_w",       "Q_var",      "V_volt",         "omega_rad_s", "v_adj_volt",
        "x_est_volt", "pcc_v_volt", "load_p_w", "load_q_var", "consensus_rounds", "mode"};
    return cols;
}

std::string format_csv(const TimeSeriesLog& log, const Scenario& sc) {
    std::string out;
    out += fmt::format("# scenario: {}\n", sc.name);
    out += fmt::format("# config: {}\n", sc.source.dump());
    out += fmt::format("# mode: {}\n", to_string(sc.mode()));
    out += fmt::format("# nominal: omega_star_rad_s={:.9g} v_star_volt={:.9g}\n", sc.nominal.omega_star,
                       sc.nominal.v_star);
    out += fmt::format(
        "# control: rho={:.9g} gamma={:.9g} epsilon_target_volt={:.9g} reset_period={} max_rounds={} enable_time_s={}\n",
        sc.ctrl.rho, sc.ctrl.gamma, sc.ctrl.epsilon_target, sc.reset_period, sc.max_rounds,
        sc.secondary_enable_time ? fmt::format("{:.9g}", *sc.secondary_enable_time) : std::string{"off"});
    out += fmt::format("# timing: tick_s={:.9g} duration_s={:.9g} seed={}\n", sc.tick, sc.duration, sc.seed);
    out += fmt::format("# solver: base_power_va={:.9g} tolerance_pu={:.9g} max_iterations={}\n", sc.solver.base_power,
                       sc.solver.tolerance_pu, sc.solver.max_iterations);
    for (const auto& b : sc.ibrs) {
        out += fmt::format(
            "# ibr {}: n_rad_s_per_w={:.9g} m_volt_per_var={:.9g} tau_s={:.9g} r_ohm={:.9g} x_ohm={:.9g} "
            "objective={} a_v={:.9g} a_q={:.9g} beta_v={:.9g} beta_q={:.9g}\n",
            b.id, b.droop.n, b.droop.m, b.droop.tau_s, b.line.resistance, b.line.reactance, to_string(b.objective),
            b.weights.a_v, b.weights.a_q, b.weights.beta_v, b.weights.beta_q);
    }

    const auto& cols = csv_columns();
    for (std::size_t k = 0; k < cols.size(); ++k) {
        out += cols[k];
        out += k + 1 < cols.size() ? ',' : '\n';
    }
    for (const auto& row : log.rows) {
        for (std::size_t i = 0; i < row.ibr.size(); ++i) {
            const auto& s = row.ibr[i];
            out += fmt::format("{:.9g},{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{},{}\n",
                               row.t, log.ibr_ids[i], s.p, s.q, s.v, s.omega, s.v_adj, s.x_est, row.pcc_v,
                               row.load.active, row.load.reactive, row.consensus_rounds,
                               to_string(log.objectives[i]));
        }
    }
    return out;
}

void emit_csv(const TimeSeriesLog& log, const Scenario& scenario, const std::filesystem::path& out_path) {
    if (log.rows.empty()) throw ValidationError("refusing to write an empty log");
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", out_path.string()));
    const auto text = format_csv(log, scenario);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError(fmt::format("write to '{}' failed", out_path.string()));
}

} // namespace mgsim
