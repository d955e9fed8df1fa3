#pragma once

#include "mgsim/phasor_net.hpp"
#include "mgsim/scenario.hpp"
#include "mgsim/secondary_ctrl.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace mgsim {

struct IbrSample {
    double p = 0.0;     // filtered active power, W
    double q = 0.0;     // filtered reactive power, var
    double v = 0.0;     // terminal voltage magnitude used this tick, V
    double omega = 0.0; // settled droop frequency, rad/s
    double v_adj = 0.0; // secondary adjustment, V
    double x_est = 0.0; // local optimum estimate, V
};

/// Solved plant state of one tick, kept so tests can re-check it independently.
struct PlantSnapshot {
    std::vector<Phasor> sources;
    Phasor pcc;
    std::vector<double> p_inst, q_inst;
    double residual = 0.0; // VA
};

struct TickRecord {
    double t = 0.0;
    std::vector<IbrSample> ibr;
    double pcc_v = 0.0;
    LoadDemand load;
    std::size_t consensus_rounds = 0;
    bool secondary_active = false;
    PlantSnapshot plant;
};

struct TimeSeriesLog {
    std::vector<int> ibr_ids;
    std::vector<IbrObjective> objectives;
    std::vector<TickRecord> rows;
};

/// Outer loop coupling plant and controllers, one tick per step():
/// load events, equilibrium solve, P/Q filters, secondary tick when enabled,
/// droop set-points for the next tick, log row.
class Simulation {
public:
    explicit Simulation(Scenario scenario);

    bool done() const { return tick_ >= scenario_.tick_count(); }
    void step();
    /// Steps until done; on a plant or consensus error the log keeps the ticks
    /// completed so far and the exception propagates.
    const TimeSeriesLog& run();

    const TimeSeriesLog& log() const { return log_; }
    const Scenario& scenario() const { return scenario_; }
    std::size_t tick() const { return tick_; }

private:
    Scenario scenario_;
    std::vector<DroopParams> droop_;
    std::vector<Impedance> lines_;
    std::vector<ObjectiveWeights> weights_;
    std::vector<double> droop_n_;

    std::vector<double> setpoint_;
    std::vector<double> angles_;
    std::vector<double> p_filt_, q_filt_;
    std::vector<SecondaryState> sec_;
    std::size_t tick_ = 0;
    TimeSeriesLog log_;
};

TimeSeriesLog run(const Scenario& scenario);

/// Column names of the CSV body, in order.
const std::vector<std::string>& csv_columns();

/// CSV text: '#' lines echoing the configuration, a header row, then one row
/// per (tick, IBR), numbers with 9 significant digits.
std::string format_csv(const TimeSeriesLog& log, const Scenario& scenario);

/// Throws ValidationError for an empty log and IoError for an unwritable path.
void emit_csv(const TimeSeriesLog& log, const Scenario& scenario, const std::filesystem::path& out_path);

} // namespace mgsim
