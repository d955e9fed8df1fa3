// mgsim: run a microgrid secondary-control scenario and write its CSV log.
//
// Exit codes: 0 ok, 2 validation failure, 3 plant non-convergence,
// 4 consensus non-termination, 1 anything else (I/O).

#include "mgsim/errors.hpp"
#include "mgsim/scenario.hpp"
#include "mgsim/simulation.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <omp.h>

#include <optional>
#include <string>

namespace {

enum ExitCode { kOk = 0, kOther = 1, kValidation = 2, kPlant = 3, kConsensus = 4 };

void write_partial(const mgsim::Simulation& sim, const std::string& out, int verbosity) {
    if (sim.log().rows.empty()) return;
    try {
        mgsim::emit_csv(sim.log(), sim.scenario(), out);
        if (verbosity > 0) fmt::print(stderr, "partial log ({} ticks) written to {}\n", sim.log().rows.size(), out);
    } catch (const mgsim::Error& e) {
        fmt::print(stderr, "could not write partial log: {}\n", e.what());
    }
}

void print_summary(const mgsim::Simulation& sim) {
    const auto& sc = sim.scenario();
    const auto& last = sim.log().rows.back();
    std::vector<mgsim::Measurement> vq;
    for (const auto& s : last.ibr) vq.push_back({s.v, s.q});
    const auto rep = mgsim::steady_state_check(sc.objectives(), vq, sc.droop(), sc.nominal, {}, true);
    fmt::print(stderr, "final tick t = {:.3f} s, mode {}\n", last.t, mgsim::to_string(sc.mode()));
    if (rep.share_count > 0)
        fmt::print(stderr, "  share_q group ({}): m*Q mean {:.6g} V, spread {:.4g} % of mean\n", rep.share_count,
                   rep.share_mean, 100.0 * rep.share_spread_rel);
    if (rep.regulate_count > 0)
        fmt::print(stderr, "  regulate_v group ({}): max |V - V*| {:.6g} V\n", rep.regulate_count,
                   rep.max_voltage_dev);
    for (std::size_t i = 0; i < last.ibr.size(); ++i)
        fmt::print(stderr, "  ibr {:>2}: P {:>10.3f} kW  Q {:>10.3f} kVAr  V {:>9.4f} V\n", sim.log().ibr_ids[i],
                   last.ibr[i].p / 1e3, last.ibr[i].q / 1e3, last.ibr[i].v);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Islanded microgrid with droop-controlled grid-forming inverters and a distributed secondary "
                 "controller"};
    std::string scenario_path, preset, out;
    int verbosity = 0;
    std::optional<double> epsilon;
    std::optional<std::size_t> max_rounds;
    int threads = 0;
    bool secondary_off = false;

    auto* scen_opt = app.add_option("-s,--scenario", scenario_path, "Scenario JSON file")->check(CLI::ExistingFile);
    auto* preset_opt = app.add_option("-p,--preset", preset, "Built-in preset")
                           ->check(CLI::IsMember({"case1", "case2", "case3"}));
    scen_opt->excludes(preset_opt);
    app.add_option("-o,--out", out, "Output CSV path (default <scenario name>.csv)");
    app.add_flag("-v,--verbose", verbosity, "Print progress and a steady-state summary (repeat for more)");
    app.add_option("--epsilon", epsilon, "Override the consensus tolerance target, volts")->check(CLI::PositiveNumber);
    app.add_option("--max-rounds", max_rounds, "Override the consensus round limit")->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "OpenMP threads for the consensus kernels (0 = runtime default)")
        ->check(CLI::NonNegativeNumber);
    app.add_flag("--secondary-off", secondary_off, "Run with primary droop control only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidation;
    }
    if (scenario_path.empty() && preset.empty()) {
        fmt::print(stderr, "one of --scenario or --preset is required\n{}", app.help());
        return kValidation;
    }
    if (threads > 0) omp_set_num_threads(threads);

    std::optional<mgsim::Simulation> sim;
    try {
        auto sc = scenario_path.empty() ? mgsim::preset_scenario(preset) : mgsim::load_scenario(scenario_path);
        if (epsilon) sc.ctrl.epsilon_target = *epsilon;
        if (max_rounds) sc.max_rounds = *max_rounds;
        if (secondary_off) sc.secondary_enable_time.reset();
        if (out.empty()) out = sc.name + ".csv";
        sim.emplace(std::move(sc));
    } catch (const mgsim::ValidationError& e) {
        fmt::print(stderr, "validation error: {}\n", e.what());
        return kValidation;
    } catch (const mgsim::GraphError& e) {
        fmt::print(stderr, "validation error: {}\n", e.what());
        return kValidation;
    }

    try {
        if (verbosity > 0)
            fmt::print(stderr, "running '{}' ({} IBRs, {} ticks)\n", sim->scenario().name, sim->scenario().size(),
                       sim->scenario().tick_count());
        while (!sim->done()) {
            sim->step();
            if (verbosity > 1 && sim->tick() % 100 == 0) fmt::print(stderr, "  tick {}\n", sim->tick());
        }
        mgsim::emit_csv(sim->log(), sim->scenario(), out);
        if (verbosity > 0) {
            print_summary(*sim);
            fmt::print(stderr, "wrote {}\n", out);
        }
    } catch (const mgsim::PlantConvergenceError& e) {
        fmt::print(stderr, "plant did not converge: {}\n", e.what());
        write_partial(*sim, out, verbosity);
        return kPlant;
    } catch (const mgsim::PlantCollapseError& e) {
        fmt::print(stderr, "plant voltage collapse: {}\n", e.what());
        write_partial(*sim, out, verbosity);
        return kPlant;
    } catch (const mgsim::ConsensusError& e) {
        fmt::print(stderr, "consensus did not terminate: {}\n", e.what());
        write_partial(*sim, out, verbosity);
        return kConsensus;
    } catch (const mgsim::ProtocolError& e) {
        fmt::print(stderr, "consensus protocol violation: {}\n", e.what());
        write_partial(*sim, out, verbosity);
        return kConsensus;
    } catch (const mgsim::ValidationError& e) {
        fmt::print(stderr, "validation error: {}\n", e.what());
        return kValidation;
    } catch (const mgsim::Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kOther;
    }
    return kOk;
}
