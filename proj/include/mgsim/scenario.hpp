#pragma once

#include "mgsim/comm_graph.hpp"
#include "mgsim/droop.hpp"
#include "mgsim/phasor_net.hpp"
#include "mgsim/ratio_consensus.hpp"
#include "mgsim/secondary_ctrl.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mgsim {

struct LoadEvent {
    double time = 0.0; // s
    LoadDemand demand;
};

struct IbrConfig {
    int id = 0; // 1-based, as written in the config
    DroopParams droop;
    Impedance line;
    IbrObjective objective = IbrObjective::share_q;
    ObjectiveWeights weights;
};

struct Scenario {
    std::string name;
    NominalSetpoints nominal;
    std::vector<IbrConfig> ibrs;
    CommGraph graph;
    std::vector<LoadEvent> events;
    double tick = 0.05;    // s
    double duration = 0.0; // s
    std::optional<double> secondary_enable_time;
    CtrlParams ctrl;
    std::size_t reset_period = 5;
    std::size_t max_rounds = 100000;
    std::uint64_t seed = 0;
    SolverOptions solver;
    nlohmann::json source; // the config as loaded, echoed into CSV headers

    std::size_t size() const { return ibrs.size(); }
    ObjectiveMode mode() const;
    std::vector<IbrObjective> objectives() const;
    std::vector<DroopParams> droop() const;
    std::vector<Impedance> lines() const;
    std::vector<ObjectiveWeights> weights() const;
    /// Consensus settings for the solve run at the given tick.
    ConsensusConfig consensus_at(std::size_t tick) const;
    /// Load in force at time t (zero before the first event).
    LoadDemand load_at(double t) const;
    std::size_t tick_count() const;

    /// Re-checks every invariant; throws ValidationError / GraphError.
    void validate() const;
};

/// Build a validated scenario from its JSON form. Units in the file are
/// Hz, V, kW, kVAr, ohm, s; they are converted to SI here.
Scenario parse_scenario(const nlohmann::json& cfg);
Scenario load_scenario(const std::filesystem::path& path);

/// Built-in presets: case1 | case2 | case3.
Scenario preset_scenario(std::string_view name);
std::vector<std::string> preset_names();
std::string_view preset_source(std::string_view name);

} // namespace mgsim
