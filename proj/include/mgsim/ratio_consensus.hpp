#pragma once

#include "mgsim/comm_graph.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace mgsim {

/// Per-node estimates of the ratio-consensus protocol with max/min
/// termination detection.
struct ConsensusState {
    double y = 0.0;     // mass numerator
    double z = 1.0;     // mass denominator, > 0
    double r = 0.0;     // y / z
    double max_est = 0.0;
    double min_est = 0.0;
    std::size_t rounds_since_reset = 0;
};

struct ConsensusConfig {
    double epsilon = 1e-6;
    std::size_t reset_period = 5; // D, must be >= graph diameter
    std::size_t max_rounds = 100000;

    /// Checks epsilon >= 0, D >= 1, max_rounds >= 1 and, when a graph is given, D >= diameter.
    void validate() const;
    void validate(const CommGraph& g) const;
};

/// Graphs at least this large run the round kernels under OpenMP.
inline constexpr std::size_t kParallelMinNodes = 512;

std::vector<ConsensusState> consensus_init(std::span<const double> y0);

/// y_i <- y_i/(d_i+1) + sum_{j in N_i^-} y_j/(d_j+1), same for z, then r = y/z.
/// Throws ProtocolError if some z becomes non-positive.
std::vector<ConsensusState> mix_round(std::span<const ConsensusState> states, const CommGraph& g);

/// max_est / min_est flood over N_i^- plus i.
std::vector<ConsensusState> maxmin_round(std::span<const ConsensusState> states, const CommGraph& g);

struct DetectResult {
    std::vector<ConsensusState> states;
    std::vector<char> halt;
    bool all_halted = false;
};

/// Counts the round; every reset_period rounds either raises halt (spread of
/// the flooded envelopes <= epsilon) or re-seeds the envelopes to r.
DetectResult detect_and_reset(std::span<const ConsensusState> states, const ConsensusConfig& cfg);

struct ConsensusResult {
    std::vector<double> values; // r_i at halt
    std::size_t rounds = 0;
    std::size_t cycles = 0; // detection cycles completed
};

/// Runs rounds until every node halts in the same detection cycle.
/// Throws ConsensusError when max_rounds is reached first.
ConsensusResult consensus_epsilon(std::span<const double> y0, const CommGraph& g, const ConsensusConfig& cfg);

/// Serial implementations that route every value through broadcast_round.
/// Kept as the reference the pull kernels are checked against; results are
/// bit-identical because both sum in-neighbors in ascending id order.
namespace reference {

std::vector<ConsensusState> mix_round(std::span<const ConsensusState> states, const CommGraph& g);
std::vector<ConsensusState> maxmin_round(std::span<const ConsensusState> states, const CommGraph& g);
ConsensusResult consensus_epsilon(std::span<const double> y0, const CommGraph& g, const ConsensusConfig& cfg);

} // namespace reference

} // namespace mgsim
