#include "mgsim/ratio_consensus.hpp"

#include "mgsim/errors.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>

namespace mgsim {

namespace {

void check_sizes(std::span<const ConsensusState> states, const CommGraph& g) {
    if (states.size() != g.size())
        throw GraphError(fmt::format("{} consensus states for a {}-node graph", states.size(), g.size()));
}

double keep_fraction(const CommGraph& g, std::size_t i) {
    return 1.0 / static_cast<double>(g.out_degree(i) + 1);
}

using RoundFn = std::vector<ConsensusState> (*)(std::span<const ConsensusState>, const CommGraph&);

ConsensusResult run_protocol(std::span<const double> y0, const CommGraph& g, const ConsensusConfig& cfg,
                             RoundFn mix, RoundFn maxmin) {
    cfg.validate(g);
    if (y0.size() != g.size())
        throw GraphError(fmt::format("{} initial values for a {}-node graph", y0.size(), g.size()));

    auto states = consensus_init(y0);
    ConsensusResult out;
    while (out.rounds < cfg.max_rounds) {
        states = mix(states, g);
        states = maxmin(states, g);
        ++out.rounds;
        auto det = detect_and_reset(states, cfg);
        states = std::move(det.states);
        if (det.halt[0] || states[0].rounds_since_reset == 0) ++out.cycles;
        if (det.all_halted) {
            out.values.reserve(states.size());
            for (const auto& s : states) out.values.push_back(s.r);
            return out;
        }
    }
    throw ConsensusError(fmt::format("consensus did not terminate within {} rounds (epsilon {:.3g})",
                                     cfg.max_rounds, cfg.epsilon));
}

} // namespace

void ConsensusConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
        throw ValidationError("consensus epsilon must be finite and non-negative");
    if (reset_period == 0) throw ValidationError("consensus reset period must be at least 1");
    if (max_rounds == 0) throw ValidationError("consensus max_rounds must be at least 1");
}

void ConsensusConfig::validate(const CommGraph& g) const {
    validate();
    if (!is_strongly_connected(g)) throw GraphError("consensus requires a strongly connected graph");
    const std::size_t d = diameter(g);
    if (reset_period < d)
        throw ValidationError(fmt::format("reset period {} is below the graph diameter {}", reset_period, d));
}

std::vector<ConsensusState> consensus_init(std::span<const double> y0) {
    std::vector<ConsensusState> s(y0.size());
    for (std::size_t i = 0; i < y0.size(); ++i) s[i] = {y0[i], 1.0, y0[i], y0[i], y0[i], 0};
    return s;
}

std::vector<ConsensusState> mix_round(std::span<const ConsensusState> states, const CommGraph& g) {
    check_sizes(states, g);
    const auto n = static_cast<std::ptrdiff_t>(g.size());
    std::vector<ConsensusState> next(states.begin(), states.end());
    int bad = 0;

#pragma omp parallel for schedule(static) reduction(+ : bad) if (g.size() >= kParallelMinNodes)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double keep = keep_fraction(g, i);
        double y = states[i].y * keep;
        double z = states[i].z * keep;
        for (std::size_t jn : g.in_neighbors(i)) {
            const double w = keep_fraction(g, jn);
            y += states[jn].y * w;
            z += states[jn].z * w;
        }
        next[i].y = y;
        next[i].z = z;
        if (z > 0.0)
            next[i].r = y / z;
        else
            ++bad;
    }
    if (bad > 0) throw ProtocolError("ratio consensus denominator became non-positive");
    return next;
}

std::vector<ConsensusState> maxmin_round(std::span<const ConsensusState> states, const CommGraph& g) {
    check_sizes(states, g);
    const auto n = static_cast<std::ptrdiff_t>(g.size());
    std::vector<ConsensusState> next(states.begin(), states.end());

#pragma omp parallel for schedule(static) if (g.size() >= kParallelMinNodes)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double hi = states[i].max_est;
        double lo = states[i].min_est;
        for (std::size_t jn : g.in_neighbors(i)) {
            hi = std::max(hi, states[jn].max_est);
            lo = std::min(lo, states[jn].min_est);
        }
        next[i].max_est = hi;
        next[i].min_est = lo;
    }
    return next;
}

DetectResult detect_and_reset(std::span<const ConsensusState> states, const ConsensusConfig& cfg) {
    DetectResult out;
    out.states.assign(states.begin(), states.end());
    out.halt.assign(states.size(), 0);
    bool all = !states.empty();
    for (std::size_t i = 0; i < states.size(); ++i) {
        auto& s = out.states[i];
        ++s.rounds_since_reset;
        if (s.rounds_since_reset < cfg.reset_period) {
            all = false;
            continue;
        }
        if (std::abs(s.max_est - s.min_est) <= cfg.epsilon) {
            out.halt[i] = 1;
        } else {
            all = false;
        }
    }
    // Envelopes are re-seeded unless the whole network halts in this cycle.
    if (!all) {
        for (auto& s : out.states) {
            if (s.rounds_since_reset >= cfg.reset_period) {
                s.max_est = s.r;
                s.min_est = s.r;
                s.rounds_since_reset = 0;
            }
        }
    }
    out.all_halted = all;
    return out;
}

ConsensusResult consensus_epsilon(std::span<const double> y0, const CommGraph& g, const ConsensusConfig& cfg) {
    return run_protocol(y0, g, cfg, &mix_round, &maxmin_round);
}

namespace reference {

std::vector<ConsensusState> mix_round(std::span<const ConsensusState> states, const CommGraph& g) {
    check_sizes(states, g);
    std::vector<RoundMessage> outgoing(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double w = keep_fraction(g, j);
        outgoing[j] = {j, states[j].y * w, states[j].z * w};
    }
    const auto inboxes = broadcast_round(g, outgoing);

    std::vector<ConsensusState> next(states.begin(), states.end());
    for (std::size_t i = 0; i < g.size(); ++i) {
        double y = outgoing[i].y_hat;
        double z = outgoing[i].z_hat;
        for (const auto& msg : inboxes[i]) {
            y += msg.y_hat;
            z += msg.z_hat;
        }
        if (!(z > 0.0)) throw ProtocolError("ratio consensus denominator became non-positive");
        next[i].y = y;
        next[i].z = z;
        next[i].r = y / z;
    }
    return next;
}

std::vector<ConsensusState> maxmin_round(std::span<const ConsensusState> states, const CommGraph& g) {
    check_sizes(states, g);
    std::vector<ConsensusState> next(states.begin(), states.end());
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t jn : g.in_neighbors(i)) {
            next[i].max_est = std::max(next[i].max_est, states[jn].max_est);
            next[i].min_est = std::min(next[i].min_est, states[jn].min_est);
        }
    }
    return next;
}

ConsensusResult consensus_epsilon(std::span<const double> y0, const CommGraph& g, const ConsensusConfig& cfg) {
    return run_protocol(y0, g, cfg, &reference::mix_round, &reference::maxmin_round);
}

} // namespace reference

} // namespace mgsim
