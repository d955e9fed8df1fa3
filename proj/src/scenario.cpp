#include "mgsim/scenario.hpp"

#include "mgsim/errors.hpp"
#include "mgsim/units.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace mgsim {

namespace detail {
// Defined in the generated presets_data.cpp.
std::string_view preset_text(std::string_view name);
} // namespace detail

using nlohmann::json;

namespace {

void expect_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw ValidationError(fmt::format("{}: expected an object", where));
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ValidationError(fmt::format("{}: unknown field '{}'", where, key));
    }
}

const json& require(const json& obj, std::string_view where, const char* key) {
    if (!obj.contains(key)) throw ValidationError(fmt::format("{}: missing field '{}'", where, key));
    return obj.at(key);
}

double number(const json& v, std::string_view where, std::string_view key) {
    if (!v.is_number()) throw ValidationError(fmt::format("{}.{}: expected a number", where, key));
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(fmt::format("{}.{}: must be finite", where, key));
    return d;
}

double number_or(const json& obj, std::string_view where, const char* key, double fallback) {
    return obj.contains(key) ? number(obj.at(key), where, key) : fallback;
}

std::size_t count_or(const json& obj, std::string_view where, const char* key, std::size_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ValidationError(fmt::format("{}.{}: expected a non-negative integer", where, key));
    return v.get<std::size_t>();
}

// Per-IBR fields may come from ibr_defaults or the IBR entry itself.
struct IbrFields {
    std::optional<double> n_hz_per_kw, m_v_per_kvar, tau_s, r_ohm, x_ohm, a_v, a_q;
    std::optional<std::string> objective;

    void merge(const json& obj, std::string_view where) {
        auto take = [&](const char* key, std::optional<double>& dst) {
            if (obj.contains(key)) dst = number(obj.at(key), where, key);
        };
        take("n_hz_per_kw", n_hz_per_kw);
        take("m_v_per_kvar", m_v_per_kvar);
        take("tau_s", tau_s);
        take("r_ohm", r_ohm);
        take("x_ohm", x_ohm);
        take("a_v", a_v);
        take("a_q", a_q);
        if (obj.contains("objective")) {
            if (!obj.at("objective").is_string())
                throw ValidationError(fmt::format("{}.objective: expected a string", where));
            objective = obj.at("objective").get<std::string>();
        }
    }
};

#define MGSIM_IBR_KEYS "n_hz_per_kw", "m_v_per_kvar", "tau_s", "r_ohm", "x_ohm", "objective", "a_v", "a_q"

template <typename T>
T field_value(const std::optional<T>& v, std::string_view where, std::string_view key) {
    if (!v) throw ValidationError(fmt::format("{}: missing field '{}' (set it per IBR or in ibr_defaults)", where, key));
    return *v;
}

} // namespace

ObjectiveMode Scenario::mode() const {
    const auto obj = objectives();
    return mode_of(obj);
}

std::vector<IbrObjective> Scenario::objectives() const {
    std::vector<IbrObjective> out;
    for (const auto& b : ibrs) out.push_back(b.objective);
    return out;
}

std::vector<DroopParams> Scenario::droop() const {
    std::vector<DroopParams> out;
    for (const auto& b : ibrs) out.push_back(b.droop);
    return out;
}

std::vector<Impedance> Scenario::lines() const {
    std::vector<Impedance> out;
    for (const auto& b : ibrs) out.push_back(b.line);
    return out;
}

std::vector<ObjectiveWeights> Scenario::weights() const {
    std::vector<ObjectiveWeights> out;
    for (const auto& b : ibrs) out.push_back(b.weights);
    return out;
}

ConsensusConfig Scenario::consensus_at(std::size_t tick) const {
    return {ctrl.epsilon_at(tick), reset_period, max_rounds};
}

LoadDemand Scenario::load_at(double t) const {
    LoadDemand d;
    // Events land on the nearest tick.
    for (const auto& e : events) {
        if (e.time <= t + 0.5 * tick) d = e.demand;
        else break;
    }
    return d;
}

std::size_t Scenario::tick_count() const {
    return static_cast<std::size_t>(std::llround(duration / tick)) + 1;
}

void Scenario::validate() const {
    if (ibrs.empty()) throw ValidationError("scenario needs at least one IBR");
    nominal.validate();
    if (!(tick > 0.0)) throw ValidationError("timing.tick_s must be positive");
    if (!(duration >= 0.0)) throw ValidationError("timing.duration_s must be non-negative");
    std::set<int> ids;
    for (const auto& b : ibrs) {
        const auto where = fmt::format("ibr {}", b.id);
        if (!ids.insert(b.id).second) throw ValidationError(fmt::format("duplicate IBR id {}", b.id));
        try {
            b.droop.validate();
            b.line.validate();
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("{}: {}", where, e.what()));
        }
        if (!b.weights.matches(b.objective))
            throw ValidationError(fmt::format("{}: weights do not match objective {}", where, to_string(b.objective)));
    }
    for (std::size_t k = 0; k < events.size(); ++k) {
        events[k].demand.validate();
        if (events[k].time < 0.0) throw ValidationError("load event times must be non-negative");
        if (k > 0 && !(events[k].time > events[k - 1].time))
            throw ValidationError("load event times must be strictly increasing");
    }
    if (!events.empty() && duration < events.back().time)
        throw ValidationError("duration_s must cover the last load event");
    if (secondary_enable_time && *secondary_enable_time < 0.0)
        throw ValidationError("secondary.enable_time_s must be non-negative");
    ctrl.validate();
    if (solver.base_power <= 0.0 || solver.tolerance_pu <= 0.0 || solver.max_iterations < 1)
        throw ValidationError("solver settings must be positive");
    if (graph.size() != ibrs.size()) throw GraphError("communication graph size differs from the IBR count");
    if (!is_strongly_connected(graph)) throw GraphError("communication graph is not strongly connected");
    consensus_at(0).validate(graph);
}

Scenario parse_scenario(const json& cfg) {
    expect_keys(cfg, "config",
                {"name", "notes", "seed", "nominal", "base_power_kva", "timing", "solver", "secondary",
                 "ibr_defaults", "ibrs", "communication", "load_events"});
    Scenario s;
    s.source = cfg;
    s.name = cfg.value("name", std::string{"scenario"});
    if (cfg.contains("seed")) {
        if (!cfg.at("seed").is_number_unsigned()) throw ValidationError("seed: expected a non-negative integer");
        s.seed = cfg.at("seed").get<std::uint64_t>();
    }

    const auto& nom = require(cfg, "config", "nominal");
    expect_keys(nom, "nominal", {"frequency_hz", "voltage_v"});
    s.nominal.omega_star = units::hz_to_rad_s(number(require(nom, "nominal", "frequency_hz"), "nominal", "frequency_hz"));
    s.nominal.v_star = number(require(nom, "nominal", "voltage_v"), "nominal", "voltage_v");
    s.solver.base_power = units::kva_to_va(number_or(cfg, "config", "base_power_kva", 200.0));

    const auto& timing = require(cfg, "config", "timing");
    expect_keys(timing, "timing", {"tick_s", "duration_s"});
    s.tick = number_or(timing, "timing", "tick_s", 0.05);
    s.duration = number(require(timing, "timing", "duration_s"), "timing", "duration_s");

    if (cfg.contains("solver")) {
        const auto& sv = cfg.at("solver");
        expect_keys(sv, "solver", {"tolerance_pu", "max_iterations"});
        s.solver.tolerance_pu = number_or(sv, "solver", "tolerance_pu", s.solver.tolerance_pu);
        s.solver.max_iterations = static_cast<int>(count_or(sv, "solver", "max_iterations", 200));
    }

    double share_a_v = 0.25, share_a_q = 1.0;
    double gamma = 0.01;
    std::optional<double> rho;
    double eps = 1e-4;
    if (cfg.contains("secondary")) {
        const auto& sec = cfg.at("secondary");
        expect_keys(sec, "secondary",
                    {"enable_time_s", "gamma", "rho", "epsilon_target_v", "reset_period", "max_rounds", "share_q"});
        if (sec.contains("enable_time_s") && !sec.at("enable_time_s").is_null())
            s.secondary_enable_time = number(sec.at("enable_time_s"), "secondary", "enable_time_s");
        gamma = number_or(sec, "secondary", "gamma", gamma);
        if (sec.contains("rho") && !sec.at("rho").is_null()) rho = number(sec.at("rho"), "secondary", "rho");
        eps = number_or(sec, "secondary", "epsilon_target_v", eps);
        s.reset_period = count_or(sec, "secondary", "reset_period", s.reset_period);
        s.max_rounds = count_or(sec, "secondary", "max_rounds", s.max_rounds);
        if (sec.contains("share_q")) {
            const auto& sq = sec.at("share_q");
            expect_keys(sq, "secondary.share_q", {"a_v", "a_q"});
            share_a_v = number_or(sq, "secondary.share_q", "a_v", share_a_v);
            share_a_q = number_or(sq, "secondary.share_q", "a_q", share_a_q);
        }
    }
    s.ctrl = rho ? CtrlParams{*rho, gamma, eps} : CtrlParams::with_default_rho(gamma, eps);

    IbrFields defaults;
    if (cfg.contains("ibr_defaults")) {
        expect_keys(cfg.at("ibr_defaults"), "ibr_defaults", {MGSIM_IBR_KEYS});
        defaults.merge(cfg.at("ibr_defaults"), "ibr_defaults");
        if (defaults.a_v || defaults.a_q)
            throw ValidationError("ibr_defaults: a_v/a_q belong in secondary.share_q or on individual IBRs");
    }

    const auto& ibrs = require(cfg, "config", "ibrs");
    if (!ibrs.is_array() || ibrs.empty()) throw ValidationError("ibrs: expected a non-empty array");
    std::map<int, std::size_t> index_of;
    for (std::size_t k = 0; k < ibrs.size(); ++k) {
        const auto& e = ibrs[k];
        const auto where = fmt::format("ibrs[{}]", k);
        expect_keys(e, where, {"id", MGSIM_IBR_KEYS});
        if (!e.contains("id") || !e.at("id").is_number_integer() || e.at("id").get<long long>() < 1)
            throw ValidationError(fmt::format("{}: 'id' must be a positive integer", where));
        IbrFields f = defaults;
        f.merge(e, where);

        IbrConfig b;
        b.id = e.at("id").get<int>();
        if (!index_of.emplace(b.id, k).second) throw ValidationError(fmt::format("duplicate IBR id {}", b.id));
        b.droop.n = units::hz_per_kw_to_rad_s_per_w(field_value(f.n_hz_per_kw, where, "n_hz_per_kw"));
        b.droop.m = units::v_per_kvar_to_v_per_var(field_value(f.m_v_per_kvar, where, "m_v_per_kvar"));
        b.droop.tau_s = f.tau_s.value_or(0.1);
        b.line.resistance = f.r_ohm.value_or(0.0);
        b.line.reactance = field_value(f.x_ohm, where, "x_ohm");
        b.objective = parse_objective(f.objective.value_or("share_q"));
        if (b.objective == IbrObjective::share_q) {
            b.weights = ObjectiveWeights::share_q(f.a_v.value_or(share_a_v), f.a_q.value_or(share_a_q));
        } else {
            if (f.a_v.value_or(0.0) != 0.0 || f.a_q.value_or(0.0) != 0.0)
                throw ValidationError(fmt::format("{}: regulate_v requires a_v = a_q = 0", where));
            b.weights = ObjectiveWeights::regulate_v();
        }
        s.ibrs.push_back(b);
    }

    const auto& comm = require(cfg, "config", "communication");
    expect_keys(comm, "communication", {"links"});
    const auto& links = require(comm, "communication", "links");
    if (!links.is_array()) throw ValidationError("communication.links: expected an array");
    std::vector<Link> lk;
    for (std::size_t k = 0; k < links.size(); ++k) {
        const auto& l = links[k];
        const auto where = fmt::format("communication.links[{}]", k);
        expect_keys(l, where, {"from", "to"});
        auto resolve = [&](const char* key) {
            const auto& v = require(l, where, key);
            if (!v.is_number_integer()) throw ValidationError(fmt::format("{}.{}: expected an IBR id", where, key));
            const auto it = index_of.find(v.get<int>());
            if (it == index_of.end())
                throw ValidationError(fmt::format("{}.{}: unknown IBR id {}", where, key, v.get<int>()));
            return it->second;
        };
        lk.push_back({resolve("from"), resolve("to")});
    }
    s.graph = CommGraph::from_links(s.ibrs.size(), lk);

    if (cfg.contains("load_events")) {
        const auto& ev = cfg.at("load_events");
        if (!ev.is_array()) throw ValidationError("load_events: expected an array");
        for (std::size_t k = 0; k < ev.size(); ++k) {
            const auto where = fmt::format("load_events[{}]", k);
            expect_keys(ev[k], where, {"time_s", "p_kw", "q_kvar"});
            LoadEvent e;
            e.time = number(require(ev[k], where, "time_s"), where, "time_s");
            e.demand.active = units::kw_to_w(number_or(ev[k], where, "p_kw", 0.0));
            e.demand.reactive = units::kvar_to_var(number_or(ev[k], where, "q_kvar", 0.0));
            s.events.push_back(e);
        }
    }

    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError(fmt::format("cannot open scenario file '{}'", path.string()));
    json cfg;
    try {
        cfg = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ValidationError(fmt::format("{}: parse error: {}", path.string(), e.what()));
    }
    return parse_scenario(cfg);
}

std::vector<std::string> preset_names() {
    return {"case1", "case2", "case3"};
}

std::string_view preset_source(std::string_view name) {
    const auto text = detail::preset_text(name);
    if (text.empty()) throw ValidationError(fmt::format("unknown preset '{}' (expected case1, case2 or case3)", name));
    return text;
}

Scenario preset_scenario(std::string_view name) {
    return parse_scenario(json::parse(preset_source(name)));
}

} // namespace mgsim
