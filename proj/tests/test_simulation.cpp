#include "mgsim/errors.hpp"
#include "mgsim/simulation.hpp"
#include "mgsim/units.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mgsim;
using nlohmann::json;

namespace {

json two_ibr_config() {
    return json::parse(R"({
        "name": "pair",
        "nominal": {"frequency_hz": 60.0, "voltage_v": 240.0},
        "timing": {"tick_s": 0.05, "duration_s": 1.0},
        "secondary": {"enable_time_s": 0.2},
        "ibr_defaults": {"n_hz_per_kw": 0.003, "m_v_per_kvar": 0.0025, "tau_s": 0.1, "r_ohm": 0.0},
        "ibrs": [{"id": 1, "x_ohm": 0.003}, {"id": 2, "x_ohm": 0.006}],
        "communication": {"links": [{"from": 1, "to": 2}, {"from": 2, "to": 1}]},
        "load_events": []
    })");
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::vector<std::string> body_lines(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string line;
    while (std::getline(ss, line))
        if (!line.empty() && line[0] != '#') out.push_back(line);
    return out;
}

} // namespace

TEST_CASE("no load keeps every IBR at nominal") {
    const auto sc = parse_scenario(two_ibr_config());
    const auto log = run(sc);
    REQUIRE(log.rows.size() == sc.tick_count());
    for (const auto& row : log.rows) {
        CHECK(row.pcc_v == doctest::Approx(240.0).epsilon(1e-12));
        for (const auto& s : row.ibr) {
            CHECK(s.v == doctest::Approx(240.0).epsilon(1e-12));
            CHECK(std::abs(s.q) < 1e-6);
            CHECK(std::abs(s.p) < 1e-6);
            CHECK(s.omega == doctest::Approx(sc.nominal.omega_star).epsilon(1e-12));
            CHECK(std::abs(s.v_adj) < 1e-9);
        }
    }
}

TEST_CASE("secondary activates at the configured time") {
    auto cfg = two_ibr_config();
    cfg["load_events"] = json::parse(R"([{"time_s": 0.0, "p_kw": 100.0, "q_kvar": 50.0}])");
    const auto log = run(parse_scenario(cfg));
    for (const auto& row : log.rows) {
        CHECK(row.secondary_active == (row.t >= 0.2 - 1e-9));
        if (!row.secondary_active) CHECK(row.consensus_rounds == 0);
        else CHECK(row.consensus_rounds > 0);
    }
}

TEST_CASE("active power follows the inverse droop gains") {
    auto cfg = two_ibr_config();
    cfg["ibrs"][1]["n_hz_per_kw"] = 0.006;
    cfg["load_events"] = json::parse(R"([{"time_s": 0.0, "p_kw": 90.0, "q_kvar": 30.0}])");
    const auto sc = parse_scenario(cfg);
    const auto log = run(sc);
    const auto& last = log.rows.back();
    CHECK(last.plant.p_inst[0] == doctest::Approx(60e3).epsilon(1e-9));
    CHECK(last.plant.p_inst[1] == doctest::Approx(30e3).epsilon(1e-9));
    const std::vector<double> ns{sc.ibrs[0].droop.n, sc.ibrs[1].droop.n};
    for (const auto& s : last.ibr)
        CHECK(s.omega == doctest::Approx(steady_state_frequency(ns, sc.nominal, 90e3)).epsilon(1e-12));
}

TEST_CASE("each tick's plant state balances power") {
    auto cfg = two_ibr_config();
    cfg["load_events"] = json::parse(R"([{"time_s": 0.0, "p_kw": 150.0, "q_kvar": 120.0},
                                         {"time_s": 0.5, "p_kw": 250.0, "q_kvar": 60.0}])");
    const auto sc = parse_scenario(cfg);
    const auto log = run(sc);
    const auto lines = sc.lines();
    for (const auto& row : log.rows) {
        CHECK(oracle::power_balance_residual(row.plant.sources, lines, row.plant.pcc, row.load) <=
              1e-9 * sc.solver.base_power);
        CHECK(std::abs(row.plant.pcc.angle) < 1e-12);
    }
}

TEST_CASE("CSV layout") {
    auto cfg = two_ibr_config();
    cfg["ibrs"] = json::parse(R"([{"id": 7, "x_ohm": 0.004}])");
    cfg["communication"]["links"] = json::array();
    cfg["timing"]["duration_s"] = 0.0;
    const auto sc = parse_scenario(cfg);
    const auto log = run(sc);
    REQUIRE(log.rows.size() == 1);
    const auto text = format_csv(log, sc);
    CHECK(text.rfind("# scenario: pair\n", 0) == 0);
    const auto lines = body_lines(text);
    REQUIRE(lines.size() == 2);
    CHECK(split(lines[0], ',') == csv_columns());
    const auto fields = split(lines[1], ',');
    REQUIRE(fields.size() == csv_columns().size());
    CHECK(fields[0] == "0");
    CHECK(fields[1] == "7");
    CHECK(fields.back() == "share_q");
    CHECK(std::stod(fields[4]) == 240.0);
}

TEST_CASE("CSV output is deterministic across runs and thread counts") {
    const auto sc = preset_scenario("case3");
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto a = format_csv(run(sc), sc);
    omp_set_num_threads(4);
    const auto b = format_csv(run(sc), sc);
    omp_set_num_threads(saved);
    CHECK(a == b);
    const auto lines = body_lines(a);
    REQUIRE(lines.size() == 1 + 10 * sc.tick_count());
    for (std::size_t k = 1; k <= 10; ++k) {
        const auto fields = split(lines[k], ',');
        CHECK(fields.back() == (k <= 7 ? "share_q" : "regulate_v"));
    }
}

TEST_CASE("emit_csv") {
    const auto sc = parse_scenario(two_ibr_config());
    const auto log = run(sc);
    const auto path = std::filesystem::temp_directory_path() / "mgsim_emit.csv";
    emit_csv(log, sc, path);
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == format_csv(log, sc));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(emit_csv(log, sc, "/nonexistent/dir/out.csv"), IoError);
    CHECK_THROWS_AS(emit_csv(TimeSeriesLog{}, sc, path), ValidationError);
}

TEST_CASE("primary droop alone mis-shares reactive power") {
    auto sc = preset_scenario("case1");
    sc.secondary_enable_time.reset();
    sc.duration = 12.0;
    sc.events.resize(1);
    const auto log = run(sc);
    const auto& last = log.rows.back();
    std::vector<double> mq;
    for (std::size_t i = 0; i < last.ibr.size(); ++i) mq.push_back(sc.ibrs[i].droop.m * last.ibr[i].q);
    CHECK(oracle::spread(mq) / std::abs(oracle::mean(mq)) > 0.05);
    for (const auto& s : last.ibr) CHECK(s.v_adj == 0.0);
}

TEST_CASE("plant failure keeps the ticks already completed") {
    auto cfg = two_ibr_config();
    cfg["load_events"] = json::parse(R"([{"time_s": 0.0, "p_kw": 50.0, "q_kvar": 20.0},
                                         {"time_s": 0.5, "p_kw": 1.0e6, "q_kvar": 1.0e6}])");
    Simulation sim(parse_scenario(cfg));
    bool plant_error = false;
    try {
        sim.run();
    } catch (const PlantConvergenceError&) {
        plant_error = true;
    } catch (const PlantCollapseError&) {
        plant_error = true;
    }
    CHECK(plant_error);
    CHECK(sim.log().rows.size() == 10);
    CHECK(sim.tick() == 10);
}

TEST_CASE("no load with secondary off stays at nominal") {
    auto cfg = two_ibr_config();
    cfg["secondary"]["enable_time_s"] = nullptr;
    const auto sc = parse_scenario(cfg);
    for (const auto& row : run(sc).rows) {
        CHECK_FALSE(row.secondary_active);
        for (const auto& s : row.ibr) {
            CHECK(s.v == 240.0);
            CHECK(std::abs(s.q) < 1e-6);
            CHECK(s.omega == doctest::Approx(sc.nominal.omega_star).epsilon(1e-12));
        }
    }
}

TEST_CASE("load changes only at event ticks") {
    auto cfg = two_ibr_config();
    cfg["load_events"] = json::parse(R"([{"time_s": 0.0, "p_kw": 40.0, "q_kvar": 10.0},
                                         {"time_s": 0.3, "p_kw": 80.0, "q_kvar": 30.0}])");
    const auto log = run(parse_scenario(cfg));
    for (const auto& row : log.rows) CHECK(row.load.active == (row.t < 0.3 - 1e-9 ? 40e3 : 80e3));
    for (std::size_t k = 1; k < log.rows.size(); ++k) CHECK(log.rows[k].t > log.rows[k - 1].t);
}

TEST_CASE("case1 settles near equal shares before the load step") {
    const auto sc = preset_scenario("case1");
    const auto log = run(sc);
    for (const auto& row : log.rows) {
        if (row.t < 11.5 || row.t >= 13.5) continue;
        for (const auto& s : row.ibr) CHECK(std::abs(s.q - 75e3) <= 0.05 * 75e3);
    }
}

TEST_CASE("case2 regulates voltage while reactive power stays unequal") {
    const auto sc = preset_scenario("case2");
    const auto log = run(sc);
    for (const auto& row : log.rows) {
        if (row.t < 30.0 || row.t >= 34.0) continue;
        double lo = 1e300, hi = -1e300;
        for (const auto& s : row.ibr) {
            CHECK(std::abs(s.v - sc.nominal.v_star) <= 0.5);
            lo = std::min(lo, s.q);
            hi = std::max(hi, s.q);
        }
        CHECK(hi - lo > 1e3);
    }
}

TEST_CASE("secondary modes leave active power sharing untouched") {
    auto base = preset_scenario("case3");
    auto off = base;
    off.secondary_enable_time.reset();
    const auto a = run(base);
    const auto b = run(off);
    const auto& ra = a.rows.back();
    const auto& rb = b.rows.back();
    for (std::size_t i = 0; i < ra.ibr.size(); ++i) {
        CHECK(ra.plant.p_inst[i] == doctest::Approx(rb.plant.p_inst[i]).epsilon(1e-9));
        CHECK(ra.ibr[i].omega == doctest::Approx(rb.ibr[i].omega).epsilon(1e-12));
    }
}
