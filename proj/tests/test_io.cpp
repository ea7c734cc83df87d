#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "generators.hpp"
#include "json.hpp"
#include "slr/driver.hpp"
#include "slr/errors.hpp"
#include "slr/gas.hpp"
#include "slr/instance_io.hpp"
#include "slr/model.hpp"

using namespace slr;

namespace {

LipschitzMinlp io_problem() {
  LipschitzMinlp p;
  p.variables.push_back({"x", 0.0, 2.0, false});
  p.variables.push_back({"y", -1.0, 5.0, false});
  p.variables.push_back({"n", 0.0, 3.0, true});
  p.objective = {0.0, 1.0, -0.5};
  p.linear.add_row({1.0, 0.0, 1.0}, 0.5);

  NonlinearityBinding f;
  f.name = "sq";
  f.inputs = {0};
  f.output = 1;
  f.lipschitz = 4.0;
  f.norm.kind = NormSpec::Kind::ScaledMax;
  f.norm.weights = {1.5};
  f.oracle = make_polynomial_oracle({1.0}, {{2}});
  f.big_m_override = 9.5;
  f.center_split_only = true;
  p.bindings.push_back(std::move(f));
  return p;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("problem serialization is a fixpoint") {
  const auto p = io_problem();
  const std::string text = io::problem_to_json(p);
  const auto back = io::problem_from_json(text);

  CHECK(back.nvars() == 3);
  CHECK(back.variables[0].name == "x");
  CHECK(back.variables[2].integral);
  CHECK(back.variables[1].lower == doctest::Approx(-1.0));
  CHECK(back.objective == p.objective);
  REQUIRE(back.linear.nrows() == 1);
  CHECK(back.linear.rows[0] == p.linear.rows[0]);
  CHECK(back.linear.rhs[0] == doctest::Approx(0.5));
  REQUIRE(back.bindings.size() == 1);
  const auto& b = back.bindings[0];
  CHECK(b.name == "sq");
  CHECK(b.inputs == std::vector<int>{0});
  CHECK(b.output == 1);
  CHECK(b.lipschitz == doctest::Approx(4.0));
  CHECK(b.norm.kind == NormSpec::Kind::ScaledMax);
  CHECK(b.norm.weights == std::vector<double>{1.5});
  REQUIRE(b.big_m_override.has_value());
  CHECK(*b.big_m_override == doctest::Approx(9.5));
  CHECK(b.center_split_only);
  CHECK(b.oracle->eval(std::vector<double>{1.5}) == doctest::Approx(2.25));

  CHECK(io::problem_to_json(back) == text);
}

TEST_CASE("problem parsing accepts senses, names and indices") {
  const std::string text = R"({
    "variables": [
      {"name": "a", "lb": 0, "ub": 1},
      {"lb": -2, "ub": 2}
    ],
    "objective": {"a": 3.0},
    "constraints": [
      {"coeffs": {"a": 1.0, "v1": 2.0}, "sense": "leq", "rhs": 4.0},
      {"coeffs": {"a": 1.0}, "sense": "eq", "rhs": 0.25}
    ],
    "nonlinearities": [
      {"inputs": ["a"], "output": 1, "lipschitz": 2.0,
       "oracle": {"registry": "polynomial",
                  "params": {"terms": [{"coeff": 1.0, "powers": [2]}]}}}
    ]
  })";
  const auto p = io::problem_from_json(text);
  CHECK(p.variables[1].name == "v1");
  CHECK(p.objective == std::vector<double>{3.0, 0.0});
  // leq flips sign, eq expands to two rows.
  REQUIRE(p.linear.nrows() == 3);
  CHECK(p.linear.rows[0] == std::vector<double>{-1.0, -2.0});
  CHECK(p.linear.rhs[0] == doctest::Approx(-4.0));
  CHECK(p.linear.rows[1] == std::vector<double>{1.0, 0.0});
  CHECK(p.linear.rows[2] == std::vector<double>{-1.0, 0.0});
  REQUIRE(p.bindings.size() == 1);
  CHECK(p.bindings[0].name == "f0");
  CHECK(p.bindings[0].inputs == std::vector<int>{0});
  CHECK(p.bindings[0].norm.kind == NormSpec::Kind::WeightedOne);
  CHECK(p.bindings[0].norm.weights == std::vector<double>{1.0});
}

TEST_CASE("problem parsing rejects malformed input") {
  CHECK_THROWS_AS(io::problem_from_json("{not json"), ValidationError);
  CHECK_THROWS_AS(io::problem_from_json("{}"), ValidationError);
  CHECK_THROWS_AS(
      io::problem_from_json(R"({"variables": [{"name": "a", "lb": 0}]})"),
      ValidationError);
  CHECK_THROWS_AS(io::problem_from_json(R"({
        "variables": [{"name": "a", "lb": 0, "ub": 1}],
        "objective": {"zz": 1.0}
      })"),
      ValidationError);
  CHECK_THROWS_AS(io::problem_from_json(R"({
        "variables": [{"name": "a", "lb": 0, "ub": 1}],
        "constraints": [{"coeffs": {"a": 1.0}, "sense": "between", "rhs": 0}]
      })"),
      ValidationError);
  CHECK_THROWS_AS(io::problem_from_json(R"({
        "variables": [{"name": "a", "lb": 0, "ub": 1},
                      {"name": "b", "lb": 0, "ub": 1}],
        "nonlinearities": [{"inputs": ["a"], "output": "b", "lipschitz": 1.0}]
      })"),
      ValidationError);
  CHECK_THROWS_AS(io::problem_from_json(R"({
        "variables": [{"name": "a", "lb": 0, "ub": 1},
                      {"name": "b", "lb": 0, "ub": 1}],
        "nonlinearities": [{"inputs": ["a"], "output": "b", "lipschitz": 1.0,
                            "oracle": {"registry": "no-such-family"}}]
      })"),
      ValidationError);
  // Well-formed JSON with params the oracle family cannot digest.
  CHECK_THROWS_AS(io::problem_from_json(R"({
        "variables": [{"name": "a", "lb": 0, "ub": 1},
                      {"name": "b", "lb": 0, "ub": 1}],
        "nonlinearities": [{"inputs": ["a"], "output": "b", "lipschitz": 1.0,
                            "oracle": {"registry": "polynomial",
                                       "params": {"degree": 2}}}]
      })"),
      ValidationError);
  // Structurally valid JSON that fails problem validation.
  CHECK_THROWS_AS(io::problem_from_json(R"({
        "variables": [{"name": "a", "lb": 0, "ub": 1},
                      {"name": "b", "lb": 0, "ub": 1}],
        "nonlinearities": [{"inputs": ["a"], "output": "b", "lipschitz": -1.0,
                            "oracle": {"registry": "polynomial",
                                       "params": {"terms": [{"coeff": 1.0, "powers": [1]}]}}}]
      })"),
      ValidationError);
  // Bad norm kind.
  CHECK_THROWS_AS(io::problem_from_json(R"({
        "variables": [{"name": "a", "lb": 0, "ub": 1},
                      {"name": "b", "lb": 0, "ub": 1}],
        "nonlinearities": [{"inputs": ["a"], "output": "b", "lipschitz": 1.0,
                            "norm": {"kind": "euclid"},
                            "oracle": {"registry": "polynomial",
                                       "params": {"terms": [{"coeff": 1.0, "powers": [1]}]}}}]
      })"),
      ValidationError);
}

TEST_CASE("gas network serialization round-trips") {
  const auto net = testgen::tight_diamond();
  const std::string text = io::gas_network_to_json(net);
  const auto back = io::gas_network_from_json(text);

  REQUIRE(back.nodes.size() == net.nodes.size());
  REQUIRE(back.arcs.size() == net.arcs.size());
  CHECK(back.constants.R_s == doctest::Approx(net.constants.R_s));
  CHECK(back.constants.T == doctest::Approx(net.constants.T));
  CHECK(back.constants.p_crit_bar == doctest::Approx(net.constants.p_crit_bar));
  CHECK(back.constants.T_crit == doctest::Approx(net.constants.T_crit));
  for (std::size_t n = 0; n < net.nodes.size(); ++n) {
    CHECK(back.nodes[n].name == net.nodes[n].name);
    CHECK(back.nodes[n].p_lo_bar == net.nodes[n].p_lo_bar);
    CHECK(back.nodes[n].p_hi_bar == net.nodes[n].p_hi_bar);
    CHECK(back.nodes[n].injection_kg_s == net.nodes[n].injection_kg_s);
  }
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    CHECK(back.arcs[a].name == net.arcs[a].name);
    CHECK(back.arcs[a].kind == net.arcs[a].kind);
    CHECK(back.arcs[a].from == net.arcs[a].from);
    CHECK(back.arcs[a].to == net.arcs[a].to);
    CHECK(back.arcs[a].q_lo_kg_s == net.arcs[a].q_lo_kg_s);
    CHECK(back.arcs[a].q_hi_kg_s == net.arcs[a].q_hi_kg_s);
    CHECK(back.arcs[a].dp_max_bar == net.arcs[a].dp_max_bar);
    if (net.arcs[a].kind == gas::ArcKind::Pipe) {
      CHECK(back.arcs[a].pipe.length_m == net.arcs[a].pipe.length_m);
      CHECK(back.arcs[a].pipe.diameter_m == net.arcs[a].pipe.diameter_m);
      CHECK(back.arcs[a].pipe.friction == net.arcs[a].pipe.friction);
    }
  }

  // The rebuilt network encodes to the same model.
  const auto m1 = gas::build_minlp(net);
  const auto m2 = gas::build_minlp(back);
  CHECK(io::problem_to_json(m1.problem) == io::problem_to_json(m2.problem));
  CHECK(io::gas_network_to_json(back) == text);
}

TEST_CASE("gas network parsing covers every arc kind") {
  const std::string text = R"({
    "nodes": [
      {"name": "u", "p_lo_bar": 40, "p_hi_bar": 60, "injection_kg_s": 5},
      {"name": "v", "p_lo_bar": 40, "p_hi_bar": 60, "injection_kg_s": -5}
    ],
    "arcs": [
      {"name": "cv", "kind": "control-valve", "from": "u", "to": "v",
       "q_lo_kg_s": 0, "q_hi_kg_s": 10, "dp_max_bar": 3},
      {"name": "vv", "kind": "valve", "from": "u", "to": "v",
       "q_lo_kg_s": -10, "q_hi_kg_s": 10}
    ]
  })";
  const auto net = io::gas_network_from_json(text);
  REQUIRE(net.arcs.size() == 2);
  CHECK(net.arcs[0].kind == gas::ArcKind::ControlValve);
  CHECK(net.arcs[0].dp_max_bar == doctest::Approx(3.0));
  CHECK(net.arcs[1].kind == gas::ArcKind::Valve);
  CHECK(net.nodes[0].injection_kg_s == doctest::Approx(5.0));
  const auto again = io::gas_network_from_json(io::gas_network_to_json(net));
  CHECK(again.arcs[0].kind == gas::ArcKind::ControlValve);

  CHECK_THROWS_AS(io::gas_network_from_json("{]"), ValidationError);
  CHECK_THROWS_AS(io::gas_network_from_json("{}"), ValidationError);
  CHECK_THROWS_AS(io::gas_network_from_json(R"({
        "nodes": [{"name": "u", "p_lo_bar": 40, "p_hi_bar": 60}],
        "arcs": [{"name": "a", "kind": "teleport", "from": "u", "to": "u",
                  "q_lo_kg_s": 0, "q_hi_kg_s": 1}]
      })"),
      ValidationError);
  CHECK_THROWS_AS(io::gas_network_from_json(R"({
        "nodes": [{"name": "u", "p_lo_bar": 40, "p_hi_bar": 60}],
        "arcs": [{"name": "a", "kind": "valve", "from": "u", "to": "w",
                  "q_lo_kg_s": 0, "q_hi_kg_s": 1}]
      })"),
      ValidationError);
}

TEST_CASE("run results serialize with named points and stable bytes") {
  LipschitzMinlp p;
  p.variables.push_back({"x", 0.0, 3.0, false});
  p.variables.push_back({"y", -2.0, 2.0, false});
  p.objective = {0.0, 1.0};
  NonlinearityBinding f;
  f.name = "wave";
  f.inputs = {0};
  f.output = 1;
  f.lipschitz = 1.0;
  f.norm.weights = {1.0};
  f.oracle = make_sum_of_sines_oracle({{1.0, {1.0}, 0.0}});
  p.bindings.push_back(std::move(f));

  SolverConfig cfg;
  cfg.epsilon = 0.1;
  cfg.seed = 3;
  const auto r1 = run(p, cfg);
  REQUIRE(r1.status == RunStatus::EpsFeasible);

  const std::string text = io::result_to_json(r1, p);
  const auto j = nlohmann::json::parse(text);
  CHECK(j.at("status") == "eps-feasible");
  CHECK(j.at("iterations").get<long>() == r1.iterations);
  CHECK(j.at("objective").get<double>() == doctest::Approx(r1.objective));
  REQUIRE(j.at("point").contains("x"));
  REQUIRE(j.at("point").contains("y"));
  CHECK(j.at("point").at("y").get<double>() == doctest::Approx(r1.point[1]));
  REQUIRE(j.at("oracle_calls").contains("wave"));
  CHECK(j.at("oracle_calls_total").get<std::uint64_t>() ==
        r1.oracle_calls_total);
  CHECK(j.at("feasibility").at("eps_feasible").get<bool>());
  CHECK(j.at("feasibility").at("max_binding_violation").get<double>() <=
        0.1 + 1e-12);
  REQUIRE(j.at("active_boxes").is_array());
  CHECK(j.at("active_boxes").size() == 1);
  CHECK(j.at("active_boxes")[0].get<long>() >= 1);

  // Identical run, identical bytes.
  const auto r2 = run(p, cfg);
  CHECK(io::result_to_json(r2, p) == text);
}

TEST_CASE("atomic writes replace the target in one step") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "slr_io_test";
  fs::create_directories(dir);
  const fs::path target = dir / "out.json";

  io::write_file_atomic(target.string(), "first");
  CHECK(io::read_file(target.string()) == "first");
  io::write_file_atomic(target.string(), "second version");
  CHECK(io::read_file(target.string()) == "second version");
  CHECK(!fs::exists(target.string() + ".tmp"));

  CHECK_THROWS_AS(io::read_file((dir / "absent.json").string()),
                  ValidationError);
  // Unwritable temp location surfaces as an error, not a partial file.
  CHECK_THROWS_AS(
      io::write_file_atomic((dir / "no_dir" / "x.json").string(), "content"),
      ValidationError);
  fs::remove_all(dir);
}

}
