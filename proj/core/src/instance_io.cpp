#include "slr/instance_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "slr/errors.hpp"

namespace slr::io {

namespace {

using ordered_json = nlohmann::ordered_json;

NormSpec norm_from_json(const nlohmann::json& j, std::size_t dim) {
  NormSpec norm;
  norm.weights.assign(dim, 1.0);
  if (j.is_null()) return norm;
  const std::string kind = j.value("kind", "weighted-one");
  if (kind == "weighted-one") {
    norm.kind = NormSpec::Kind::WeightedOne;
  } else if (kind == "scaled-max") {
    norm.kind = NormSpec::Kind::ScaledMax;
  } else {
    throw ValidationError("norm kind must be weighted-one or scaled-max");
  }
  if (j.contains("weights")) {
    norm.weights = j.at("weights").get<std::vector<double>>();
  }
  return norm;
}

ordered_json norm_to_json(const NormSpec& norm) {
  ordered_json j;
  j["kind"] = norm.kind == NormSpec::Kind::WeightedOne ? "weighted-one"
                                                       : "scaled-max";
  j["weights"] = norm.weights;
  return j;
}

LipschitzMinlp problem_from_parsed(const nlohmann::json& j);

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw ValidationError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw ValidationError("cannot replace " + path);
  }
}

LipschitzMinlp problem_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("problem JSON malformed: ") + e.what());
  }
  try {
    return problem_from_parsed(j);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("problem JSON invalid: ") + e.what());
  }
}

namespace {

LipschitzMinlp problem_from_parsed(const nlohmann::json& j) {
  LipschitzMinlp problem;
  if (!j.contains("variables") || !j.at("variables").is_array()) {
    throw ValidationError("problem JSON needs a variables array");
  }
  for (const auto& vj : j.at("variables")) {
    VariableSpec var;
    var.name = vj.value("name", "v" + std::to_string(problem.variables.size()));
    if (!vj.contains("lb") || !vj.contains("ub")) {
      throw ValidationError("variable " + var.name + ": lb/ub required");
    }
    var.lower = vj.at("lb").get<double>();
    var.upper = vj.at("ub").get<double>();
    var.integral = vj.value("integer", false);
    problem.variables.push_back(std::move(var));
  }
  const std::size_t nvars = problem.variables.size();

  // Coefficient maps are keyed by variable name.
  auto column_of = [&](const std::string& name, const char* where) {
    const int col = problem.find_variable(name);
    if (col < 0) {
      throw ValidationError(std::string(where) + ": unknown variable '" +
                            name + "'");
    }
    return col;
  };
  auto dense_from_map = [&](const nlohmann::json& map, const char* where) {
    std::vector<double> coeffs(nvars, 0.0);
    for (const auto& [name, value] : map.items()) {
      coeffs[column_of(name, where)] = value.get<double>();
    }
    return coeffs;
  };

  problem.objective.assign(nvars, 0.0);
  if (j.contains("objective")) {
    problem.objective = dense_from_map(j.at("objective"), "objective");
  }

  if (j.contains("constraints")) {
    for (const auto& cj : j.at("constraints")) {
      auto coeffs = dense_from_map(cj.at("coeffs"), "constraint");
      const double rhs = cj.at("rhs").get<double>();
      const std::string sense = cj.value("sense", "geq");
      if (sense == "geq") {
        problem.linear.add_row(std::move(coeffs), rhs);
      } else if (sense == "leq") {
        for (auto& c : coeffs) c = -c;
        problem.linear.add_row(std::move(coeffs), -rhs);
      } else if (sense == "eq") {
        problem.linear.add_equality(coeffs, rhs);
      } else {
        throw ValidationError("constraint sense must be geq, leq or eq");
      }
    }
  }

  // Nonlinearity inputs/outputs may be variable names or column indices.
  auto as_column = [&](const nlohmann::json& ref, const char* where) {
    if (ref.is_string()) return column_of(ref.get<std::string>(), where);
    return ref.get<int>();
  };
  if (j.contains("nonlinearities")) {
    for (const auto& bj : j.at("nonlinearities")) {
      NonlinearityBinding binding;
      binding.name =
          bj.value("name", "f" + std::to_string(problem.bindings.size()));
      for (const auto& ref : bj.at("inputs")) {
        binding.inputs.push_back(as_column(ref, "nonlinearity inputs"));
      }
      binding.output = as_column(bj.at("output"), "nonlinearity output");
      binding.lipschitz = bj.at("lipschitz").get<double>();
      binding.norm = norm_from_json(bj.contains("norm") ? bj.at("norm")
                                                        : nlohmann::json(),
                                    binding.inputs.size());
      if (!bj.contains("oracle")) {
        throw ValidationError("nonlinearity " + binding.name +
                              ": oracle required");
      }
      const auto& oj = bj.at("oracle");
      const std::string registry_name = oj.at("registry").get<std::string>();
      const std::string params =
          oj.contains("params") ? oj.at("params").dump() : "{}";
      auto& registry = OracleRegistry::global();
      if (!registry.contains(registry_name)) {
        throw ValidationError("nonlinearity " + binding.name +
                              ": unknown oracle '" + registry_name + "'");
      }
      binding.oracle = registry.create(registry_name, params);
      if (bj.contains("big_m")) {
        binding.big_m_override = bj.at("big_m").get<double>();
      }
      binding.center_split_only = bj.value("center_split_only", false);
      problem.bindings.push_back(std::move(binding));
    }
  }

  require_valid(problem);
  return problem;
}

}  // namespace

std::string problem_to_json(const LipschitzMinlp& problem) {
  ordered_json j;
  j["variables"] = ordered_json::array();
  for (const auto& var : problem.variables) {
    ordered_json vj;
    vj["name"] = var.name;
    vj["lb"] = var.lower;
    vj["ub"] = var.upper;
    if (var.integral) vj["integer"] = true;
    j["variables"].push_back(std::move(vj));
  }
  ordered_json obj = ordered_json::object();
  for (std::size_t v = 0; v < problem.objective.size(); ++v) {
    if (problem.objective[v] != 0.0) {
      obj[problem.variables[v].name] = problem.objective[v];
    }
  }
  j["objective"] = std::move(obj);
  j["constraints"] = ordered_json::array();
  for (std::size_t r = 0; r < problem.linear.rows.size(); ++r) {
    ordered_json cj;
    ordered_json coeffs = ordered_json::object();
    for (std::size_t v = 0; v < problem.linear.rows[r].size(); ++v) {
      if (problem.linear.rows[r][v] != 0.0) {
        coeffs[problem.variables[v].name] = problem.linear.rows[r][v];
      }
    }
    cj["coeffs"] = std::move(coeffs);
    cj["sense"] = "geq";
    cj["rhs"] = problem.linear.rhs[r];
    j["constraints"].push_back(std::move(cj));
  }
  j["nonlinearities"] = ordered_json::array();
  for (const auto& binding : problem.bindings) {
    ordered_json bj;
    bj["name"] = binding.name;
    ordered_json inputs = ordered_json::array();
    for (int col : binding.inputs) inputs.push_back(problem.variables[col].name);
    bj["inputs"] = std::move(inputs);
    bj["output"] = problem.variables[binding.output].name;
    bj["lipschitz"] = binding.lipschitz;
    bj["norm"] = norm_to_json(binding.norm);
    ordered_json oj;
    oj["registry"] = binding.oracle ? binding.oracle->registry_name() : "";
    oj["params"] = binding.oracle
                       ? nlohmann::json::parse(binding.oracle->params_json())
                       : nlohmann::json::object();
    bj["oracle"] = std::move(oj);
    if (binding.big_m_override) bj["big_m"] = *binding.big_m_override;
    if (binding.center_split_only) bj["center_split_only"] = true;
    j["nonlinearities"].push_back(std::move(bj));
  }
  return j.dump(2);
}

namespace {

gas::GasNetwork gas_network_from_parsed(const nlohmann::json& j) {
  gas::GasNetwork network;
  if (j.contains("constants")) {
    const auto& cj = j.at("constants");
    network.constants.R_s = cj.value("R_s", network.constants.R_s);
    network.constants.T = cj.value("T", network.constants.T);
    network.constants.p_crit_bar =
        cj.value("p_crit_bar", network.constants.p_crit_bar);
    network.constants.T_crit = cj.value("T_crit", network.constants.T_crit);
  }
  if (!j.contains("nodes") || !j.at("nodes").is_array()) {
    throw ValidationError("network JSON needs a nodes array");
  }
  for (const auto& nj : j.at("nodes")) {
    gas::GasNode node;
    node.name = nj.at("name").get<std::string>();
    node.p_lo_bar = nj.at("p_lo_bar").get<double>();
    node.p_hi_bar = nj.at("p_hi_bar").get<double>();
    node.injection_kg_s = nj.value("injection_kg_s", 0.0);
    network.nodes.push_back(std::move(node));
  }
  if (j.contains("arcs")) {
    for (const auto& aj : j.at("arcs")) {
      gas::GasArc arc;
      arc.name = aj.at("name").get<std::string>();
      const std::string kind = aj.at("kind").get<std::string>();
      if (kind == "pipe") {
        arc.kind = gas::ArcKind::Pipe;
      } else if (kind == "short-pipe") {
        arc.kind = gas::ArcKind::ShortPipe;
      } else if (kind == "valve") {
        arc.kind = gas::ArcKind::Valve;
      } else if (kind == "compressor") {
        arc.kind = gas::ArcKind::Compressor;
      } else if (kind == "control-valve") {
        arc.kind = gas::ArcKind::ControlValve;
      } else {
        throw ValidationError("arc " + arc.name + ": unknown kind '" + kind +
                              "'");
      }
      arc.from = network.find_node(aj.at("from").get<std::string>());
      arc.to = network.find_node(aj.at("to").get<std::string>());
      if (arc.from < 0 || arc.to < 0) {
        throw ValidationError("arc " + arc.name + ": unknown endpoint");
      }
      arc.q_lo_kg_s = aj.at("q_lo_kg_s").get<double>();
      arc.q_hi_kg_s = aj.at("q_hi_kg_s").get<double>();
      if (arc.kind == gas::ArcKind::Pipe) {
        arc.pipe.length_m = aj.at("length_m").get<double>();
        arc.pipe.diameter_m = aj.at("diameter_m").get<double>();
        arc.pipe.friction = aj.at("friction").get<double>();
      }
      arc.dp_max_bar = aj.value("dp_max_bar", 0.0);
      network.arcs.push_back(std::move(arc));
    }
  }
  return network;
}

}  // namespace

gas::GasNetwork gas_network_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("network JSON malformed: ") + e.what());
  }
  try {
    return gas_network_from_parsed(j);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("network JSON invalid: ") + e.what());
  }
}

std::string gas_network_to_json(const gas::GasNetwork& network) {
  ordered_json j;
  j["constants"] = {{"R_s", network.constants.R_s},
                    {"T", network.constants.T},
                    {"p_crit_bar", network.constants.p_crit_bar},
                    {"T_crit", network.constants.T_crit}};
  j["nodes"] = ordered_json::array();
  for (const auto& node : network.nodes) {
    ordered_json nj;
    nj["name"] = node.name;
    nj["p_lo_bar"] = node.p_lo_bar;
    nj["p_hi_bar"] = node.p_hi_bar;
    nj["injection_kg_s"] = node.injection_kg_s;
    j["nodes"].push_back(std::move(nj));
  }
  j["arcs"] = ordered_json::array();
  for (const auto& arc : network.arcs) {
    ordered_json aj;
    aj["name"] = arc.name;
    switch (arc.kind) {
      case gas::ArcKind::Pipe: aj["kind"] = "pipe"; break;
      case gas::ArcKind::ShortPipe: aj["kind"] = "short-pipe"; break;
      case gas::ArcKind::Valve: aj["kind"] = "valve"; break;
      case gas::ArcKind::Compressor: aj["kind"] = "compressor"; break;
      case gas::ArcKind::ControlValve: aj["kind"] = "control-valve"; break;
    }
    aj["from"] = network.nodes[arc.from].name;
    aj["to"] = network.nodes[arc.to].name;
    aj["q_lo_kg_s"] = arc.q_lo_kg_s;
    aj["q_hi_kg_s"] = arc.q_hi_kg_s;
    if (arc.kind == gas::ArcKind::Pipe) {
      aj["length_m"] = arc.pipe.length_m;
      aj["diameter_m"] = arc.pipe.diameter_m;
      aj["friction"] = arc.pipe.friction;
    }
    if (arc.dp_max_bar != 0.0) aj["dp_max_bar"] = arc.dp_max_bar;
    j["arcs"].push_back(std::move(aj));
  }
  return j.dump(2);
}

std::string result_to_json(const RunResult& result,
                           const LipschitzMinlp& problem) {
  ordered_json j;
  j["status"] = to_string(result.status);
  j["objective"] = result.objective;
  j["iterations"] = result.iterations;
  ordered_json point = ordered_json::object();
  for (std::size_t v = 0; v < result.point.size(); ++v) {
    point[problem.variables[v].name] = result.point[v];
  }
  j["point"] = std::move(point);
  ordered_json calls = ordered_json::object();
  for (std::size_t i = 0; i < result.oracle_calls.size(); ++i) {
    calls[problem.bindings[i].name] = result.oracle_calls[i];
  }
  j["oracle_calls"] = std::move(calls);
  j["oracle_calls_total"] = result.oracle_calls_total;
  ordered_json report;
  report["epsilon"] = result.final_report.epsilon;
  report["max_linear_residual"] = result.final_report.max_linear_residual;
  report["max_bound_residual"] = result.final_report.max_bound_residual;
  report["max_integrality_residual"] =
      result.final_report.max_integrality_residual;
  report["max_binding_violation"] = result.final_report.max_binding_violation;
  report["binding_violation"] = result.final_report.binding_violation;
  report["linear_feasible"] = result.final_report.linear_feasible;
  report["eps_feasible"] = result.final_report.eps_feasible;
  j["feasibility"] = std::move(report);
  ordered_json boxes = ordered_json::array();
  for (const auto& partition : result.partitions) {
    boxes.push_back(partition.active_count());
  }
  j["active_boxes"] = std::move(boxes);
  return j.dump(2);
}

}  // namespace slr::io
