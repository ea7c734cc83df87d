// Command-line front end: solve generic instances, gas networks, and
// bilevel instances; print iteration bounds; verify candidate points.
// Exit codes: 0 solved/eps-feasible, 1 usage or input error, 2 infeasible,
// 3 iteration or time limit.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slr/bilevel.hpp"
#include "slr/driver.hpp"
#include "slr/errors.hpp"
#include "slr/gas.hpp"
#include "slr/instance_io.hpp"
#include "slr/master.hpp"
#include "slr/model.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitLimit = 3;

struct SolveFlags {
  std::string instance;
  double epsilon = 0.1;
  double lambda = 0.25;
  std::uint64_t seed = 1;
  long max_iter = 10000;
  double time_limit_s = 1000.0;
  std::string trace_path;
  std::string out_path;
  bool parallel = false;
  bool timings = false;
};

void add_solver_flags(CLI::App* cmd, SolveFlags& flags) {
  cmd->add_option("instance", flags.instance, "Instance file (JSON)")
      ->required();
  cmd->add_option("--epsilon", flags.epsilon,
                  "Nonlinearity feasibility tolerance");
  cmd->add_option("--lambda", flags.lambda, "Shrink factor in (0, 1/2]");
  cmd->add_option("--seed", flags.seed, "Deterministic sampling seed");
  cmd->add_option("--max-iter", flags.max_iter, "Iteration limit");
  cmd->add_option("--time-limit-s", flags.time_limit_s,
                  "Wall-clock limit in seconds");
  cmd->add_option("--trace", flags.trace_path, "Write the iteration CSV here");
  cmd->add_option("--out", flags.out_path, "Write the result JSON here");
  cmd->add_flag("--parallel", flags.parallel,
                "Run independent projections on threads");
  cmd->add_flag("--timings", flags.timings,
                "Write measured times into the trace CSV (off: zeros, "
                "byte-identical across runs)");
}

slr::SolverConfig config_from(const SolveFlags& flags) {
  slr::SolverConfig config;
  config.epsilon = flags.epsilon;
  config.lambda = flags.lambda;
  config.seed = flags.seed;
  config.max_iterations = flags.max_iter;
  config.time_limit_s = flags.time_limit_s;
  config.parallel_subproblems = flags.parallel;
  return config;
}

int exit_code_of(slr::RunStatus status) {
  switch (status) {
    case slr::RunStatus::EpsFeasible: return kExitOk;
    case slr::RunStatus::Infeasible: return kExitInfeasible;
    case slr::RunStatus::IterationLimit:
    case slr::RunStatus::TimeLimit: return kExitLimit;
  }
  return kExitUsage;
}

void emit_artifacts(const SolveFlags& flags, const slr::RunResult& result,
                    const std::string& result_json) {
  if (!flags.out_path.empty()) {
    slr::io::write_file_atomic(flags.out_path, result_json);
  }
  if (!flags.trace_path.empty()) {
    std::ostringstream csv;
    slr::export_trace(result, csv, flags.timings);
    slr::io::write_file_atomic(flags.trace_path, csv.str());
  }
}

void print_summary(const slr::RunResult& result) {
  std::cout << "status: " << slr::to_string(result.status) << "\n"
            << "iterations: " << result.iterations << "\n"
            << "objective: " << result.objective << "\n"
            << "oracle calls: " << result.oracle_calls_total << "\n"
            << "max violation: " << result.final_report.max_binding_violation
            << "\n";
}

// Returns the run result mapped back to the original problem's variables.
slr::RunResult run_with_rewrite(const slr::LipschitzMinlp& problem,
                                const slr::SolverConfig& config,
                                int n_original) {
  const auto rewrite = slr::make_nonoverlapping(problem);
  slr::RunResult result = slr::run(rewrite.problem, config);
  if (!result.point.empty()) {
    result.point = rewrite.project(result.point, n_original);
  }
  return result;
}

int cmd_solve(const SolveFlags& flags) {
  const auto problem =
      slr::io::problem_from_json(slr::io::read_file(flags.instance));
  const auto result =
      run_with_rewrite(problem, config_from(flags), problem.nvars());
  print_summary(result);
  emit_artifacts(flags, result, slr::io::result_to_json(result, problem));
  return exit_code_of(result.status);
}

int cmd_gas(const SolveFlags& flags, const std::string& box_filter) {
  const auto network =
      slr::io::gas_network_from_json(slr::io::read_file(flags.instance));
  slr::gas::GasModelOptions options;
  options.attach_box_filters = box_filter != "off";
  const auto model = slr::gas::build_minlp(network, options);
  const auto result =
      run_with_rewrite(model.problem, config_from(flags), model.problem.nvars());
  print_summary(result);

  nlohmann::ordered_json j =
      nlohmann::ordered_json::parse(slr::io::result_to_json(result, model.problem));
  nlohmann::ordered_json state;
  if (!result.point.empty()) {
    nlohmann::ordered_json pressures = nlohmann::ordered_json::object();
    for (std::size_t n = 0; n < network.nodes.size(); ++n) {
      pressures[network.nodes[n].name] =
          result.point[model.node_pressure_col[n]];
    }
    state["node_pressure_bar"] = std::move(pressures);
    nlohmann::ordered_json flows = nlohmann::ordered_json::object();
    for (std::size_t a = 0; a < network.arcs.size(); ++a) {
      flows[network.arcs[a].name] = result.point[model.arc_flow_col[a]];
    }
    state["arc_flow_kg_s"] = std::move(flows);
    nlohmann::ordered_json dps = nlohmann::ordered_json::object();
    nlohmann::ordered_json opens = nlohmann::ordered_json::object();
    for (std::size_t a = 0; a < network.arcs.size(); ++a) {
      if (model.arc_dp_col[a] >= 0) {
        dps[network.arcs[a].name] = result.point[model.arc_dp_col[a]];
      }
      if (model.arc_open_col[a] >= 0) {
        opens[network.arcs[a].name] = result.point[model.arc_open_col[a]];
      }
    }
    state["pressure_delta_bar"] = std::move(dps);
    if (!opens.empty()) state["valve_open"] = std::move(opens);
  }
  j["network_state"] = std::move(state);
  emit_artifacts(flags, result, j.dump(2));
  return exit_code_of(result.status);
}

int cmd_bilevel(const SolveFlags& flags, const std::string& lipschitz_mode,
                const std::string& box_filter) {
  const auto instance =
      slr::bilevel::instance_from_json(slr::io::read_file(flags.instance));
  slr::bilevel::BilevelModelOptions options;
  options.mode = lipschitz_mode == "slow" ? slr::bilevel::LipschitzMode::Slow
                                          : slr::bilevel::LipschitzMode::Fast;
  options.attach_box_filters = box_filter != "off";
  const auto model = slr::bilevel::reformulate(instance, options);
  for (const auto& warning : model.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }
  const auto result = run_with_rewrite(model.problem, config_from(flags),
                                       model.problem.nvars());
  print_summary(result);

  nlohmann::ordered_json j = nlohmann::ordered_json::parse(
      slr::io::result_to_json(result, model.problem));
  if (!result.point.empty()) {
    std::vector<double> x(result.point.begin(),
                          result.point.begin() + model.n_x);
    std::vector<double> y(result.point.begin() + model.n_x,
                          result.point.begin() + model.n_x + model.n_y_orig);
    j["leader"] = x;
    j["follower"] = y;
    if (instance.reference) {
      double diff = 0.0;
      for (int i = 0; i < model.n_x; ++i) {
        diff = std::max(diff, std::fabs(x[i] - (*instance.reference)[i]));
      }
      for (int i = 0; i < model.n_y_orig; ++i) {
        diff = std::max(diff,
                        std::fabs(y[i] - (*instance.reference)[model.n_x + i]));
      }
      j["diff_to_opt"] = diff;
      std::cout << "diff to opt: " << diff << "\n";
    }
  }
  emit_artifacts(flags, result, j.dump(2));
  return exit_code_of(result.status);
}

int cmd_bound(const std::string& instance_path, double epsilon, double lambda) {
  const auto problem =
      slr::io::problem_from_json(slr::io::read_file(instance_path));
  std::vector<unsigned long long> levels;
  const auto total = slr::worst_case_iterations(problem, epsilon, lambda,
                                                &levels);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    std::cout << "S[" << problem.bindings[i].name << "] = " << levels[i]
              << "\n";
  }
  std::cout << "K = " << total << "\n";
  return kExitOk;
}

std::vector<double> point_from_json(const std::string& text,
                                    const slr::LipschitzMinlp& problem) {
  const auto j = nlohmann::json::parse(text);
  const nlohmann::json* point = &j;
  if (j.is_object() && j.contains("point")) point = &j.at("point");

  std::vector<double> x(problem.nvars(), 0.0);
  if (point->is_array()) {
    if (static_cast<int>(point->size()) != problem.nvars()) {
      throw slr::ValidationError("point length does not match variable count");
    }
    for (int v = 0; v < problem.nvars(); ++v) x[v] = (*point)[v].get<double>();
    return x;
  }
  if (!point->is_object()) {
    throw slr::ValidationError("point must be an array or a name/value map");
  }
  std::vector<char> seen(problem.nvars(), 0);
  for (const auto& [name, value] : point->items()) {
    const int col = problem.find_variable(name);
    if (col < 0) {
      throw slr::ValidationError("point names unknown variable '" + name + "'");
    }
    x[col] = value.get<double>();
    seen[col] = 1;
  }
  for (int v = 0; v < problem.nvars(); ++v) {
    if (!seen[v]) {
      throw slr::ValidationError("point misses variable '" +
                                 problem.variables[v].name + "'");
    }
  }
  return x;
}

int cmd_verify(const std::string& instance_path, const std::string& point_path,
               double epsilon, bool as_gas) {
  slr::LipschitzMinlp problem;
  if (as_gas) {
    const auto network =
        slr::io::gas_network_from_json(slr::io::read_file(instance_path));
    slr::gas::GasModelOptions options;
    options.apply_flow_fixing = false;
    options.attach_box_filters = false;
    problem = slr::gas::build_minlp(network, options).problem;
  } else {
    problem = slr::io::problem_from_json(slr::io::read_file(instance_path));
  }
  const auto x = point_from_json(slr::io::read_file(point_path), problem);
  const auto report = slr::check_epsilon_feasible(problem, x, epsilon);

  std::cout << "max linear residual: " << report.max_linear_residual << "\n"
            << "max bound residual: " << report.max_bound_residual << "\n"
            << "max integrality residual: " << report.max_integrality_residual
            << "\n";
  for (std::size_t i = 0; i < report.binding_violation.size(); ++i) {
    std::cout << "violation[" << problem.bindings[i].name
              << "] = " << report.binding_violation[i] << "\n";
  }
  std::cout << (report.eps_feasible ? "eps-feasible" : "NOT eps-feasible")
            << " at epsilon = " << epsilon << "\n";
  return report.eps_feasible ? kExitOk : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Successive linear relaxation solver for Lipschitz MINLPs"};
  app.require_subcommand(1);

  SolveFlags solve_flags;
  auto* solve_cmd =
      app.add_subcommand("solve", "Solve a generic instance (JSON)");
  add_solver_flags(solve_cmd, solve_flags);

  SolveFlags gas_flags;
  std::string gas_box_filter = "on";
  auto* gas_cmd = app.add_subcommand("gas", "Solve a gas network (JSON)");
  add_solver_flags(gas_cmd, gas_flags);
  gas_cmd->add_option("--box-filter", gas_box_filter,
                      "Drop provably infeasible pressure/flow boxes (on|off)")
      ->check(CLI::IsMember({"on", "off"}));

  SolveFlags bilevel_flags;
  std::string lipschitz_mode = "fast";
  std::string bilevel_box_filter = "on";
  auto* bilevel_cmd =
      app.add_subcommand("bilevel", "Solve a bilevel instance (JSON)");
  add_solver_flags(bilevel_cmd, bilevel_flags);
  bilevel_cmd
      ->add_option("--lipschitz", lipschitz_mode,
                   "Lipschitz constants from box vertices (fast) or "
                   "feasible-polytope vertices (slow)")
      ->check(CLI::IsMember({"fast", "slow"}));
  bilevel_cmd
      ->add_option("--box-filter", bilevel_box_filter,
                   "Drop boxes with no feasible point (on|off)")
      ->check(CLI::IsMember({"on", "off"}));

  std::string bound_instance;
  double bound_epsilon = 0.1;
  double bound_lambda = 0.25;
  auto* bound_cmd = app.add_subcommand(
      "bound", "Print the a-priori worst-case iteration count");
  bound_cmd->add_option("instance", bound_instance, "Instance file (JSON)")
      ->required();
  bound_cmd->add_option("--epsilon", bound_epsilon, "Feasibility tolerance");
  bound_cmd->add_option("--lambda", bound_lambda, "Shrink factor");

  std::string verify_instance;
  std::string verify_point;
  double verify_epsilon = 0.1;
  bool verify_gas = false;
  auto* verify_cmd = app.add_subcommand(
      "verify", "Check a point for epsilon-feasibility");
  verify_cmd->add_option("instance", verify_instance, "Instance file (JSON)")
      ->required();
  verify_cmd
      ->add_option("point", verify_point,
                   "Point file: {\"point\": {name: value, ...}} or an array")
      ->required();
  verify_cmd->add_option("--epsilon", verify_epsilon, "Feasibility tolerance");
  verify_cmd->add_flag("--gas", verify_gas,
                       "Treat the instance as a gas network");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(solve_flags);
    if (gas_cmd->parsed()) return cmd_gas(gas_flags, gas_box_filter);
    if (bilevel_cmd->parsed()) {
      return cmd_bilevel(bilevel_flags, lipschitz_mode, bilevel_box_filter);
    }
    if (bound_cmd->parsed()) {
      return cmd_bound(bound_instance, bound_epsilon, bound_lambda);
    }
    if (verify_cmd->parsed()) {
      return cmd_verify(verify_instance, verify_point, verify_epsilon,
                        verify_gas);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
