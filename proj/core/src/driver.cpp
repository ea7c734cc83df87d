#include "slr/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "slr/errors.hpp"
#include "slr/master.hpp"
#include "slr/subproblem.hpp"

namespace slr {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Builds one partition entry: effective norm, center value, enclosing
// value interval, feasibility flag.  A hook or filter that proves the box
// empty yields an inactive entry; the box still participates in the cover
// audit.
PartitionEntry make_entry(const LipschitzMinlp& problem, int binding,
                          const Box& box) {
  PartitionEntry entry;
  entry.box = box;
  const auto& spec = problem.bindings[binding];
  try {
    entry.norm = spec.effective_norm(box);
    const double value = evaluate(problem, binding, center(box));
    entry.omega = make_omega(box, entry.norm, value);
    entry.active = !spec.box_filter || spec.box_filter(box);
  } catch (const InfeasibleRegionError&) {
    entry.norm = NormSpec{};
    entry.omega = OmegaBox{};
    entry.active = false;
  }
  return entry;
}

long count_active(const std::vector<BoxPartition>& partitions) {
  long total = 0;
  for (const auto& partition : partitions) total += partition.active_count();
  return total;
}

}  // namespace

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::EpsFeasible: return "eps-feasible";
    case RunStatus::Infeasible: return "infeasible";
    case RunStatus::IterationLimit: return "iteration-limit";
    case RunStatus::TimeLimit: return "time-limit";
  }
  return "unknown";
}

RunResult run(const LipschitzMinlp& problem, const SolverConfig& config) {
  require_valid(problem);
  if (!is_nonoverlapping(problem)) {
    throw ValidationError(
        "run: bindings share variables; apply make_nonoverlapping first");
  }
  if (!(config.epsilon > 0.0)) throw ValidationError("run: epsilon must be positive");
  if (!(config.lambda > 0.0) || config.lambda > 0.5) {
    throw ValidationError("run: lambda must lie in (0, 1/2]");
  }

  const auto t_start = Clock::now();
  RunResult result;
  std::vector<std::uint64_t> calls_before;
  calls_before.reserve(problem.bindings.size());
  for (const auto& binding : problem.bindings) {
    calls_before.push_back(binding.eval_count->load());
  }

  auto& partitions = result.partitions;
  partitions.reserve(problem.bindings.size());
  for (std::size_t i = 0; i < problem.bindings.size(); ++i) {
    BoxPartition partition;
    partition.root = problem.input_box(static_cast<int>(i));
    partition.entries.push_back(
        make_entry(problem, static_cast<int>(i), partition.root));
    partitions.push_back(std::move(partition));
  }

  auto finish = [&](RunStatus status) {
    result.status = status;
    result.oracle_calls.clear();
    result.oracle_calls_total = 0;
    for (std::size_t i = 0; i < problem.bindings.size(); ++i) {
      const std::uint64_t used =
          problem.bindings[i].eval_count->load() - calls_before[i];
      result.oracle_calls.push_back(used);
      result.oracle_calls_total += used;
    }
    return result;
  };

  for (long k = 1; k <= config.max_iterations; ++k) {
    const double elapsed_s = ms_since(t_start) / 1000.0;
    if (elapsed_s >= config.time_limit_s) return finish(RunStatus::TimeLimit);

    IterationRecord record;
    record.k = k;

    auto t_build = Clock::now();
    const MasterModel master = build_master(problem, partitions);
    record.build_ms = ms_since(t_build);

    milp::MilpConfig milp_config = config.milp;
    milp_config.time_limit_s = std::min(
        milp_config.time_limit_s, config.time_limit_s - elapsed_s);

    auto t_master = Clock::now();
    const milp::MilpSolution sol = milp::solve_milp(master.milp, milp_config);
    record.master_ms = ms_since(t_master);

    if (sol.status == milp::MilpStatus::Infeasible) {
      record.master_objective = std::numeric_limits<double>::quiet_NaN();
      record.total_boxes = count_active(partitions);
      result.trace.push_back(record);
      result.iterations = k;
      return finish(RunStatus::Infeasible);
    }
    if (sol.status == milp::MilpStatus::TimeLimit) {
      result.iterations = k;
      return finish(RunStatus::TimeLimit);
    }
    if (sol.status == milp::MilpStatus::NodeLimit) {
      result.iterations = k;
      return finish(RunStatus::IterationLimit);
    }
    if (sol.status != milp::MilpStatus::Optimal) {
      throw NumericalError("run: relaxation reported unbounded despite finite bounds");
    }

    const MasterPoint point = extract(master, sol, problem, partitions);
    result.point = point.x;
    result.objective = sol.objective;
    record.master_objective = sol.objective;

    auto t_sub = Clock::now();
    const FeasibilityReport report =
        check_epsilon_feasible(problem, point.x, config.epsilon);
    result.final_report = report;
    record.max_violation = report.max_binding_violation;
    result.iterations = k;

    if (report.eps_feasible) {
      record.sub_ms = ms_since(t_sub);
      record.total_boxes = count_active(partitions);
      result.trace.push_back(record);
      if (config.observer) config.observer(k, problem, partitions);
      return finish(RunStatus::EpsFeasible);
    }

    // Project and split every binding still violating the tolerance.
    std::vector<SubproblemTask> tasks;
    std::vector<std::size_t> task_binding;
    std::vector<int> task_entry;
    for (std::size_t i = 0; i < problem.bindings.size(); ++i) {
      if (report.binding_violation[i] <= config.epsilon) continue;
      int entry_idx = point.chosen_box[i];
      if (entry_idx < 0) {
        const auto inputs = problem.gather_inputs(static_cast<int>(i), point.x);
        entry_idx = locate(partitions[i], inputs, 1e-7);
      }
      if (entry_idx < 0) {
        throw NumericalError("run: master point escaped every active box");
      }
      tasks.push_back({static_cast<int>(i), partitions[i].entries[entry_idx].box});
      task_binding.push_back(i);
      task_entry.push_back(entry_idx);
    }

    SubproblemOptions sub_options;
    sub_options.lambda = config.lambda;
    sub_options.sample_budget = config.sample_budget;
    sub_options.seed = config.seed + static_cast<std::uint64_t>(k) * 0x9e3779b9ULL;
    const auto projected = solve_all(problem, tasks, point.x, sub_options,
                                     config.parallel_subproblems);
    record.sub_ms = ms_since(t_sub);

    for (std::size_t t = 0; t < tasks.size(); ++t) {
      auto& partition = partitions[task_binding[t]];
      const int j = task_entry[t];
      const Box parent = partition.entries[j].box;
      const auto children = split(parent, projected[t].point);
      if (children.empty()) continue;  // degenerate box, nothing to refine
      partition.entries.erase(partition.entries.begin() + j);
      for (const auto& child : children) {
        partition.entries.push_back(
            make_entry(problem, static_cast<int>(task_binding[t]), child));
      }
      std::string why;
      if (!verify_cover(partition, &why)) {
        throw NumericalError("run: partition cover broken after split: " + why);
      }
      ++record.bindings_split;
    }

    record.total_boxes = count_active(partitions);
    result.trace.push_back(record);
    if (config.observer) config.observer(k, problem, partitions);
  }

  return finish(RunStatus::IterationLimit);
}

unsigned long long worst_case_iterations(
    const LipschitzMinlp& problem, double eps, double lambda,
    std::vector<unsigned long long>* per_binding_levels) {
  if (!(eps > 0.0) || !(lambda > 0.0) || lambda > 0.5) {
    throw ValidationError("worst_case_iterations: need eps > 0, lambda in (0, 1/2]");
  }
  constexpr unsigned long long kMax =
      std::numeric_limits<unsigned long long>::max();
  if (per_binding_levels) per_binding_levels->clear();

  unsigned long long total = 0;
  for (std::size_t i = 0; i < problem.bindings.size(); ++i) {
    const Box root = problem.input_box(static_cast<int>(i));
    const auto norm = problem.bindings[i].effective_norm(root);
    const double diameter = weighted_norm(norm, root.width());

    unsigned long long levels = 0;
    if (diameter > eps) {
      const double raw = std::ceil(std::log(eps / diameter) / std::log1p(-lambda));
      levels = raw >= static_cast<double>(kMax)
                   ? kMax
                   : static_cast<unsigned long long>(raw);
    }
    if (per_binding_levels) per_binding_levels->push_back(levels);

    const unsigned long long dim = problem.bindings[i].inputs.size();
    unsigned long long binding_total = 0;
    for (unsigned long long level = 0; level <= levels; ++level) {
      unsigned long long boxes;
      if (dim == 0 || level == 0) {
        boxes = 1;
      } else if (level * dim >= 64) {
        boxes = kMax;
      } else {
        boxes = 1ULL << (level * dim);
      }
      if (binding_total > kMax - boxes) {
        binding_total = kMax;
        break;
      }
      binding_total += boxes;
    }
    if (total > kMax - binding_total) return kMax;
    total += binding_total;
  }
  return total;
}

void export_trace(const RunResult& result, std::ostream& os,
                  bool include_timings) {
  os << "k,master_obj,max_violation,splits,total_boxes,master_ms,sub_ms,build_ms\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto stamp = [&](double v) {
    if (!include_timings) return std::string("0");
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  for (const auto& row : result.trace) {
    os << row.k << ',' << num(row.master_objective) << ','
       << num(row.max_violation) << ',' << row.bindings_split << ','
       << row.total_boxes << ',' << stamp(row.master_ms) << ','
       << stamp(row.sub_ms) << ',' << stamp(row.build_ms) << '\n';
  }
}

}  // namespace slr
