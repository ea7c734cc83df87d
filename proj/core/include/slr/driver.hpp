#ifndef SLR_DRIVER_HPP
#define SLR_DRIVER_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "slr/box.hpp"
#include "slr/milp.hpp"
#include "slr/model.hpp"

namespace slr {

struct SolverConfig {
  double epsilon = 0.1;
  double lambda = 0.25;
  std::uint64_t seed = 1;
  long max_iterations = 10000;
  double time_limit_s = 1000.0;
  bool parallel_subproblems = false;
  int sample_budget = 16;
  milp::MilpConfig milp;

  // Called after every iteration with the partitions as the next master
  // will see them.  Intended for instrumentation.
  std::function<void(long iteration, const LipschitzMinlp& problem,
                     const std::vector<BoxPartition>& partitions)>
      observer;
};

enum class RunStatus { EpsFeasible, Infeasible, IterationLimit, TimeLimit };

const char* to_string(RunStatus status);

struct IterationRecord {
  long k = 0;
  double master_objective = 0.0;
  double max_violation = 0.0;
  int bindings_split = 0;
  long total_boxes = 0;  // active entries across all partitions
  double master_ms = 0.0;
  double sub_ms = 0.0;
  double build_ms = 0.0;
};

struct RunResult {
  RunStatus status = RunStatus::IterationLimit;
  std::vector<double> point;  // last master point
  double objective = 0.0;     // objective of the final relaxation
  long iterations = 0;
  std::vector<IterationRecord> trace;
  std::vector<std::uint64_t> oracle_calls;  // per binding
  std::uint64_t oracle_calls_total = 0;
  FeasibilityReport final_report;
  std::vector<BoxPartition> partitions;
};

// Iterates relax / solve / project / split until the master point is
// epsilon-feasible, the master goes infeasible, or a limit trips.  The
// problem must pass validation and carry pairwise disjoint binding index
// sets (see make_nonoverlapping).
RunResult run(const LipschitzMinlp& problem, const SolverConfig& config);

// A-priori iteration bound: per binding the number of shrink levels
//   S_i = max(0, ceil(log_{1-lambda}(eps / D_i)))
// with D_i the initial box diameter in the binding's effective norm, and
// the total sum_i sum_{k=0..S_i} 2^(k * dim_i), saturated at the maximum
// representable value.
unsigned long long worst_case_iterations(
    const LipschitzMinlp& problem, double eps, double lambda,
    std::vector<unsigned long long>* per_binding_levels = nullptr);

// One CSV row per iteration under the fixed header
//   k,master_obj,max_violation,splits,total_boxes,master_ms,sub_ms,build_ms
// Timing columns are written as zero unless include_timings is set, so the
// default export is byte-identical across runs of the same build.
void export_trace(const RunResult& result, std::ostream& os,
                  bool include_timings = false);

}  // namespace slr

#endif
