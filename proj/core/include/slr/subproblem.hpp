#ifndef SLR_SUBPROBLEM_HPP
#define SLR_SUBPROBLEM_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "slr/box.hpp"
#include "slr/model.hpp"

namespace slr {

struct SubproblemOptions {
  double lambda = 0.25;   // shrink factor in (0, 1/2]
  int sample_budget = 16;  // Latin hypercube samples
  int sweeps = 3;          // coordinate refinement passes
  std::uint64_t seed = 1;
};

struct SubproblemResult {
  std::vector<double> point;  // input coordinates, inside the shrunk box
  double value = 0.0;         // oracle value at point
  double distance = 0.0;      // Euclidean distance of (point, value) to the
                              // anchor over (inputs, output)
  long oracle_calls = 0;
};

// Projects the anchor onto the graph of the binding's function restricted
// to the lambda-shrunk box: evaluates a deterministic candidate set (the
// clamped anchor, the center, the face midpoints of the shrunk box, seeded
// Latin hypercube samples) and refines the best candidate by coordinate
// golden-section sweeps.  lambda == 1/2, or a binding marked
// center_split_only, short-circuits to the center with a single call.
SubproblemResult solve_separable(const LipschitzMinlp& problem, int binding,
                                 const Box& box,
                                 std::span<const double> anchor_inputs,
                                 double anchor_output,
                                 const SubproblemOptions& options);

struct SubproblemTask {
  int binding = -1;
  Box box;
};

// Runs solve_separable for every task against one full-length anchor point.
// With `parallel` set, tasks whose oracles are concurrency-safe run on a
// thread per task; results are identical to the serial order either way.
std::vector<SubproblemResult> solve_all(const LipschitzMinlp& problem,
                                        const std::vector<SubproblemTask>& tasks,
                                        std::span<const double> anchor,
                                        const SubproblemOptions& options,
                                        bool parallel);

}  // namespace slr

#endif
