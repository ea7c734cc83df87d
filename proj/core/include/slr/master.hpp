#ifndef SLR_MASTER_HPP
#define SLR_MASTER_HPP

#include <string>
#include <vector>

#include "slr/box.hpp"
#include "slr/milp.hpp"
#include "slr/model.hpp"

namespace slr {

// Activation constants for one binding's disjunction.  Any value at least
// this large lets a deselected box impose nothing on the feasible set.
struct BigMValues {
  double x_rows = 0.0;  // input-range rows
  double y_rows = 0.0;  // value-range rows
};

// x_rows covers max_j max(||v_hi(j) - X_lo||_inf, ||X_hi - v_lo(j)||_inf)
// over the binding's initial box X and partition boxes v(j); y_rows covers
// the spread of all value intervals plus the output bounds plus the largest
// radius.  A binding-level override replaces both.
BigMValues compute_big_m(const LipschitzMinlp& problem, int binding,
                         const BoxPartition& partition);

// Mixed-integer relaxation of the problem induced by one partition per
// binding: for every active box j of binding i a selector z_ij with
//   x[inputs_i] >= box_lo(j)    - M (1 - z_ij)
//   x[inputs_i] <= box_hi(j)    + M (1 - z_ij)
//   x[output_i] <= value_hi(j)  + M (1 - z_ij)
//   x[output_i] >= value_lo(j)  - M (1 - z_ij)
//   sum_j z_ij = 1,  z binary.
struct MasterModel {
  milp::MilpProblem milp;
  int n_problem_vars = 0;
  // z_col[i][j]: column of the selector for entry j of binding i, or -1
  // when the entry is inactive.
  std::vector<std::vector<int>> z_col;
  std::vector<std::string> col_names;
};

// Requires one verified partition per binding (cover identity, no interior
// overlap, all radii finite).
MasterModel build_master(const LipschitzMinlp& problem,
                         const std::vector<BoxPartition>& partitions);

struct MasterPoint {
  std::vector<double> x;        // problem-variable block of the MILP point
  std::vector<int> chosen_box;  // selected entry per binding
};

// Reads the solved MILP point back: selector above one half per binding,
// cross-checked against the box that actually contains x[inputs_i].
MasterPoint extract(const MasterModel& master, const milp::MilpSolution& sol,
                    const LipschitzMinlp& problem,
                    const std::vector<BoxPartition>& partitions);

}  // namespace slr

#endif
