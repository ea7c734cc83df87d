#include "slr/master.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "slr/errors.hpp"

namespace slr {

namespace {

constexpr double kInfty = std::numeric_limits<double>::infinity();

}  // namespace

BigMValues compute_big_m(const LipschitzMinlp& problem, int binding,
                         const BoxPartition& partition) {
  const auto& spec = problem.bindings[binding];
  if (spec.big_m_override) {
    return {*spec.big_m_override, *spec.big_m_override};
  }
  const Box root = problem.input_box(binding);
  const auto& out = problem.variables[spec.output];

  // M_x must cover x_l - v_lo and v_hi - x_l for every coordinate of
  // every active box when its selector is off; the root bounds give the
  // worst case.
  double m_x = 0.0;
  double y_min = out.lower;
  double y_max = out.upper;
  double max_radius = 0.0;
  for (const auto& entry : partition.entries) {
    if (!entry.active) continue;
    for (std::size_t c = 0; c < entry.box.lo.size(); ++c) {
      m_x = std::max(m_x, entry.box.hi[c] - root.lo[c]);
      m_x = std::max(m_x, root.hi[c] - entry.box.lo[c]);
    }
    y_min = std::min(y_min, entry.omega.y_lower());
    y_max = std::max(y_max, entry.omega.y_upper());
    max_radius = std::max(max_radius, entry.omega.radius);
  }
  const double m_y = (y_max - y_min) + max_radius;
  return {m_x, m_y};
}

MasterModel build_master(const LipschitzMinlp& problem,
                         const std::vector<BoxPartition>& partitions) {
  if (partitions.size() != problem.bindings.size()) {
    throw ValidationError("build_master: one partition per binding required");
  }

  MasterModel master;
  master.n_problem_vars = problem.nvars();

  milp::LpProblem& lp = master.milp.lp;
  const int base_rows = static_cast<int>(problem.linear.nrows());

  // Count z columns and activation rows first so the dense matrix is
  // allocated once.
  int extra_cols = 0;
  int extra_rows = 0;
  for (std::size_t i = 0; i < problem.bindings.size(); ++i) {
    const auto& binding = problem.bindings[i];
    int active = 0;
    for (const auto& entry : partitions[i].entries) {
      if (entry.active) ++active;
    }
    extra_cols += active;
    extra_rows += active * (2 * static_cast<int>(binding.inputs.size()) + 2);
    extra_rows += 1;  // selector convexity row
  }

  const int ncols = master.n_problem_vars + extra_cols;
  const int nrows = base_rows + extra_rows;
  lp.resize(nrows, ncols);
  master.milp.integral.assign(ncols, 0);

  for (int v = 0; v < master.n_problem_vars; ++v) {
    const auto& spec = problem.variables[v];
    lp.obj[v] = v < static_cast<int>(problem.objective.size())
                    ? problem.objective[v]
                    : 0.0;
    lp.col_lo[v] = spec.lower;
    lp.col_hi[v] = spec.upper;
    master.col_names.push_back(spec.name);
    if (spec.integral) master.milp.integral[v] = 1;
  }

  for (int r = 0; r < base_rows; ++r) {
    for (int c = 0; c < master.n_problem_vars; ++c) {
      const double coeff = problem.linear.rows[r][c];
      if (coeff != 0.0) lp.at(r, c) = coeff;
    }
    lp.row_lo[r] = problem.linear.rhs[r];
    lp.row_hi[r] = kInfty;
  }

  int col = master.n_problem_vars;
  int row = base_rows;
  master.z_col.resize(problem.bindings.size());
  for (std::size_t i = 0; i < problem.bindings.size(); ++i) {
    const auto& binding = problem.bindings[i];
    const auto& partition = partitions[i];
    const BigMValues big_m =
        compute_big_m(problem, static_cast<int>(i), partition);
    master.z_col[i].assign(partition.entries.size(), -1);

    const int convexity_row = row++;
    lp.row_lo[convexity_row] = 1.0;
    lp.row_hi[convexity_row] = 1.0;

    for (std::size_t j = 0; j < partition.entries.size(); ++j) {
      const auto& entry = partition.entries[j];
      if (!entry.active) continue;
      const int z = col++;
      master.z_col[i][j] = z;
      lp.obj[z] = 0.0;
      lp.col_lo[z] = 0.0;
      lp.col_hi[z] = 1.0;
      master.milp.integral[z] = 1;
      master.col_names.push_back("z_" + binding.name + "_" +
                                 std::to_string(j));
      lp.at(convexity_row, z) = 1.0;

      for (std::size_t c = 0; c < binding.inputs.size(); ++c) {
        const int xc = binding.inputs[c];
        // x_c - M z >= lo_c - M  and  x_c + M z <= hi_c + M
        lp.at(row, xc) = 1.0;
        lp.at(row, z) = -big_m.x_rows;
        lp.row_lo[row] = entry.box.lo[c] - big_m.x_rows;
        lp.row_hi[row] = kInfty;
        ++row;
        lp.at(row, xc) = 1.0;
        lp.at(row, z) = big_m.x_rows;
        lp.row_lo[row] = -kInfty;
        lp.row_hi[row] = entry.box.hi[c] + big_m.x_rows;
        ++row;
      }

      // x_r pinned to the box's output interval when z is on.
      lp.at(row, binding.output) = 1.0;
      lp.at(row, z) = -big_m.y_rows;
      lp.row_lo[row] = entry.omega.y_lower() - big_m.y_rows;
      lp.row_hi[row] = kInfty;
      ++row;
      lp.at(row, binding.output) = 1.0;
      lp.at(row, z) = big_m.y_rows;
      lp.row_lo[row] = -kInfty;
      lp.row_hi[row] = entry.omega.y_upper() + big_m.y_rows;
      ++row;
    }
  }

  return master;
}

MasterPoint extract(const MasterModel& master, const milp::MilpSolution& sol,
                    const LipschitzMinlp& problem,
                    const std::vector<BoxPartition>& partitions) {
  MasterPoint point;
  point.x.assign(sol.x.begin(), sol.x.begin() + master.n_problem_vars);
  point.chosen_box.assign(problem.bindings.size(), -1);
  for (std::size_t i = 0; i < problem.bindings.size(); ++i) {
    int chosen = -1;
    for (std::size_t j = 0; j < master.z_col[i].size(); ++j) {
      const int z = master.z_col[i][j];
      if (z >= 0 && sol.x[z] > 0.5) {
        chosen = static_cast<int>(j);
        break;
      }
    }
    const std::vector<double> inputs =
        problem.gather_inputs(static_cast<int>(i), point.x);
    if (chosen >= 0 &&
        !partitions[i].entries[chosen].box.contains(inputs, 1e-6)) {
      const int located = locate(partitions[i], inputs, 1e-9);
      if (located >= 0) chosen = located;
    }
    point.chosen_box[i] = chosen;
  }
  return point;
}

}  // namespace slr
