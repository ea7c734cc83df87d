#ifndef SLR_MILP_HPP
#define SLR_MILP_HPP

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace slr::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// min obj.x  s.t.  row_lo <= A x <= row_hi,  col_lo <= x <= col_hi.
// Column bounds must be finite; row bounds may be infinite on either side.
// A is stored dense, column-major.
struct LpProblem {
  int nrows = 0;
  int ncols = 0;
  std::vector<double> obj;
  std::vector<double> col_lo, col_hi;
  std::vector<double> row_lo, row_hi;
  std::vector<double> a;  // a[c * nrows + r]

  void resize(int rows, int cols);
  double& at(int row, int col) { return a[size_t(col) * nrows + row]; }
  double get(int row, int col) const { return a[size_t(col) * nrows + row]; }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

// Simplex basis snapshot: which variable (columns first, then one logical
// per row) is basic in each row position, and the bound each nonbasic
// variable rests at.
struct Basis {
  std::vector<int> basic;        // size nrows
  std::vector<uint8_t> at_upper;  // size ncols + nrows
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;             // structural values
  std::vector<double> row_activity;  // A x per row
  Basis basis;
  long iterations = 0;
};

// Bounded-variable primal simplex, two phases, explicit basis inverse.
// Deterministic: Dantzig pricing with lowest-index tie breaks, switching to
// Bland's rule after a run of degenerate steps.  Throws NumericalError when
// pivots below 1e-10 persist after refactorization.
LpSolution solve_lp(const LpProblem& problem, const Basis* warm = nullptr);

struct MilpProblem {
  LpProblem lp;
  std::vector<uint8_t> integral;  // size ncols

  bool any_integral() const;
};

enum class MilpStatus { Optimal, Infeasible, Unbounded, NodeLimit, TimeLimit };

struct MilpConfig {
  double abs_gap = 1e-6;
  double int_tol = 1e-6;
  long node_limit = 5'000'000;
  double time_limit_s = kInf;
};

struct MilpSolution {
  MilpStatus status = MilpStatus::Infeasible;
  double objective = 0.0;   // incumbent objective when one exists
  double bound = -kInf;     // proven lower bound
  std::vector<double> x;
  long nodes = 0;
  long lp_iterations = 0;
  bool has_incumbent = false;
};

// Best-bound branch and bound on top of solve_lp.  Branches on the most
// fractional integral column, lowest index on ties.  Node numbering,
// node order, and therefore the reported solution are deterministic.
MilpSolution solve_milp(const MilpProblem& problem, const MilpConfig& config = {});

// Writes the instance in LP text format for offline inspection.
void write_lp_format(const MilpProblem& problem, std::ostream& out,
                     const std::vector<std::string>* col_names = nullptr);

}  // namespace slr::milp

#endif
