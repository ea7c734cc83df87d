#ifndef SLR_SIMPLEX_ENGINE_HPP
#define SLR_SIMPLEX_ENGINE_HPP

#include <vector>

#include "slr/milp.hpp"

namespace slr::milp::detail {

// Bounded-variable primal simplex over a fixed coefficient matrix.
// Variables are the structural columns followed by one logical per row
// (logical i carries the activity of row i, so every constraint reads
// A x - s = 0 with s boxed by the row bounds).
//
// The engine keeps its basis, basis inverse, and point across solves so a
// branch-and-bound driver can change column bounds and re-solve without
// refactorizing from scratch.  All tie breaking is by lowest index, so a
// fixed call sequence reproduces bit-identical results.
class SimplexEngine {
 public:
  // The problem matrix and row bounds are captured by reference and must
  // outlive the engine.  Column bounds are passed per solve.
  explicit SimplexEngine(const LpProblem& problem);

  // Solves min obj.x with the given column bounds.  When `reuse` is true
  // and a prior solve left a valid basis, starts from it.
  LpSolution solve(const std::vector<double>& col_lo,
                   const std::vector<double>& col_hi, bool reuse,
                   const Basis* warm = nullptr);

  long iterations_total() const { return iterations_total_; }

 private:
  enum Where : int { kAtLower = -1, kAtUpper = -2, kFree = -3 };

  void cold_start();
  bool install_basis(const Basis& basis);
  bool refactor();
  void compute_basic_values();
  void load_column(int j, double* out) const;
  void ftran(const double* col, double* out) const;
  double bound_tol(double bound) const;
  int classify_infeasible();  // updates infeasible flags, returns count
  void compute_duals(bool phase_one);
  int price(bool phase_one, bool bland, double* d_out, int* sigma_out);
  bool step(int entering, double d_enter, int sigma,
            bool bland, bool* progressed);

  const LpProblem& p_;
  int m_ = 0, n_ = 0, total_ = 0;

  std::vector<double> lo_, hi_;    // per variable, logicals included
  std::vector<double> x_;
  std::vector<int> where_;         // >= 0: basis row; else Where
  std::vector<int> basic_;
  std::vector<double> binv_;       // m x m, row major
  std::vector<double> y_;          // duals for the active cost vector
  std::vector<double> w_;          // ftran scratch
  std::vector<double> colbuf_;
  std::vector<signed char> infeas_;  // -1 below, +1 above, 0 inside

  bool state_valid_ = false;
  bool unbounded_retry_ = false;
  long iterations_total_ = 0;
  long pivots_since_refactor_ = 0;
};

}  // namespace slr::milp::detail

#endif
