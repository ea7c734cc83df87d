#ifndef SLR_MODEL_HPP
#define SLR_MODEL_HPP

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slr/box.hpp"
#include "slr/oracles.hpp"

namespace slr {

struct VariableSpec {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  bool integral = false;
};

// Rows are dense over all problem variables, sense is always >=:
//   sum_j rows[i][j] * x_j >= rhs[i].
struct LinearPart {
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;

  int nrows() const { return static_cast<int>(rows.size()); }
  void add_row(std::vector<double> coeffs, double b);
  // a.x >= b and -a.x >= -b.
  void add_equality(const std::vector<double>& coeffs, double b);
};

// Couples a black-box function to the variable vector:
//   oracle(x[inputs]) == x[output].
// All referenced variables must be continuous.  The hooks are optional
// refinements used by the application front ends; a default-constructed
// binding relies on `lipschitz` and `norm` alone.
struct NonlinearityBinding {
  std::string name;
  std::vector<int> inputs;
  int output = -1;
  double lipschitz = 0.0;
  NormSpec norm;
  std::shared_ptr<const Oracle> oracle;

  // Returns the effective per-box norm (Lipschitz constant folded into the
  // weights) for a sub-box of the input box.  May throw
  // InfeasibleRegionError, which callers convert into dropping the box.
  std::function<NormSpec(const Box&)> local_norm_hook;

  // Returns false when the box provably contains no feasible point of the
  // full problem, in which case it never enters a relaxation.
  std::function<bool(const Box&)> box_filter;

  // Replaces the generic activation constants in relaxations when set.
  std::optional<double> big_m_override;

  // Forces the projection step to the box center (the mid-split policy),
  // regardless of the configured shrink factor.
  bool center_split_only = false;

  // Monotone evaluation and clamp diagnostics, shared across copies.
  std::shared_ptr<std::atomic<std::uint64_t>> eval_count =
      std::make_shared<std::atomic<std::uint64_t>>(0);
  std::shared_ptr<std::atomic<std::uint64_t>> clamp_count =
      std::make_shared<std::atomic<std::uint64_t>>(0);

  // Effective norm over `box`: the hook when present, otherwise the
  // declared norm scaled by the declared Lipschitz constant.
  NormSpec effective_norm(const Box& box) const;
};

// min  objective . x
// s.t. linear rows,  bounds,  integrality,
//      oracle_i(x[inputs_i]) == x[output_i]  for every binding.
struct LipschitzMinlp {
  std::vector<VariableSpec> variables;
  std::vector<double> objective;
  LinearPart linear;
  std::vector<NonlinearityBinding> bindings;

  int nvars() const { return static_cast<int>(variables.size()); }
  int find_variable(const std::string& name) const;  // -1 when absent

  // Initial box over the inputs of binding i, taken from variable bounds.
  Box input_box(int binding) const;

  // Gathers x[inputs_i] out of a full-length point.
  std::vector<double> gather_inputs(int binding,
                                    std::span<const double> x) const;
};

struct ValidationIssue {
  int binding = -1;  // -1 for problem-level issues
  std::string what;
};

// Reports every violated structural assumption; empty means usable.
std::vector<ValidationIssue> validate(const LipschitzMinlp& problem);

// Throws ValidationError listing all issues when validate() is non-empty.
void require_valid(const LipschitzMinlp& problem);

// Evaluates binding i at x_inputs, clamping each coordinate into the
// binding's initial box first (clamps are counted, not errors).  Bumps the
// binding's evaluation counter.  Throws OracleError on non-finite results.
double evaluate(const LipschitzMinlp& problem, int binding,
                std::span<const double> x_inputs);

struct FeasibilityReport {
  double epsilon = 0.0;
  double linear_tol = 0.0;
  double max_linear_residual = 0.0;
  double max_bound_residual = 0.0;
  double max_integrality_residual = 0.0;
  std::vector<double> binding_violation;  // |f_i(x_I) - x_r|
  double max_binding_violation = 0.0;
  bool linear_feasible = false;
  bool eps_feasible = false;
};

// One oracle call per binding.  Linear/bound/integrality tolerance is
// absolute (default 1e-6); the nonlinear defect is compared against eps.
FeasibilityReport check_epsilon_feasible(const LipschitzMinlp& problem,
                                         std::span<const double> x,
                                         double eps,
                                         double linear_tol = 1e-6);

// Rewrites the problem so that the index sets {inputs_i} U {output_i} are
// pairwise disjoint across bindings, introducing auxiliary copies tied to
// their originals by equality rows.  origin[j] maps every column of the
// rewritten problem to the column of the original it mirrors.
struct NonOverlapRewrite {
  LipschitzMinlp problem;
  std::vector<int> origin;

  // Restricts a rewritten-space point to the original variables.
  std::vector<double> project(std::span<const double> x, int n_original) const;
};

NonOverlapRewrite make_nonoverlapping(const LipschitzMinlp& problem);

// True when no variable index appears in more than one binding.
bool is_nonoverlapping(const LipschitzMinlp& problem);

}  // namespace slr

#endif
