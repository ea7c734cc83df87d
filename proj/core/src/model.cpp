#include "slr/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "slr/errors.hpp"

namespace slr {

void LinearPart::add_row(std::vector<double> coeffs, double b) {
  rows.push_back(std::move(coeffs));
  rhs.push_back(b);
}

void LinearPart::add_equality(const std::vector<double>& coeffs, double b) {
  add_row(coeffs, b);
  std::vector<double> neg(coeffs.size());
  for (size_t i = 0; i < coeffs.size(); ++i) neg[i] = -coeffs[i];
  add_row(std::move(neg), -b);
}

NormSpec NonlinearityBinding::effective_norm(const Box& box) const {
  if (local_norm_hook) return local_norm_hook(box);
  return norm.scaled(lipschitz);
}

int LipschitzMinlp::find_variable(const std::string& name) const {
  for (size_t i = 0; i < variables.size(); ++i)
    if (variables[i].name == name) return static_cast<int>(i);
  return -1;
}

Box LipschitzMinlp::input_box(int binding) const {
  const auto& b = bindings.at(binding);
  Box box;
  box.lo.reserve(b.inputs.size());
  box.hi.reserve(b.inputs.size());
  for (int idx : b.inputs) {
    box.lo.push_back(variables.at(idx).lower);
    box.hi.push_back(variables.at(idx).upper);
  }
  return box;
}

std::vector<double> LipschitzMinlp::gather_inputs(
    int binding, std::span<const double> x) const {
  const auto& b = bindings.at(binding);
  std::vector<double> out;
  out.reserve(b.inputs.size());
  for (int idx : b.inputs) out.push_back(x[idx]);
  return out;
}

std::vector<ValidationIssue> validate(const LipschitzMinlp& problem) {
  std::vector<ValidationIssue> issues;
  const int n = problem.nvars();
  auto add = [&](int binding, std::string what) {
    issues.push_back({binding, std::move(what)});
  };

  for (int j = 0; j < n; ++j) {
    const auto& v = problem.variables[j];
    if (!std::isfinite(v.lower) || !std::isfinite(v.upper))
      add(-1, "variable " + v.name + ": non-finite bound");
    else if (v.lower > v.upper)
      add(-1, "variable " + v.name + ": lower bound exceeds upper bound");
  }
  if (static_cast<int>(problem.objective.size()) != n)
    add(-1, "objective length does not match variable count");
  if (problem.linear.rows.size() != problem.linear.rhs.size())
    add(-1, "linear part: row/rhs count mismatch");
  for (size_t r = 0; r < problem.linear.rows.size(); ++r)
    if (static_cast<int>(problem.linear.rows[r].size()) != n)
      add(-1, "linear row " + std::to_string(r) + ": wrong length");

  std::set<int> outputs_seen;
  for (size_t i = 0; i < problem.bindings.size(); ++i) {
    const auto& b = problem.bindings[i];
    const int bi = static_cast<int>(i);
    if (b.inputs.empty()) add(bi, "binding has no inputs");
    for (int idx : b.inputs) {
      if (idx < 0 || idx >= n) {
        add(bi, "input index out of range");
      } else if (problem.variables[idx].integral) {
        add(bi, "input refers to an integral variable");
      }
    }
    std::set<int> uniq(b.inputs.begin(), b.inputs.end());
    if (uniq.size() != b.inputs.size()) add(bi, "repeated input index");
    if (b.output < 0 || b.output >= n) {
      add(bi, "output index out of range");
    } else {
      if (problem.variables[b.output].integral)
        add(bi, "output refers to an integral variable");
      if (uniq.count(b.output)) add(bi, "output index appears among inputs");
      if (!outputs_seen.insert(b.output).second)
        add(bi, "output index shared with another binding");
    }
    if (!(b.lipschitz >= 0.0) || !std::isfinite(b.lipschitz))
      add(bi, "Lipschitz constant must be finite and non-negative");
    if (b.norm.weights.size() != b.inputs.size())
      add(bi, "norm weight count does not match input count");
    for (double w : b.norm.weights)
      if (!(w > 0.0) || !std::isfinite(w)) {
        add(bi, "norm weights must be strictly positive and finite");
        break;
      }
    if (!b.oracle) {
      add(bi, "missing oracle");
    } else if (b.oracle->arity() != static_cast<int>(b.inputs.size())) {
      add(bi, "oracle arity does not match input count");
    }
  }
  return issues;
}

void require_valid(const LipschitzMinlp& problem) {
  const auto issues = validate(problem);
  if (issues.empty()) return;
  std::ostringstream msg;
  msg << "problem fails validation:";
  for (const auto& issue : issues) {
    msg << "\n  ";
    if (issue.binding >= 0) msg << "binding " << issue.binding << ": ";
    msg << issue.what;
  }
  throw ValidationError(msg.str());
}

double evaluate(const LipschitzMinlp& problem, int binding,
                std::span<const double> x_inputs) {
  const auto& b = problem.bindings.at(binding);
  if (x_inputs.size() != b.inputs.size())
    throw OracleError("evaluate: input arity mismatch for binding " + b.name);

  const Box box = problem.input_box(binding);
  std::vector<double> x(x_inputs.begin(), x_inputs.end());
  bool clamped = false;
  for (size_t i = 0; i < x.size(); ++i) {
    const double c = std::clamp(x[i], box.lo[i], box.hi[i]);
    if (c != x[i]) clamped = true;
    x[i] = c;
  }
  if (clamped) b.clamp_count->fetch_add(1, std::memory_order_relaxed);
  b.eval_count->fetch_add(1, std::memory_order_relaxed);

  const double value = b.oracle->eval(x);
  if (!std::isfinite(value))
    throw OracleError("oracle for binding " + b.name +
                      " returned a non-finite value");
  return value;
}

FeasibilityReport check_epsilon_feasible(const LipschitzMinlp& problem,
                                         std::span<const double> x,
                                         double eps, double linear_tol) {
  if (static_cast<int>(x.size()) != problem.nvars())
    throw ValidationError("check_epsilon_feasible: point length mismatch");

  FeasibilityReport report;
  report.epsilon = eps;
  report.linear_tol = linear_tol;

  for (size_t r = 0; r < problem.linear.rows.size(); ++r) {
    double activity = 0.0;
    for (size_t j = 0; j < x.size(); ++j)
      activity += problem.linear.rows[r][j] * x[j];
    report.max_linear_residual = std::max(
        report.max_linear_residual, problem.linear.rhs[r] - activity);
  }
  for (size_t j = 0; j < x.size(); ++j) {
    const auto& v = problem.variables[j];
    report.max_bound_residual =
        std::max({report.max_bound_residual, v.lower - x[j], x[j] - v.upper});
    if (v.integral)
      report.max_integrality_residual = std::max(
          report.max_integrality_residual, std::fabs(x[j] - std::round(x[j])));
  }

  report.binding_violation.resize(problem.bindings.size(), 0.0);
  for (size_t i = 0; i < problem.bindings.size(); ++i) {
    const auto inputs = problem.gather_inputs(static_cast<int>(i), x);
    double defect;
    try {
      const double value = evaluate(problem, static_cast<int>(i), inputs);
      defect = std::fabs(value - x[problem.bindings[i].output]);
    } catch (const InfeasibleRegionError&) {
      // No admissible value at this point, so the graph constraint cannot
      // hold there.
      defect = std::numeric_limits<double>::infinity();
    }
    report.binding_violation[i] = defect;
    report.max_binding_violation =
        std::max(report.max_binding_violation, defect);
  }

  report.linear_feasible = report.max_linear_residual <= linear_tol &&
                           report.max_bound_residual <= linear_tol &&
                           report.max_integrality_residual <= linear_tol;
  report.eps_feasible =
      report.linear_feasible && report.max_binding_violation <= eps;
  return report;
}

bool is_nonoverlapping(const LipschitzMinlp& problem) {
  std::set<int> used;
  for (const auto& b : problem.bindings) {
    for (int idx : b.inputs)
      if (!used.insert(idx).second) return false;
    if (!used.insert(b.output).second) return false;
  }
  return true;
}

std::vector<double> NonOverlapRewrite::project(std::span<const double> x,
                                               int n_original) const {
  std::vector<double> out(n_original, 0.0);
  for (int j = 0; j < n_original; ++j) out[j] = x[j];
  return out;
}

NonOverlapRewrite make_nonoverlapping(const LipschitzMinlp& problem) {
  NonOverlapRewrite result;
  result.problem = problem;
  result.origin.resize(problem.nvars());
  for (int j = 0; j < problem.nvars(); ++j) result.origin[j] = j;

  LipschitzMinlp& out = result.problem;
  std::set<int> used;

  auto duplicate = [&](int idx) {
    const VariableSpec& orig = out.variables[idx];
    VariableSpec copy = orig;
    copy.name = orig.name + "#" + std::to_string(out.nvars());
    copy.integral = false;
    const int aux = out.nvars();
    out.variables.push_back(copy);
    out.objective.push_back(0.0);
    for (auto& row : out.linear.rows) row.push_back(0.0);
    std::vector<double> tie(out.nvars(), 0.0);
    tie[aux] = 1.0;
    tie[idx] = -1.0;
    out.linear.add_equality(tie, 0.0);
    result.origin.push_back(result.origin[idx]);
    return aux;
  };

  for (auto& b : out.bindings) {
    for (int& idx : b.inputs) {
      if (!used.insert(idx).second) idx = duplicate(idx);
      used.insert(idx);
    }
    if (!used.insert(b.output).second) {
      b.output = duplicate(b.output);
      used.insert(b.output);
    }
  }
  return result;
}

}  // namespace slr
