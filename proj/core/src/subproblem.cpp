#include "slr/subproblem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "slr/errors.hpp"

namespace slr {

namespace {

struct Evaluator {
  const LipschitzMinlp& problem;
  int binding;
  std::span<const double> anchor_inputs;
  double anchor_output;
  long calls = 0;

  // Squared distance of (x, f(x)) to the anchor; the graph point is always
  // admissible because the value interval of any enclosing box contains it.
  // Points without an admissible value score infinity; the box center
  // always evaluates (it produced the box's value interval), so a finite
  // incumbent exists.
  double distance_sq(const std::vector<double>& x, double* value) {
    double f;
    try {
      f = evaluate(problem, binding, x);
    } catch (const InfeasibleRegionError&) {
      return std::numeric_limits<double>::infinity();
    }
    ++calls;
    double d = (f - anchor_output) * (f - anchor_output);
    for (std::size_t c = 0; c < x.size(); ++c) {
      const double diff = x[c] - anchor_inputs[c];
      d += diff * diff;
    }
    if (value) *value = f;
    return d;
  }
};

std::vector<std::vector<double>> latin_hypercube(const Box& box, int samples,
                                                 std::uint64_t seed) {
  const std::size_t dim = box.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> strata(dim, std::vector<double>(samples));
  for (std::size_t c = 0; c < dim; ++c) {
    std::vector<int> order(samples);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int s = 0; s < samples; ++s) {
      const double u = (order[s] + unit(rng)) / samples;
      strata[c][s] = box.lo[c] + u * (box.hi[c] - box.lo[c]);
    }
  }
  std::vector<std::vector<double>> points(samples, std::vector<double>(dim));
  for (int s = 0; s < samples; ++s) {
    for (std::size_t c = 0; c < dim; ++c) points[s][c] = strata[c][s];
  }
  return points;
}

// Golden-section refinement of one coordinate; assumes nothing about the
// objective beyond continuity, so it only ever improves the incumbent.
void sweep_coordinate(Evaluator& eval, std::vector<double>& best, double& best_d,
                      double& best_value, std::size_t c, double lo, double hi) {
  if (hi - lo <= 1e-12 * (1.0 + std::abs(lo) + std::abs(hi))) return;
  constexpr double kInvPhi = 0.6180339887498949;
  std::vector<double> probe = best;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  probe[c] = x1;
  double f1 = eval.distance_sq(probe, nullptr);
  probe[c] = x2;
  double f2 = eval.distance_sq(probe, nullptr);
  for (int it = 0; it < 24 && (b - a) > 1e-10 * (hi - lo); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      probe[c] = x1;
      f1 = eval.distance_sq(probe, nullptr);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      probe[c] = x2;
      f2 = eval.distance_sq(probe, nullptr);
    }
  }
  probe[c] = f1 <= f2 ? x1 : x2;
  double value = 0.0;
  const double d = eval.distance_sq(probe, &value);
  if (d < best_d) {
    best = probe;
    best_d = d;
    best_value = value;
  }
}

}  // namespace

SubproblemResult solve_separable(const LipschitzMinlp& problem, int binding,
                                 const Box& box,
                                 std::span<const double> anchor_inputs,
                                 double anchor_output,
                                 const SubproblemOptions& options) {
  const auto& spec = problem.bindings[binding];
  Evaluator eval{problem, binding, anchor_inputs, anchor_output, 0};

  SubproblemResult result;
  if (spec.center_split_only || options.lambda >= 0.5) {
    result.point = center(box);
    result.distance = std::sqrt(eval.distance_sq(result.point, &result.value));
    result.oracle_calls = eval.calls;
    return result;
  }

  const Box inner = shrink(box, options.lambda);
  std::vector<std::vector<double>> candidates;
  std::vector<double> clamped(anchor_inputs.begin(), anchor_inputs.end());
  for (std::size_t c = 0; c < static_cast<std::size_t>(inner.dim()); ++c) {
    clamped[c] = std::clamp(clamped[c], inner.lo[c], inner.hi[c]);
  }
  candidates.push_back(clamped);
  candidates.push_back(center(inner));
  for (std::size_t c = 0; c < static_cast<std::size_t>(inner.dim()); ++c) {
    auto face = center(inner);
    face[c] = inner.lo[c];
    candidates.push_back(face);
    face[c] = inner.hi[c];
    candidates.push_back(face);
  }
  if (options.sample_budget > 0) {
    auto samples = latin_hypercube(inner, options.sample_budget, options.seed);
    candidates.insert(candidates.end(), samples.begin(), samples.end());
  }

  std::vector<double> best;
  double best_d = std::numeric_limits<double>::infinity();
  double best_value = 0.0;
  for (const auto& cand : candidates) {
    double value = 0.0;
    const double d = eval.distance_sq(cand, &value);
    if (d < best_d) {
      best = cand;
      best_d = d;
      best_value = value;
    }
  }

  for (int pass = 0; pass < options.sweeps; ++pass) {
    for (std::size_t c = 0; c < static_cast<std::size_t>(inner.dim()); ++c) {
      sweep_coordinate(eval, best, best_d, best_value, c, inner.lo[c],
                       inner.hi[c]);
    }
  }

  result.point = std::move(best);
  result.value = best_value;
  result.distance = std::sqrt(best_d);
  result.oracle_calls = eval.calls;
  return result;
}

std::vector<SubproblemResult> solve_all(const LipschitzMinlp& problem,
                                        const std::vector<SubproblemTask>& tasks,
                                        std::span<const double> anchor,
                                        const SubproblemOptions& options,
                                        bool parallel) {
  std::vector<SubproblemResult> results(tasks.size());
  auto run_one = [&](std::size_t t) {
    const auto& task = tasks[t];
    const auto inputs = problem.gather_inputs(task.binding, anchor);
    SubproblemOptions local = options;
    // Distinct deterministic stream per task, independent of order.
    local.seed = options.seed * 0x9e3779b97f4a7c15ULL + (t + 1) * 0x2545f4914f6cdd1dULL;
    results[t] = solve_separable(
        problem, task.binding, task.box, inputs,
        anchor[problem.bindings[task.binding].output], local);
  };

  bool all_safe = true;
  for (const auto& task : tasks) {
    const auto& oracle = problem.bindings[task.binding].oracle;
    if (!oracle || !oracle->concurrent_safe()) all_safe = false;
  }

  if (parallel && all_safe && tasks.size() > 1) {
    std::vector<std::thread> pool;
    pool.reserve(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      pool.emplace_back(run_one, t);
    }
    for (auto& th : pool) th.join();
  } else {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_one(t);
  }
  return results;
}

}  // namespace slr
