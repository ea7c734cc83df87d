#ifndef SLR_TESTS_GENERATORS_HPP
#define SLR_TESTS_GENERATORS_HPP

#include <random>
#include <vector>

#include "slr/bilevel.hpp"
#include "slr/gas.hpp"
#include "slr/milp.hpp"
#include "slr/model.hpp"

// Deterministic random builders for the test suites.  Every generated
// object is feasible by construction (anchored rows) and every declared
// Lipschitz constant is an analytic bound for the chosen oracle family, so
// property tests can treat the declarations as ground truth.
namespace testgen {

using Rng = std::mt19937_64;

double urand(Rng& rng, double lo, double hi);
int irand(Rng& rng, int lo, int hi);

// Feasible-by-construction LP: row bounds are anchored at a random interior
// point, col bounds are finite.
slr::milp::LpProblem random_lp(Rng& rng, int nrows, int ncols);

// Same, with `n_binary` columns restricted to {0,1}; the anchor is snapped
// to the integer grid first so feasibility survives.
slr::milp::MilpProblem random_milp(Rng& rng, int nrows, int ncols,
                                   int n_binary);

// Lipschitz instance with `n_bindings` disjoint bindings of input dimension
// 1..max_dim each, polynomial or sum-of-sines oracles, output bounds wide
// enough to contain the graph, and (optionally) linear rows anchored at a
// graph point.
slr::LipschitzMinlp random_instance(Rng& rng, int n_bindings, int max_dim,
                                    bool with_rows);

struct GridOptimum {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

// Exhaustive minimum over the graph grid: binding inputs walk a `step`
// lattice, outputs are set to the exact oracle values, rows and output
// bounds decide feasibility.  Requires every variable to be an input or
// output of some binding.
GridOptimum grid_minimum(const slr::LipschitzMinlp& problem, double step);

// min over the input grid of dist(f(x), output bounds), minus the largest
// possible within-cell drift.  A positive value certifies that no point of
// the binding graph comes closer than it to the output interval.
double certified_output_gap(const slr::LipschitzMinlp& problem, int binding,
                            double step);

// Five-node network: a compressor feeds a two-pipe cycle that reconverges
// through short pipes, so the cycle flows stay free after tree fixing.
// Small enough to converge in milliseconds at eps = 0.1 bar.
slr::gas::GasNetwork tight_diamond();

// min_x x - 3y with the follower tracking y = x (min 1/2 y^2 s.t.
// x - y <= 0) on x in [0,1], y in [-1,1].  Optimistic optimum (1, 1),
// value -2, stored in `reference`.
slr::bilevel::BilevelInstance tracking_bilevel();

}  // namespace testgen

#endif
