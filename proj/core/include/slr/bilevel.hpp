#ifndef SLR_BILEVEL_HPP
#define SLR_BILEVEL_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slr/box.hpp"
#include "slr/model.hpp"
#include "slr/oracles.hpp"

namespace slr::bilevel {

using Matrix = std::vector<std::vector<double>>;

// min_x  1/2 x'H_u x + c_u'x + 1/2 y'G_u y + d_u'y
// s.t.   A x + B y <= a,  x in [x_lo, x_hi],
//        y solves  min_y 1/2 y'G_l y + (d_l + F'x)'y
//                  s.t. C x + D y <= b,  y in [y_lo, y_hi].
// H_u, G_u, G_l symmetric positive semidefinite; F optional (empty for a
// purely parametric-rhs lower level).
struct BilevelInstance {
  Matrix H_u;  // n_x x n_x or empty
  std::vector<double> c_u;
  Matrix G_u;  // n_y x n_y or empty
  std::vector<double> d_u;
  Matrix A;  // m_u x n_x
  Matrix B;  // m_u x n_y
  std::vector<double> a;
  Matrix G_l;  // n_y x n_y or empty
  std::vector<double> d_l;
  Matrix C;  // m_l x n_x
  Matrix D;  // m_l x n_y
  std::vector<double> b;
  Matrix F;  // n_x x n_y or empty
  std::vector<double> x_lo, x_hi;
  std::vector<double> y_lo, y_hi;
  // Bound on how fast the lower-level feasible set moves with x.  Left at
  // the default, reformulate() flags the run as a guess.
  double hoffman = 1.0;
  bool hoffman_given = false;
  std::optional<std::vector<double>> reference;  // known optimum (x, y)

  int n_x() const { return static_cast<int>(x_lo.size()); }
  int n_y() const { return static_cast<int>(y_lo.size()); }
  int m_upper() const { return static_cast<int>(a.size()); }
  int m_lower() const { return static_cast<int>(b.size()); }
  bool has_bilinear() const;
  bool lower_box_constrained() const { return b.empty(); }
};

void validate_instance(const BilevelInstance& instance);

struct LowerSolution {
  std::vector<double> y;
  double value = 0.0;
};

// Exact lower-level optimum at fixed x, by enumerating active sets of the
// stationarity system together with the vertices of the feasible set.
// Exhaustive for any dimension; intended for small n_y (certified up to
// three).  Throws OracleError when the lower level is infeasible at x,
// since the method requires a nonempty follower set everywhere.
LowerSolution lower_level_solve(const BilevelInstance& instance,
                                std::span<const double> x);

double phi(const BilevelInstance& instance, std::span<const double> x);

enum class LipschitzMode { Fast, Slow };

// Bound on the lower-objective gradient norm over a y-box.  Fast mode
// evaluates box vertices only; slow mode enumerates the vertices of the
// full linear relaxation (upper and lower rows plus bounds) restricted to
// the y-box, which is tighter but exponential in the vertex count.
double lipschitz_f(const BilevelInstance& instance, const Box& ybox,
                   LipschitzMode mode);

// Lipschitz bound for the value function: Hoffman constant times the
// column norm of C times the gradient bound of the lower objective.
double lipschitz_phi(const BilevelInstance& instance, LipschitzMode mode);

// Sharper value-function bound when the lower level has no rows: the
// value function moves at most max_y ||F y||_2 per unit change in x.
double lipschitz_phi_box(const BilevelInstance& instance);

// Exact range of 1/2 z'Q z + d'z over a box, by stationary points of
// every face (3^dim face patterns, vertices included).
std::pair<double, double> quadratic_range_over_box(const Matrix& Q,
                                                   const std::vector<double>& d,
                                                   const Box& box);

// Vertices of {z : rows * z <= rhs, lo <= z <= hi}, deduplicated.
std::vector<std::vector<double>> polytope_vertices(
    const Matrix& rows, const std::vector<double>& rhs,
    const std::vector<double>& lo, const std::vector<double>& hi);

struct BilevelModelOptions {
  LipschitzMode mode = LipschitzMode::Fast;
  bool attach_box_filters = true;
};

struct BilevelModel {
  LipschitzMinlp problem;
  int n_x = 0;
  int n_y = 0;       // after any bilinear rewrite
  int n_y_orig = 0;  // before the rewrite
  int eta_phi_col = -1;
  int eta_f_col = -1;
  int epigraph_col = -1;  // -1 when the upper objective is linear
  int phi_binding = -1;
  int f_binding = -1;
  int epigraph_binding = -1;
  std::vector<std::string> warnings;
  BilevelInstance lifted;  // instance actually encoded (post rewrite)
};

// Single-level encoding: variables (x, y, eta_phi, eta_f [, t]), upper
// rows as linear constraints, eta_phi - eta_f >= 0, a value-function
// binding eta_phi = phi(x), a lower-objective binding eta_f = f(y), and
// an epigraph binding t = g(x, y) when the upper objective is quadratic.
// Bilinear couplings with lower rows are lifted into copy variables of x
// inside y first; without lower rows the lower objective binds (y, x)
// jointly instead.
BilevelModel reformulate(const BilevelInstance& instance,
                         const BilevelModelOptions& = {});

void register_bilevel_oracles(OracleRegistry& registry);

std::shared_ptr<const Oracle> make_phi_oracle(const BilevelInstance& instance);
std::shared_ptr<const Oracle> make_quadratic_oracle(const Matrix& Q,
                                                    std::vector<double> d);

std::string instance_to_json(const BilevelInstance& instance);
BilevelInstance instance_from_json(const std::string& text);

}  // namespace slr::bilevel

#endif
