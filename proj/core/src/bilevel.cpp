#include "slr/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "slr/errors.hpp"
#include "slr/milp.hpp"

namespace slr::bilevel {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kInfty = std::numeric_limits<double>::infinity();

int rows_of(const Matrix& m) { return static_cast<int>(m.size()); }

int cols_of(const Matrix& m) {
  return m.empty() ? 0 : static_cast<int>(m.front().size());
}

double mat_at(const Matrix& m, int r, int c) {
  if (r >= rows_of(m) || c >= cols_of(m)) return 0.0;
  return m[r][c];
}

std::vector<double> mat_vec(const Matrix& m, std::span<const double> v,
                            int out_dim) {
  std::vector<double> result(out_dim, 0.0);
  for (int r = 0; r < std::min(out_dim, rows_of(m)); ++r) {
    double acc = 0.0;
    const int n = std::min<int>(cols_of(m), static_cast<int>(v.size()));
    for (int c = 0; c < n; ++c) acc += m[r][c] * v[c];
    result[r] = acc;
  }
  return result;
}

double quadratic_value(const Matrix& Q, const std::vector<double>& d,
                       std::span<const double> z) {
  double value = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i < d.size()) value += d[i] * z[i];
    for (std::size_t j = 0; j < z.size(); ++j) {
      value += 0.5 * mat_at(Q, static_cast<int>(i), static_cast<int>(j)) *
               z[i] * z[j];
    }
  }
  return value;
}

std::vector<double> quadratic_gradient(const Matrix& Q,
                                       const std::vector<double>& d,
                                       std::span<const double> z) {
  std::vector<double> g(z.size(), 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i < d.size()) g[i] = d[i];
    for (std::size_t j = 0; j < z.size(); ++j) {
      g[i] += mat_at(Q, static_cast<int>(i), static_cast<int>(j)) * z[j];
    }
  }
  return g;
}

double euclidean(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

// Gaussian elimination with partial pivoting; empty result on singularity.
std::optional<std::vector<double>> solve_dense(std::vector<std::vector<double>> a,
                                               std::vector<double> rhs) {
  const int n = static_cast<int>(rhs.size());
  for (int k = 0; k < n; ++k) {
    int pivot = k;
    for (int r = k + 1; r < n; ++r) {
      if (std::fabs(a[r][k]) > std::fabs(a[pivot][k])) pivot = r;
    }
    if (std::fabs(a[pivot][k]) < 1e-12) return std::nullopt;
    std::swap(a[k], a[pivot]);
    std::swap(rhs[k], rhs[pivot]);
    for (int r = k + 1; r < n; ++r) {
      const double factor = a[r][k] / a[k][k];
      if (factor == 0.0) continue;
      for (int c = k; c < n; ++c) a[r][c] -= factor * a[k][c];
      rhs[r] -= factor * rhs[k];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double acc = rhs[r];
    for (int c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return x;
}

// Visits every k-subset of {0, ..., m-1}; the total count is capped so a
// mis-sized instance fails loudly instead of running forever.
template <typename Fn>
void for_each_subset(int m, int k, Fn&& fn) {
  if (k == 0) {
    std::vector<int> empty;
    fn(empty);
    return;
  }
  if (k > m) return;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    fn(idx);
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == m - k + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
  }
}

unsigned long long binomial_capped(int m, int k, unsigned long long cap) {
  unsigned long long result = 1;
  for (int i = 0; i < k; ++i) {
    result = result * static_cast<unsigned long long>(m - i) /
             static_cast<unsigned long long>(i + 1);
    if (result > cap) return cap + 1;
  }
  return result;
}

// Row-list view of a polytope {z : rows z <= rhs, lo <= z <= hi} with the
// bounds appended as ordinary rows.
struct ConstraintList {
  std::vector<std::vector<double>> normals;
  std::vector<double> offsets;

  void add(std::vector<double> normal, double offset) {
    normals.push_back(std::move(normal));
    offsets.push_back(offset);
  }

  int size() const { return static_cast<int>(offsets.size()); }

  bool feasible(std::span<const double> z, double tol) const {
    for (int r = 0; r < size(); ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < z.size(); ++c) acc += normals[r][c] * z[c];
      if (acc > offsets[r] + tol * (1.0 + std::fabs(offsets[r]))) return false;
    }
    return true;
  }
};

ConstraintList make_constraints(const Matrix& rows,
                                const std::vector<double>& rhs,
                                const std::vector<double>& lo,
                                const std::vector<double>& hi) {
  const int dim = static_cast<int>(lo.size());
  ConstraintList list;
  for (int r = 0; r < rows_of(rows); ++r) {
    std::vector<double> normal(dim, 0.0);
    for (int c = 0; c < dim; ++c) normal[c] = mat_at(rows, r, c);
    list.add(std::move(normal), rhs[r]);
  }
  for (int c = 0; c < dim; ++c) {
    std::vector<double> normal(dim, 0.0);
    normal[c] = 1.0;
    list.add(normal, hi[c]);
    normal[c] = -1.0;
    list.add(std::move(normal), -lo[c]);
  }
  return list;
}

void push_unique(std::vector<std::vector<double>>& points,
                 const std::vector<double>& z) {
  for (const auto& p : points) {
    double gap = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      gap = std::max(gap, std::fabs(p[c] - z[c]));
    }
    if (gap <= 1e-9) return;
  }
  points.push_back(z);
}

}  // namespace

bool BilevelInstance::has_bilinear() const {
  for (const auto& row : F) {
    for (double v : row) {
      if (v != 0.0) return true;
    }
  }
  return false;
}

void validate_instance(const BilevelInstance& instance) {
  std::vector<std::string> issues;
  const int nx = instance.n_x();
  const int ny = instance.n_y();
  if (nx <= 0) issues.push_back("no leader variables");
  if (ny <= 0) issues.push_back("no follower variables");

  auto check_bounds = [&](const std::vector<double>& lo,
                          const std::vector<double>& hi, const char* what) {
    if (lo.size() != hi.size()) {
      issues.push_back(std::string(what) + ": bound length mismatch");
      return;
    }
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (!std::isfinite(lo[i]) || !std::isfinite(hi[i]) || lo[i] > hi[i]) {
        issues.push_back(std::string(what) + ": bounds must be finite and ordered");
        return;
      }
    }
  };
  check_bounds(instance.x_lo, instance.x_hi, "x");
  check_bounds(instance.y_lo, instance.y_hi, "y");

  auto check_square = [&](const Matrix& m, int n, const char* what) {
    if (m.empty()) return;
    if (rows_of(m) != n || cols_of(m) != n) {
      issues.push_back(std::string(what) + ": wrong shape");
      return;
    }
    for (int r = 0; r < n; ++r) {
      for (int c = r + 1; c < n; ++c) {
        if (std::fabs(m[r][c] - m[c][r]) > 1e-9) {
          issues.push_back(std::string(what) + ": not symmetric");
          return;
        }
      }
    }
  };
  check_square(instance.H_u, nx, "H_u");
  check_square(instance.G_u, ny, "G_u");
  check_square(instance.G_l, ny, "G_l");

  auto check_rows = [&](const Matrix& lhs_x, const Matrix& lhs_y,
                        const std::vector<double>& rhs, const char* what) {
    const int m = static_cast<int>(rhs.size());
    if ((rows_of(lhs_x) != m && !(lhs_x.empty() && m == 0)) ||
        (rows_of(lhs_y) != m && !(lhs_y.empty() && m == 0))) {
      issues.push_back(std::string(what) + ": row count mismatch");
      return;
    }
    if (!lhs_x.empty() && cols_of(lhs_x) != nx) {
      issues.push_back(std::string(what) + ": leader column count mismatch");
    }
    if (!lhs_y.empty() && cols_of(lhs_y) != ny) {
      issues.push_back(std::string(what) + ": follower column count mismatch");
    }
  };
  check_rows(instance.A, instance.B, instance.a, "upper rows");
  check_rows(instance.C, instance.D, instance.b, "lower rows");

  if (!instance.F.empty() &&
      (rows_of(instance.F) != nx || cols_of(instance.F) != ny)) {
    issues.push_back("F: wrong shape");
  }
  if (!instance.c_u.empty() && static_cast<int>(instance.c_u.size()) != nx) {
    issues.push_back("c_u: wrong length");
  }
  if (!instance.d_u.empty() && static_cast<int>(instance.d_u.size()) != ny) {
    issues.push_back("d_u: wrong length");
  }
  if (!instance.d_l.empty() && static_cast<int>(instance.d_l.size()) != ny) {
    issues.push_back("d_l: wrong length");
  }
  if (instance.reference &&
      static_cast<int>(instance.reference->size()) != nx + ny) {
    issues.push_back("reference: wrong length");
  }

  if (!issues.empty()) {
    std::string what = "bilevel instance invalid:";
    for (const auto& issue : issues) what += "\n  " + issue;
    throw ValidationError(what);
  }
}

std::vector<std::vector<double>> polytope_vertices(
    const Matrix& rows, const std::vector<double>& rhs,
    const std::vector<double>& lo, const std::vector<double>& hi) {
  const int dim = static_cast<int>(lo.size());
  const ConstraintList list = make_constraints(rows, rhs, lo, hi);
  if (binomial_capped(list.size(), dim, 2'000'000) > 2'000'000) {
    throw ValidationError("polytope_vertices: constraint set too large");
  }

  std::vector<std::vector<double>> vertices;
  for_each_subset(list.size(), dim, [&](const std::vector<int>& subset) {
    std::vector<std::vector<double>> a(dim, std::vector<double>(dim));
    std::vector<double> b(dim);
    for (int i = 0; i < dim; ++i) {
      a[i] = list.normals[subset[i]];
      b[i] = list.offsets[subset[i]];
    }
    const auto z = solve_dense(std::move(a), std::move(b));
    if (!z) return;
    if (list.feasible(*z, 1e-7)) push_unique(vertices, *z);
  });
  return vertices;
}

namespace {

// Lower-level data at fixed x: rows D y <= b - C x and the effective
// linear term d_l + F' x.
struct LowerAtX {
  std::vector<double> rhs;
  std::vector<double> d;
};

LowerAtX lower_at(const BilevelInstance& instance, std::span<const double> x) {
  LowerAtX lower;
  lower.rhs = instance.b;
  const auto cx = mat_vec(instance.C, x, instance.m_lower());
  for (int r = 0; r < instance.m_lower(); ++r) lower.rhs[r] -= cx[r];
  lower.d = instance.d_l;
  lower.d.resize(instance.n_y(), 0.0);
  if (!instance.F.empty()) {
    for (int j = 0; j < instance.n_y(); ++j) {
      double acc = 0.0;
      for (int i = 0; i < instance.n_x(); ++i) {
        acc += mat_at(instance.F, i, j) * x[i];
      }
      lower.d[j] += acc;
    }
  }
  return lower;
}

bool lower_feasible(const BilevelInstance& instance,
                    const std::vector<double>& rhs) {
  const int ny = instance.n_y();
  const int ml = instance.m_lower();
  milp::LpProblem lp;
  lp.resize(ml, ny);
  for (int c = 0; c < ny; ++c) {
    lp.col_lo[c] = instance.y_lo[c];
    lp.col_hi[c] = instance.y_hi[c];
  }
  for (int r = 0; r < ml; ++r) {
    for (int c = 0; c < ny; ++c) {
      const double v = mat_at(instance.D, r, c);
      if (v != 0.0) lp.at(r, c) = v;
    }
    lp.row_lo[r] = -kInfty;
    lp.row_hi[r] = rhs[r];
  }
  return milp::solve_lp(lp).status != milp::LpStatus::Infeasible;
}

}  // namespace

LowerSolution lower_level_solve(const BilevelInstance& instance,
                                std::span<const double> x) {
  const int ny = instance.n_y();
  const LowerAtX lower = lower_at(instance, x);

  if (!lower_feasible(instance, lower.rhs)) {
    std::ostringstream os;
    os << "lower level infeasible at x = (";
    for (std::size_t i = 0; i < x.size(); ++i) {
      os << (i ? ", " : "") << x[i];
    }
    os << "); the method requires a nonempty follower set for every leader point";
    throw OracleError(os.str());
  }

  const ConstraintList list =
      make_constraints(instance.D, lower.rhs, instance.y_lo, instance.y_hi);

  std::vector<std::vector<double>> candidates =
      polytope_vertices(instance.D, lower.rhs, instance.y_lo, instance.y_hi);

  // Stationary points on every face: G y + d + sum_j mu_j n_j = 0 with the
  // face rows active.  Dual signs are not screened; extra candidates only
  // cost an objective evaluation.
  unsigned long long combos = 0;
  for (int k = 0; k <= ny; ++k) {
    combos += binomial_capped(list.size(), k, 400'000);
  }
  if (combos > 400'000) {
    throw ValidationError("lower_level_solve: follower dimension too large");
  }
  for (int k = 0; k <= ny; ++k) {
    for_each_subset(list.size(), k, [&](const std::vector<int>& subset) {
      const int n = ny + k;
      std::vector<std::vector<double>> kkt(n, std::vector<double>(n, 0.0));
      std::vector<double> rhs(n, 0.0);
      for (int i = 0; i < ny; ++i) {
        for (int j = 0; j < ny; ++j) kkt[i][j] = mat_at(instance.G_l, i, j);
        rhs[i] = -lower.d[i];
      }
      for (int s = 0; s < k; ++s) {
        const auto& normal = list.normals[subset[s]];
        for (int i = 0; i < ny; ++i) {
          kkt[i][ny + s] = normal[i];
          kkt[ny + s][i] = normal[i];
        }
        rhs[ny + s] = list.offsets[subset[s]];
      }
      const auto sol = solve_dense(std::move(kkt), std::move(rhs));
      if (!sol) return;
      std::vector<double> y(sol->begin(), sol->begin() + ny);
      if (list.feasible(y, 1e-7)) push_unique(candidates, y);
    });
  }

  if (candidates.empty()) {
    throw OracleError("lower level: no candidate points in a nonempty polytope");
  }

  LowerSolution best;
  best.value = kInfty;
  for (const auto& y : candidates) {
    const double value = quadratic_value(instance.G_l, lower.d, y);
    if (value < best.value - 1e-12) {
      best.value = value;
      best.y = y;
    }
  }
  return best;
}

double phi(const BilevelInstance& instance, std::span<const double> x) {
  return lower_level_solve(instance, x).value;
}

namespace {

double gradient_bound_over_box(const Matrix& Q, const std::vector<double>& d,
                               const Box& box) {
  const std::size_t dim = box.dim();
  double bound = 0.0;
  for (std::uint64_t mask = 0; mask < (1ULL << dim); ++mask) {
    std::vector<double> z(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      z[c] = (mask >> c) & 1 ? box.hi[c] : box.lo[c];
    }
    bound = std::max(bound, euclidean(quadratic_gradient(Q, d, z)));
  }
  return bound;
}

double spectral_norm(const Matrix& m, int nrows, int ncols) {
  if (nrows == 0 || ncols == 0) return 0.0;
  // Power iteration on M'M from a deterministic, slightly skewed start.
  std::vector<double> v(ncols);
  for (int c = 0; c < ncols; ++c) v[c] = 1.0 + 1e-3 * c;
  double lambda = 0.0;
  for (int it = 0; it < 300; ++it) {
    std::vector<double> mv(nrows, 0.0);
    for (int r = 0; r < nrows; ++r) {
      for (int c = 0; c < ncols; ++c) mv[r] += mat_at(m, r, c) * v[c];
    }
    std::vector<double> mtmv(ncols, 0.0);
    for (int c = 0; c < ncols; ++c) {
      for (int r = 0; r < nrows; ++r) mtmv[c] += mat_at(m, r, c) * mv[r];
    }
    const double norm = euclidean(mtmv);
    if (norm == 0.0) return 0.0;
    lambda = norm;
    for (int c = 0; c < ncols; ++c) v[c] = mtmv[c] / norm;
  }
  return std::sqrt(lambda);
}

}  // namespace

double lipschitz_f(const BilevelInstance& instance, const Box& ybox,
                   LipschitzMode mode) {
  if (mode == LipschitzMode::Fast || instance.lower_box_constrained()) {
    std::vector<double> d = instance.d_l;
    d.resize(instance.n_y(), 0.0);
    return gradient_bound_over_box(instance.G_l, d, ybox);
  }

  // Slow mode: restrict the full linear relaxation (upper and lower rows,
  // all bounds) to the y-box and take the gradient norm over its vertices.
  const int nx = instance.n_x();
  const int ny = instance.n_y();
  Matrix rows;
  std::vector<double> rhs;
  for (int r = 0; r < instance.m_upper(); ++r) {
    std::vector<double> row(nx + ny, 0.0);
    for (int c = 0; c < nx; ++c) row[c] = mat_at(instance.A, r, c);
    for (int c = 0; c < ny; ++c) row[nx + c] = mat_at(instance.B, r, c);
    rows.push_back(std::move(row));
    rhs.push_back(instance.a[r]);
  }
  for (int r = 0; r < instance.m_lower(); ++r) {
    std::vector<double> row(nx + ny, 0.0);
    for (int c = 0; c < nx; ++c) row[c] = mat_at(instance.C, r, c);
    for (int c = 0; c < ny; ++c) row[nx + c] = mat_at(instance.D, r, c);
    rows.push_back(std::move(row));
    rhs.push_back(instance.b[r]);
  }
  std::vector<double> lo = instance.x_lo;
  std::vector<double> hi = instance.x_hi;
  lo.insert(lo.end(), ybox.lo.begin(), ybox.lo.end());
  hi.insert(hi.end(), ybox.hi.begin(), ybox.hi.end());

  const auto vertices = polytope_vertices(rows, rhs, lo, hi);
  if (vertices.empty()) {
    throw InfeasibleRegionError(
        "lipschitz_f: no feasible point meets the y-box");
  }
  std::vector<double> d = instance.d_l;
  d.resize(ny, 0.0);
  double bound = 0.0;
  for (const auto& z : vertices) {
    const std::vector<double> y(z.begin() + nx, z.end());
    bound = std::max(bound, euclidean(quadratic_gradient(instance.G_l, d, y)));
  }
  return bound;
}

double lipschitz_phi(const BilevelInstance& instance, LipschitzMode mode) {
  Box ybox;
  ybox.lo = instance.y_lo;
  ybox.hi = instance.y_hi;
  const double gradient = lipschitz_f(instance, ybox, mode);
  const double c_norm =
      spectral_norm(instance.C, instance.m_lower(), instance.n_x());
  return instance.hoffman * c_norm * gradient;
}

double lipschitz_phi_box(const BilevelInstance& instance) {
  if (!instance.lower_box_constrained()) {
    throw ValidationError(
        "lipschitz_phi_box: only valid without lower-level rows");
  }
  const int ny = instance.n_y();
  double bound = 0.0;
  for (std::uint64_t mask = 0; mask < (1ULL << ny); ++mask) {
    std::vector<double> y(ny);
    for (int c = 0; c < ny; ++c) {
      y[c] = (mask >> c) & 1 ? instance.y_hi[c] : instance.y_lo[c];
    }
    std::vector<double> fy(instance.n_x(), 0.0);
    for (int i = 0; i < instance.n_x(); ++i) {
      for (int j = 0; j < ny; ++j) fy[i] += mat_at(instance.F, i, j) * y[j];
    }
    bound = std::max(bound, euclidean(fy));
  }
  return bound;
}

std::pair<double, double> quadratic_range_over_box(const Matrix& Q,
                                                   const std::vector<double>& d,
                                                   const Box& box) {
  const int dim = static_cast<int>(box.dim());
  if (dim > 16) {
    throw ValidationError("quadratic_range_over_box: dimension too large");
  }
  double lo = kInfty, hi = -kInfty;

  // Face patterns: per coordinate fixed low, fixed high, or free.  The
  // stationary point of the restriction to each face is a candidate when
  // it lies inside the face; the all-fixed patterns are the vertices.
  std::vector<int> state(dim, 0);
  while (true) {
    std::vector<int> free_idx;
    std::vector<double> z(dim, 0.0);
    for (int c = 0; c < dim; ++c) {
      if (state[c] == 0) {
        z[c] = box.lo[c];
      } else if (state[c] == 1) {
        z[c] = box.hi[c];
      } else {
        free_idx.push_back(c);
      }
    }
    bool candidate = true;
    if (!free_idx.empty()) {
      const int nf = static_cast<int>(free_idx.size());
      std::vector<std::vector<double>> a(nf, std::vector<double>(nf));
      std::vector<double> rhs(nf, 0.0);
      for (int i = 0; i < nf; ++i) {
        for (int j = 0; j < nf; ++j) {
          a[i][j] = mat_at(Q, free_idx[i], free_idx[j]);
        }
        double acc = free_idx[i] < static_cast<int>(d.size())
                         ? d[free_idx[i]]
                         : 0.0;
        for (int c = 0; c < dim; ++c) {
          if (state[c] != 2) acc += mat_at(Q, free_idx[i], c) * z[c];
        }
        rhs[i] = -acc;
      }
      const auto sol = solve_dense(std::move(a), std::move(rhs));
      if (!sol) {
        candidate = false;  // boundary faces cover the degenerate case
      } else {
        for (int i = 0; i < nf; ++i) {
          const int c = free_idx[i];
          if ((*sol)[i] < box.lo[c] - 1e-9 || (*sol)[i] > box.hi[c] + 1e-9) {
            candidate = false;
            break;
          }
          z[c] = std::clamp((*sol)[i], box.lo[c], box.hi[c]);
        }
      }
    }
    if (candidate) {
      const double value = quadratic_value(Q, d, z);
      lo = std::min(lo, value);
      hi = std::max(hi, value);
    }

    int pos = dim - 1;
    while (pos >= 0 && state[pos] == 2) {
      state[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++state[pos];
  }
  return {lo, hi};
}

namespace {

class QuadraticOracle final : public Oracle {
 public:
  QuadraticOracle(Matrix Q, std::vector<double> d)
      : Q_(std::move(Q)), d_(std::move(d)) {
    dim_ = std::max<int>(rows_of(Q_), static_cast<int>(d_.size()));
  }

  double eval(std::span<const double> z) const override {
    return quadratic_value(Q_, d_, z);
  }

  int arity() const override { return dim_; }

  std::string registry_name() const override { return "bilevel-quadratic"; }

  std::string params_json() const override {
    ordered_json j;
    j["Q"] = Q_;
    j["d"] = d_;
    return j.dump();
  }

 private:
  Matrix Q_;
  std::vector<double> d_;
  int dim_ = 0;
};

class PhiOracle final : public Oracle {
 public:
  explicit PhiOracle(BilevelInstance instance)
      : instance_(std::move(instance)) {}

  double eval(std::span<const double> x) const override {
    std::vector<std::int64_t> key(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      key[i] = static_cast<std::int64_t>(std::llround(x[i] * 1e12));
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      const auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    const double value = phi(instance_, x);
    std::lock_guard<std::mutex> lock(mutex_);
    memo_.emplace(std::move(key), value);
    return value;
  }

  int arity() const override { return instance_.n_x(); }

  std::string registry_name() const override { return "bilevel-phi"; }

  std::string params_json() const override {
    return instance_to_json(instance_);
  }

 private:
  BilevelInstance instance_;
  mutable std::mutex mutex_;
  mutable std::map<std::vector<std::int64_t>, double> memo_;
};

bool any_nonzero(const Matrix& m) {
  for (const auto& row : m) {
    for (double v : row) {
      if (v != 0.0) return true;
    }
  }
  return false;
}

// Replaces x' F y by new follower variables pinned to x through lower-level
// rows, so the follower objective depends on follower variables alone.
BilevelInstance lift_bilinear(const BilevelInstance& instance,
                              std::vector<int>* aux_of_x) {
  BilevelInstance lifted = instance;
  const int nx = instance.n_x();
  const int ny = instance.n_y();

  std::vector<int> aux(nx, -1);
  int n_aux = 0;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      if (mat_at(instance.F, i, j) != 0.0) {
        if (aux[i] < 0) aux[i] = ny + n_aux++;
        break;
      }
    }
  }

  const int ny_new = ny + n_aux;
  Matrix G(ny_new, std::vector<double>(ny_new, 0.0));
  for (int r = 0; r < ny; ++r) {
    for (int c = 0; c < ny; ++c) G[r][c] = mat_at(instance.G_l, r, c);
  }
  for (int i = 0; i < nx; ++i) {
    if (aux[i] < 0) continue;
    for (int j = 0; j < ny; ++j) {
      const double f = mat_at(instance.F, i, j);
      G[aux[i]][j] += f;
      G[j][aux[i]] += f;
    }
  }
  lifted.G_l = std::move(G);
  lifted.d_l.resize(ny_new, 0.0);
  lifted.d_u.resize(ny_new, 0.0);
  lifted.F.clear();

  for (auto& row : lifted.B) row.resize(ny_new, 0.0);
  for (auto& row : lifted.D) row.resize(ny_new, 0.0);
  if (!lifted.G_u.empty()) {
    for (auto& row : lifted.G_u) row.resize(ny_new, 0.0);
    lifted.G_u.resize(ny_new, std::vector<double>(ny_new, 0.0));
  }

  for (int i = 0; i < nx; ++i) {
    if (aux[i] < 0) continue;
    lifted.y_lo.push_back(instance.x_lo[i]);
    lifted.y_hi.push_back(instance.x_hi[i]);
    // y_aux = x_i as a pair of lower-level rows.
    std::vector<double> c_row(nx, 0.0), d_row(ny_new, 0.0);
    c_row[i] = -1.0;
    d_row[aux[i]] = 1.0;
    lifted.C.push_back(c_row);
    lifted.D.push_back(d_row);
    lifted.b.push_back(0.0);
    for (double& v : c_row) v = -v;
    for (double& v : d_row) v = -v;
    lifted.C.push_back(std::move(c_row));
    lifted.D.push_back(std::move(d_row));
    lifted.b.push_back(0.0);
  }

  if (aux_of_x) *aux_of_x = aux;
  return lifted;
}

}  // namespace

std::shared_ptr<const Oracle> make_phi_oracle(const BilevelInstance& instance) {
  return std::make_shared<PhiOracle>(instance);
}

std::shared_ptr<const Oracle> make_quadratic_oracle(const Matrix& Q,
                                                    std::vector<double> d) {
  return std::make_shared<QuadraticOracle>(Q, std::move(d));
}

BilevelModel reformulate(const BilevelInstance& instance,
                         const BilevelModelOptions& options) {
  validate_instance(instance);

  BilevelModel model;
  model.n_x = instance.n_x();
  model.n_y_orig = instance.n_y();

  // A bilinear coupling with lower rows is lifted into copy variables;
  // without rows the follower objective binds (y, x) jointly instead.
  const bool joint_f =
      instance.has_bilinear() && instance.lower_box_constrained();
  if (instance.has_bilinear() && !instance.lower_box_constrained()) {
    model.lifted = lift_bilinear(instance, nullptr);
  } else {
    model.lifted = instance;
  }
  const BilevelInstance& inst = model.lifted;
  const int nx = inst.n_x();
  const int ny = inst.n_y();
  model.n_y = ny;

  LipschitzMinlp& problem = model.problem;
  auto add_var = [&](const std::string& name, double lo, double hi) {
    problem.variables.push_back({name, lo, hi, false});
    return static_cast<int>(problem.variables.size()) - 1;
  };

  std::vector<int> x_col(nx), y_col(ny);
  for (int i = 0; i < nx; ++i) {
    x_col[i] = add_var("x" + std::to_string(i), inst.x_lo[i], inst.x_hi[i]);
  }
  for (int j = 0; j < ny; ++j) {
    y_col[j] = add_var("y" + std::to_string(j), inst.y_lo[j], inst.y_hi[j]);
  }

  // Range of the follower objective over its box bounds the two value
  // variables; a small relative margin keeps attainable values interior.
  Box ybox;
  ybox.lo = inst.y_lo;
  ybox.hi = inst.y_hi;
  std::vector<double> f_d = inst.d_l;
  f_d.resize(ny, 0.0);
  std::pair<double, double> f_range;
  if (joint_f) {
    Box zbox;
    zbox.lo = inst.y_lo;
    zbox.hi = inst.y_hi;
    zbox.lo.insert(zbox.lo.end(), inst.x_lo.begin(), inst.x_lo.end());
    zbox.hi.insert(zbox.hi.end(), inst.x_hi.begin(), inst.x_hi.end());
    Matrix Q(ny + nx, std::vector<double>(ny + nx, 0.0));
    for (int r = 0; r < ny; ++r) {
      for (int c = 0; c < ny; ++c) Q[r][c] = mat_at(inst.G_l, r, c);
    }
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        const double f = mat_at(inst.F, i, j);
        Q[ny + i][j] += f;
        Q[j][ny + i] += f;
      }
    }
    std::vector<double> d = f_d;
    d.resize(ny + nx, 0.0);
    f_range = quadratic_range_over_box(Q, d, zbox);
  } else {
    f_range = quadratic_range_over_box(inst.G_l, f_d, ybox);
  }
  const double f_margin = 1e-7 * (1.0 + std::fabs(f_range.first) +
                                  std::fabs(f_range.second));
  const double eta_lo = f_range.first - f_margin;
  const double eta_hi = f_range.second + f_margin;
  model.eta_phi_col = add_var("eta_phi", eta_lo, eta_hi);
  model.eta_f_col = add_var("eta_f", eta_lo, eta_hi);

  const bool quadratic_upper =
      any_nonzero(inst.H_u) || any_nonzero(inst.G_u);
  Matrix upper_Q;
  std::vector<double> upper_d;
  if (quadratic_upper) {
    upper_Q.assign(nx + ny, std::vector<double>(nx + ny, 0.0));
    for (int r = 0; r < nx; ++r) {
      for (int c = 0; c < nx; ++c) upper_Q[r][c] = mat_at(inst.H_u, r, c);
    }
    for (int r = 0; r < ny; ++r) {
      for (int c = 0; c < ny; ++c) {
        upper_Q[nx + r][nx + c] = mat_at(inst.G_u, r, c);
      }
    }
    upper_d = inst.c_u;
    upper_d.resize(nx, 0.0);
    for (int j = 0; j < ny; ++j) {
      upper_d.push_back(j < static_cast<int>(inst.d_u.size()) ? inst.d_u[j]
                                                              : 0.0);
    }
    Box zbox;
    zbox.lo = inst.x_lo;
    zbox.hi = inst.x_hi;
    zbox.lo.insert(zbox.lo.end(), inst.y_lo.begin(), inst.y_lo.end());
    zbox.hi.insert(zbox.hi.end(), inst.y_hi.begin(), inst.y_hi.end());
    const auto g_range = quadratic_range_over_box(upper_Q, upper_d, zbox);
    const double margin = 1e-7 * (1.0 + std::fabs(g_range.first) +
                                  std::fabs(g_range.second));
    model.epigraph_col =
        add_var("t", g_range.first - margin, g_range.second + margin);
  }

  const int nvars = problem.nvars();
  problem.objective.assign(nvars, 0.0);
  if (quadratic_upper) {
    problem.objective[model.epigraph_col] = 1.0;
  } else {
    for (int i = 0; i < nx; ++i) {
      problem.objective[x_col[i]] =
          i < static_cast<int>(inst.c_u.size()) ? inst.c_u[i] : 0.0;
    }
    for (int j = 0; j < ny; ++j) {
      problem.objective[y_col[j]] =
          j < static_cast<int>(inst.d_u.size()) ? inst.d_u[j] : 0.0;
    }
  }

  auto add_leq_row = [&](const std::vector<double>& xpart,
                         const std::vector<double>& ypart, double rhs) {
    std::vector<double> row(nvars, 0.0);
    for (int i = 0; i < nx; ++i) row[x_col[i]] = -xpart[i];
    for (int j = 0; j < ny; ++j) row[y_col[j]] = -ypart[j];
    problem.linear.add_row(std::move(row), -rhs);
  };
  for (int r = 0; r < inst.m_upper(); ++r) {
    std::vector<double> xpart(nx, 0.0), ypart(ny, 0.0);
    for (int c = 0; c < nx; ++c) xpart[c] = mat_at(inst.A, r, c);
    for (int c = 0; c < ny; ++c) ypart[c] = mat_at(inst.B, r, c);
    add_leq_row(xpart, ypart, inst.a[r]);
  }
  for (int r = 0; r < inst.m_lower(); ++r) {
    std::vector<double> xpart(nx, 0.0), ypart(ny, 0.0);
    for (int c = 0; c < nx; ++c) xpart[c] = mat_at(inst.C, r, c);
    for (int c = 0; c < ny; ++c) ypart[c] = mat_at(inst.D, r, c);
    add_leq_row(xpart, ypart, inst.b[r]);
  }
  {
    // Follower optimality: the realized objective meets the best value.
    std::vector<double> row(nvars, 0.0);
    row[model.eta_phi_col] = 1.0;
    row[model.eta_f_col] = -1.0;
    problem.linear.add_row(std::move(row), 0.0);
  }

  // Shared feasibility filter over (x, y): every binding's box restricts
  // its own coordinates inside the same linear relaxation.
  auto feasibility_filter = [inst](const std::vector<int>& cols) {
    return [inst, cols](const Box& box) {
      const int nx_l = inst.n_x();
      const int ny_l = inst.n_y();
      const int ml = inst.m_upper() + inst.m_lower();
      milp::LpProblem lp;
      lp.resize(ml, nx_l + ny_l);
      for (int c = 0; c < nx_l; ++c) {
        lp.col_lo[c] = inst.x_lo[c];
        lp.col_hi[c] = inst.x_hi[c];
      }
      for (int c = 0; c < ny_l; ++c) {
        lp.col_lo[nx_l + c] = inst.y_lo[c];
        lp.col_hi[nx_l + c] = inst.y_hi[c];
      }
      for (std::size_t k = 0; k < cols.size(); ++k) {
        lp.col_lo[cols[k]] = std::max(lp.col_lo[cols[k]], box.lo[k]);
        lp.col_hi[cols[k]] = std::min(lp.col_hi[cols[k]], box.hi[k]);
        if (lp.col_lo[cols[k]] > lp.col_hi[cols[k]]) return false;
      }
      int r = 0;
      for (int i = 0; i < inst.m_upper(); ++i, ++r) {
        for (int c = 0; c < nx_l; ++c) {
          const double v = mat_at(inst.A, i, c);
          if (v != 0.0) lp.at(r, c) = v;
        }
        for (int c = 0; c < ny_l; ++c) {
          const double v = mat_at(inst.B, i, c);
          if (v != 0.0) lp.at(r, nx_l + c) = v;
        }
        lp.row_lo[r] = -kInfty;
        lp.row_hi[r] = inst.a[i];
      }
      for (int i = 0; i < inst.m_lower(); ++i, ++r) {
        for (int c = 0; c < nx_l; ++c) {
          const double v = mat_at(inst.C, i, c);
          if (v != 0.0) lp.at(r, c) = v;
        }
        for (int c = 0; c < ny_l; ++c) {
          const double v = mat_at(inst.D, i, c);
          if (v != 0.0) lp.at(r, nx_l + c) = v;
        }
        lp.row_lo[r] = -kInfty;
        lp.row_hi[r] = inst.b[i];
      }
      return milp::solve_lp(lp).status != milp::LpStatus::Infeasible;
    };
  };

  // Value-function binding over x.
  {
    NonlinearityBinding binding;
    binding.name = "phi";
    for (int i = 0; i < nx; ++i) binding.inputs.push_back(x_col[i]);
    binding.output = model.eta_phi_col;
    binding.oracle = make_phi_oracle(inst);
    binding.center_split_only = true;

    double L = 0.0;
    if (inst.lower_box_constrained()) {
      L = inst.has_bilinear() ? lipschitz_phi_box(inst) : 0.0;
    } else {
      L = lipschitz_phi(inst, options.mode);
      if (!inst.hoffman_given) {
        model.warnings.push_back(
            "value-function Lipschitz constant uses the default feasible-set "
            "sensitivity 1; pass a certified constant for a sound bound");
      }
    }
    binding.lipschitz = std::max(L, 1e-12);
    binding.norm.kind = NormSpec::Kind::WeightedOne;
    binding.norm.weights.assign(nx, 1.0);
    if (options.attach_box_filters) {
      std::vector<int> cols;
      for (int i = 0; i < nx; ++i) cols.push_back(i);
      binding.box_filter = feasibility_filter(cols);
    }
    model.phi_binding = static_cast<int>(problem.bindings.size());
    problem.bindings.push_back(std::move(binding));
  }

  // Follower-objective binding over y (joined with x when the bilinear
  // term could not be lifted away).
  {
    NonlinearityBinding binding;
    binding.name = "lower_objective";
    for (int j = 0; j < ny; ++j) binding.inputs.push_back(y_col[j]);
    Matrix Q = inst.G_l;
    std::vector<double> d = f_d;
    if (joint_f) {
      for (int i = 0; i < nx; ++i) binding.inputs.push_back(x_col[i]);
      Q.assign(ny + nx, std::vector<double>(ny + nx, 0.0));
      for (int r = 0; r < ny; ++r) {
        for (int c = 0; c < ny; ++c) Q[r][c] = mat_at(inst.G_l, r, c);
      }
      for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
          const double f = mat_at(inst.F, i, j);
          Q[ny + i][j] += f;
          Q[j][ny + i] += f;
        }
      }
      d.resize(ny + nx, 0.0);
    }
    binding.output = model.eta_f_col;
    binding.oracle = make_quadratic_oracle(Q, d);
    binding.lipschitz = 1.0;
    binding.norm.kind = NormSpec::Kind::WeightedOne;
    binding.norm.weights.assign(binding.inputs.size(), 1.0);
    binding.local_norm_hook = [Q, d](const Box& box) {
      NormSpec norm;
      norm.kind = NormSpec::Kind::WeightedOne;
      norm.weights.assign(box.dim(),
                          std::max(gradient_bound_over_box(Q, d, box), 1e-12));
      return norm;
    };
    Box root = ybox;
    if (joint_f) {
      root.lo.insert(root.lo.end(), inst.x_lo.begin(), inst.x_lo.end());
      root.hi.insert(root.hi.end(), inst.x_hi.begin(), inst.x_hi.end());
    }
    binding.norm = binding.local_norm_hook(root);
    if (options.attach_box_filters) {
      std::vector<int> cols;
      for (int j = 0; j < ny; ++j) cols.push_back(nx + j);
      if (joint_f) {
        for (int i = 0; i < nx; ++i) cols.push_back(i);
      }
      binding.box_filter = feasibility_filter(cols);
    }
    model.f_binding = static_cast<int>(problem.bindings.size());
    problem.bindings.push_back(std::move(binding));
  }

  if (quadratic_upper) {
    NonlinearityBinding binding;
    binding.name = "upper_objective";
    for (int i = 0; i < nx; ++i) binding.inputs.push_back(x_col[i]);
    for (int j = 0; j < ny; ++j) binding.inputs.push_back(y_col[j]);
    binding.output = model.epigraph_col;
    binding.oracle = make_quadratic_oracle(upper_Q, upper_d);
    binding.lipschitz = 1.0;
    binding.norm.kind = NormSpec::Kind::WeightedOne;
    binding.norm.weights.assign(binding.inputs.size(), 1.0);
    const Matrix Q = upper_Q;
    const std::vector<double> d = upper_d;
    binding.local_norm_hook = [Q, d](const Box& box) {
      NormSpec norm;
      norm.kind = NormSpec::Kind::WeightedOne;
      norm.weights.assign(box.dim(),
                          std::max(gradient_bound_over_box(Q, d, box), 1e-12));
      return norm;
    };
    {
      Box zbox;
      zbox.lo = inst.x_lo;
      zbox.hi = inst.x_hi;
      zbox.lo.insert(zbox.lo.end(), inst.y_lo.begin(), inst.y_lo.end());
      zbox.hi.insert(zbox.hi.end(), inst.y_hi.begin(), inst.y_hi.end());
      binding.norm = binding.local_norm_hook(zbox);
    }
    if (options.attach_box_filters) {
      std::vector<int> cols;
      for (int i = 0; i < nx; ++i) cols.push_back(i);
      for (int j = 0; j < ny; ++j) cols.push_back(nx + j);
      binding.box_filter = feasibility_filter(cols);
    }
    model.epigraph_binding = static_cast<int>(problem.bindings.size());
    problem.bindings.push_back(std::move(binding));
  }

  if (ny > 3) {
    model.warnings.push_back(
        "follower dimension above three: the lower-level enumeration stays "
        "exhaustive but has no exactness certificate at this size");
  }

  return model;
}

void register_bilevel_oracles(OracleRegistry& registry) {
  registry.register_factory(
      "bilevel-phi",
      [](const std::string& params) -> std::shared_ptr<const Oracle> {
        return make_phi_oracle(instance_from_json(params));
      });
  registry.register_factory(
      "bilevel-quadratic",
      [](const std::string& params) -> std::shared_ptr<const Oracle> {
        const auto j = nlohmann::json::parse(params);
        Matrix Q;
        if (j.contains("Q")) Q = j.at("Q").get<Matrix>();
        std::vector<double> d;
        if (j.contains("d")) d = j.at("d").get<std::vector<double>>();
        return make_quadratic_oracle(Q, std::move(d));
      });
}

std::string instance_to_json(const BilevelInstance& instance) {
  ordered_json j;
  auto put_matrix = [&](const char* key, const Matrix& m) {
    if (!m.empty()) j[key] = m;
  };
  auto put_vector = [&](const char* key, const std::vector<double>& v) {
    if (!v.empty()) j[key] = v;
  };
  put_matrix("H_u", instance.H_u);
  put_vector("c_u", instance.c_u);
  put_matrix("G_u", instance.G_u);
  put_vector("d_u", instance.d_u);
  put_matrix("A", instance.A);
  put_matrix("B", instance.B);
  put_vector("a", instance.a);
  put_matrix("G_l", instance.G_l);
  put_vector("d_l", instance.d_l);
  put_matrix("C", instance.C);
  put_matrix("D", instance.D);
  put_vector("b", instance.b);
  put_matrix("F", instance.F);
  j["x_lo"] = instance.x_lo;
  j["x_hi"] = instance.x_hi;
  j["y_lo"] = instance.y_lo;
  j["y_hi"] = instance.y_hi;
  if (instance.hoffman_given) j["hoffman"] = instance.hoffman;
  if (instance.reference) j["reference"] = *instance.reference;
  return j.dump();
}

BilevelInstance instance_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  BilevelInstance instance;
  auto get_matrix = [&](const char* key, Matrix& m) {
    if (j.contains(key)) m = j.at(key).get<Matrix>();
  };
  auto get_vector = [&](const char* key, std::vector<double>& v) {
    if (j.contains(key)) v = j.at(key).get<std::vector<double>>();
  };
  get_matrix("H_u", instance.H_u);
  get_vector("c_u", instance.c_u);
  get_matrix("G_u", instance.G_u);
  get_vector("d_u", instance.d_u);
  get_matrix("A", instance.A);
  get_matrix("B", instance.B);
  get_vector("a", instance.a);
  get_matrix("G_l", instance.G_l);
  get_vector("d_l", instance.d_l);
  get_matrix("C", instance.C);
  get_matrix("D", instance.D);
  get_vector("b", instance.b);
  get_matrix("F", instance.F);
  get_vector("x_lo", instance.x_lo);
  get_vector("x_hi", instance.x_hi);
  get_vector("y_lo", instance.y_lo);
  get_vector("y_hi", instance.y_hi);
  if (j.contains("hoffman")) {
    instance.hoffman = j.at("hoffman").get<double>();
    instance.hoffman_given = true;
  }
  if (j.contains("reference")) {
    instance.reference = j.at("reference").get<std::vector<double>>();
  }
  return instance;
}

}  // namespace slr::bilevel
