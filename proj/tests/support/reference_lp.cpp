#include "reference_lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace refsolve {
namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;

struct Tableau {
  int nrows = 0;
  int ncols = 0;  // structural + slack + artificial, rhs stored separately
  std::vector<std::vector<double>> row;
  std::vector<double> rhs;
  std::vector<double> cost;  // reduced cost per column
  double neg_obj = 0.0;      // running -(objective)
  std::vector<int> basis;

  void pivot(int r, int c) {
    const double piv = row[r][c];
    for (double& v : row[r]) v /= piv;
    rhs[r] /= piv;
    for (int i = 0; i < nrows; ++i) {
      if (i == r) continue;
      const double f = row[i][c];
      if (f == 0.0) continue;
      for (int j = 0; j < ncols; ++j) row[i][j] -= f * row[r][j];
      row[i][c] = 0.0;
      rhs[i] -= f * rhs[r];
    }
    const double cf = cost[c];
    if (cf != 0.0) {
      for (int j = 0; j < ncols; ++j) cost[j] -= cf * row[r][j];
      cost[c] = 0.0;
      neg_obj -= cf * rhs[r];
    }
    basis[r] = c;
  }

  // Bland's rule: smallest eligible entering index, leaving row breaks ratio
  // ties by smallest basic column.  Never cycles.
  bool bland_iterate(int max_entering) {
    for (long iter = 0; iter < 200000; ++iter) {
      int entering = -1;
      for (int j = 0; j < max_entering; ++j) {
        if (cost[j] < -kCostTol) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return true;
      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int r = 0; r < nrows; ++r) {
        if (row[r][entering] <= kPivotTol) continue;
        const double ratio = rhs[r] / row[r][entering];
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 &&
             (leave < 0 || basis[r] < basis[leave]))) {
          best_ratio = ratio;
          leave = r;
        }
      }
      if (leave < 0) {
        throw std::runtime_error("reference simplex: unbounded direction");
      }
      pivot(leave, entering);
    }
    throw std::runtime_error("reference simplex: iteration cap");
  }
};

}  // namespace

Result tableau_simplex(const slr::milp::LpProblem& p) {
  const int n = p.ncols;
  // Shift to u = x - lo >= 0 and collect every constraint as g_row * u <= g.
  std::vector<std::vector<double>> g_rows;
  std::vector<double> g_rhs;
  std::vector<double> width(n);
  for (int j = 0; j < n; ++j) width[j] = p.col_hi[j] - p.col_lo[j];
  for (int r = 0; r < p.nrows; ++r) {
    double base = 0.0;
    std::vector<double> coef(n);
    for (int j = 0; j < n; ++j) {
      coef[j] = p.get(r, j);
      base += coef[j] * p.col_lo[j];
    }
    if (std::isfinite(p.row_hi[r])) {
      g_rows.push_back(coef);
      g_rhs.push_back(p.row_hi[r] - base);
    }
    if (std::isfinite(p.row_lo[r])) {
      std::vector<double> neg(n);
      for (int j = 0; j < n; ++j) neg[j] = -coef[j];
      g_rows.push_back(neg);
      g_rhs.push_back(base - p.row_lo[r]);
    }
  }
  for (int j = 0; j < n; ++j) {
    std::vector<double> coef(n, 0.0);
    coef[j] = 1.0;
    g_rows.push_back(coef);
    g_rhs.push_back(width[j]);
  }

  const int m = static_cast<int>(g_rows.size());
  int n_art = 0;
  for (int r = 0; r < m; ++r) {
    if (g_rhs[r] < 0.0) ++n_art;
  }
  Tableau t;
  t.nrows = m;
  t.ncols = n + m + n_art;
  t.row.assign(m, std::vector<double>(t.ncols, 0.0));
  t.rhs.assign(m, 0.0);
  t.basis.assign(m, -1);
  int art = n + m;
  for (int r = 0; r < m; ++r) {
    const double sign = g_rhs[r] < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) t.row[r][j] = sign * g_rows[r][j];
    t.row[r][n + r] = sign;
    t.rhs[r] = sign * g_rhs[r];
    if (sign < 0.0) {
      t.row[r][art] = 1.0;
      t.basis[r] = art;
      ++art;
    } else {
      t.basis[r] = n + r;
    }
  }

  Result out;
  if (n_art > 0) {
    t.cost.assign(t.ncols, 0.0);
    for (int j = n + m; j < t.ncols; ++j) t.cost[j] = 1.0;
    t.neg_obj = 0.0;
    for (int r = 0; r < m; ++r) {
      if (t.basis[r] < n + m) continue;
      for (int j = 0; j < t.ncols; ++j) t.cost[j] -= t.row[r][j];
      t.neg_obj -= t.rhs[r];
    }
    t.bland_iterate(t.ncols);
    if (-t.neg_obj > kFeasTol) {
      out.status = Status::Infeasible;
      return out;
    }
    // Pivot leftover artificials out; a row with no structural or slack
    // entry is redundant and gets dropped.
    for (int r = 0; r < t.nrows; ++r) {
      if (t.basis[r] < n + m) continue;
      int col = -1;
      for (int j = 0; j < n + m; ++j) {
        if (std::abs(t.row[r][j]) > kPivotTol) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        t.pivot(r, col);
      } else {
        t.row.erase(t.row.begin() + r);
        t.rhs.erase(t.rhs.begin() + r);
        t.basis.erase(t.basis.begin() + r);
        --t.nrows;
        --r;
      }
    }
  }

  t.cost.assign(t.ncols, 0.0);
  for (int j = 0; j < n; ++j) t.cost[j] = p.obj[j];
  t.neg_obj = 0.0;
  for (int r = 0; r < t.nrows; ++r) {
    const double cb = t.cost[t.basis[r]];
    if (cb == 0.0) continue;
    for (int j = 0; j < t.ncols; ++j) t.cost[j] -= cb * t.row[r][j];
    t.neg_obj -= cb * t.rhs[r];
  }
  t.bland_iterate(n + m);

  std::vector<double> u(n, 0.0);
  for (int r = 0; r < t.nrows; ++r) {
    if (t.basis[r] < n) u[t.basis[r]] = t.rhs[r];
  }
  out.status = Status::Optimal;
  out.x.resize(n);
  out.objective = 0.0;
  for (int j = 0; j < n; ++j) {
    out.x[j] = p.col_lo[j] + u[j];
    out.objective += p.obj[j] * out.x[j];
  }
  return out;
}

namespace {

bool solve_square(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>* x) {
  const int n = static_cast<int>(b.size());
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i) {
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    }
    if (std::abs(a[piv][k]) < 1e-9) return false;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (int i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  x->assign(n, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a[i][j] * (*x)[j];
    (*x)[i] = s / a[i][i];
  }
  return true;
}

bool point_feasible(const slr::milp::LpProblem& p,
                    const std::vector<double>& x) {
  for (int j = 0; j < p.ncols; ++j) {
    if (x[j] < p.col_lo[j] - kFeasTol || x[j] > p.col_hi[j] + kFeasTol) {
      return false;
    }
  }
  for (int r = 0; r < p.nrows; ++r) {
    double act = 0.0;
    for (int j = 0; j < p.ncols; ++j) act += p.get(r, j) * x[j];
    if (std::isfinite(p.row_lo[r]) && act < p.row_lo[r] - kFeasTol) {
      return false;
    }
    if (std::isfinite(p.row_hi[r]) && act > p.row_hi[r] + kFeasTol) {
      return false;
    }
  }
  return true;
}

}  // namespace

Result vertex_enumeration(const slr::milp::LpProblem& p) {
  const int n = p.ncols;
  struct Plane {
    std::vector<double> normal;
    double rhs;
  };
  std::vector<Plane> planes;
  for (int r = 0; r < p.nrows; ++r) {
    std::vector<double> coef(n);
    for (int j = 0; j < n; ++j) coef[j] = p.get(r, j);
    if (std::isfinite(p.row_lo[r])) planes.push_back({coef, p.row_lo[r]});
    if (std::isfinite(p.row_hi[r])) planes.push_back({coef, p.row_hi[r]});
  }
  for (int j = 0; j < n; ++j) {
    std::vector<double> coef(n, 0.0);
    coef[j] = 1.0;
    planes.push_back({coef, p.col_lo[j]});
    if (p.col_hi[j] > p.col_lo[j]) planes.push_back({coef, p.col_hi[j]});
  }

  Result out;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(n);
  const int total = static_cast<int>(planes.size());
  if (total < n) return out;
  for (int i = 0; i < n; ++i) pick[i] = i;
  while (true) {
    std::vector<std::vector<double>> a(n);
    std::vector<double> b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = planes[pick[i]].normal;
      b[i] = planes[pick[i]].rhs;
    }
    std::vector<double> x;
    if (solve_square(a, b, &x) && point_feasible(p, x)) {
      double obj = 0.0;
      for (int j = 0; j < n; ++j) obj += p.obj[j] * x[j];
      if (obj < best - 1e-12) {
        best = obj;
        out.x = x;
      }
    }
    int i = n - 1;
    while (i >= 0 && pick[i] == total - n + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int k = i + 1; k < n; ++k) pick[k] = pick[k - 1] + 1;
  }
  if (!out.x.empty()) {
    out.status = Status::Optimal;
    out.objective = best;
  }
  return out;
}

Result enumerate_milp(const slr::milp::MilpProblem& p) {
  std::vector<int> cols;
  std::vector<long> lo, hi;
  long combos = 1;
  for (int j = 0; j < p.lp.ncols; ++j) {
    if (!p.integral[j]) continue;
    cols.push_back(j);
    lo.push_back(std::lround(std::ceil(p.lp.col_lo[j] - 1e-9)));
    hi.push_back(std::lround(std::floor(p.lp.col_hi[j] + 1e-9)));
    if (lo.back() > hi.back()) {
      return {};
    }
    combos *= hi.back() - lo.back() + 1;
    if (combos > 5'000'000) {
      throw std::runtime_error("enumerate_milp: grid too large");
    }
  }

  Result best;
  std::vector<long> v(lo);
  while (true) {
    slr::milp::LpProblem fixed = p.lp;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      fixed.col_lo[cols[i]] = static_cast<double>(v[i]);
      fixed.col_hi[cols[i]] = static_cast<double>(v[i]);
    }
    Result r = tableau_simplex(fixed);
    if (r.status == Status::Optimal &&
        (best.status == Status::Infeasible ||
         r.objective < best.objective - 1e-12)) {
      best = r;
    }
    std::size_t i = 0;
    for (; i < cols.size(); ++i) {
      if (v[i] < hi[i]) {
        ++v[i];
        break;
      }
      v[i] = lo[i];
    }
    if (i == cols.size()) break;
  }
  return best;
}

}  // namespace refsolve
