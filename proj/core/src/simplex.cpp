#include "simplex_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "slr/errors.hpp"

namespace slr::milp {

void LpProblem::resize(int rows, int cols) {
  nrows = rows;
  ncols = cols;
  obj.assign(cols, 0.0);
  col_lo.assign(cols, 0.0);
  col_hi.assign(cols, 0.0);
  row_lo.assign(rows, -kInf);
  row_hi.assign(rows, kInf);
  a.assign(size_t(rows) * cols, 0.0);
}

namespace detail {

namespace {
constexpr double kDualTol = 1e-9;
constexpr double kPivotFloor = 1e-10;
constexpr double kDirTol = 1e-11;
constexpr double kDegenStep = 1e-11;
constexpr int kDegenLimit = 64;
constexpr long kRefactorEvery = 256;
}  // namespace

SimplexEngine::SimplexEngine(const LpProblem& p) : p_(p) {
  m_ = p.nrows;
  n_ = p.ncols;
  total_ = n_ + m_;
  lo_.resize(total_);
  hi_.resize(total_);
  x_.assign(total_, 0.0);
  where_.assign(total_, kAtLower);
  basic_.resize(m_);
  binv_.assign(size_t(m_) * m_, 0.0);
  y_.resize(m_);
  w_.resize(m_);
  colbuf_.resize(m_);
  infeas_.assign(total_, 0);
}

double SimplexEngine::bound_tol(double bound) const {
  return 1e-9 * (1.0 + std::fabs(bound));
}

void SimplexEngine::load_column(int j, double* out) const {
  if (j < n_) {
    std::memcpy(out, p_.a.data() + size_t(j) * m_, sizeof(double) * m_);
  } else {
    std::fill(out, out + m_, 0.0);
    out[j - n_] = -1.0;
  }
}

void SimplexEngine::ftran(const double* col, double* out) const {
  for (int k = 0; k < m_; ++k) {
    const double* row = binv_.data() + size_t(k) * m_;
    double acc = 0.0;
    for (int i = 0; i < m_; ++i) acc += row[i] * col[i];
    out[k] = acc;
  }
}

void SimplexEngine::cold_start() {
  for (int j = 0; j < n_; ++j) {
    if (std::isfinite(lo_[j])) {
      where_[j] = kAtLower;
      x_[j] = lo_[j];
    } else if (std::isfinite(hi_[j])) {
      where_[j] = kAtUpper;
      x_[j] = hi_[j];
    } else {
      where_[j] = kFree;
      x_[j] = 0.0;
    }
  }
  // All logicals basic: B = -I, so B^{-1} = -I without factorization.
  std::fill(binv_.begin(), binv_.end(), 0.0);
  for (int i = 0; i < m_; ++i) {
    basic_[i] = n_ + i;
    where_[n_ + i] = i;
    binv_[size_t(i) * m_ + i] = -1.0;
  }
  compute_basic_values();
  pivots_since_refactor_ = 0;
  state_valid_ = true;
}

bool SimplexEngine::install_basis(const Basis& basis) {
  if (static_cast<int>(basis.basic.size()) != m_ ||
      static_cast<int>(basis.at_upper.size()) != total_)
    return false;
  std::vector<char> seen(total_, 0);
  for (int idx : basis.basic) {
    if (idx < 0 || idx >= total_ || seen[idx]) return false;
    seen[idx] = 1;
  }
  for (int j = 0; j < total_; ++j) {
    if (seen[j]) continue;
    if (basis.at_upper[j] && std::isfinite(hi_[j])) {
      where_[j] = kAtUpper;
      x_[j] = hi_[j];
    } else if (std::isfinite(lo_[j])) {
      where_[j] = kAtLower;
      x_[j] = lo_[j];
    } else if (std::isfinite(hi_[j])) {
      where_[j] = kAtUpper;
      x_[j] = hi_[j];
    } else {
      where_[j] = kFree;
      x_[j] = 0.0;
    }
  }
  basic_ = basis.basic;
  for (int k = 0; k < m_; ++k) where_[basic_[k]] = k;
  if (!refactor()) return false;
  compute_basic_values();
  state_valid_ = true;
  return true;
}

// Rebuilds binv_ by Gauss-Jordan elimination with partial pivoting.
bool SimplexEngine::refactor() {
  std::vector<double> b(size_t(m_) * m_, 0.0);
  for (int k = 0; k < m_; ++k) {
    load_column(basic_[k], colbuf_.data());
    for (int r = 0; r < m_; ++r) b[size_t(r) * m_ + k] = colbuf_[r];
  }
  std::vector<double> inv(size_t(m_) * m_, 0.0);
  for (int i = 0; i < m_; ++i) inv[size_t(i) * m_ + i] = 1.0;

  for (int c = 0; c < m_; ++c) {
    int piv = -1;
    double best = 1e-12;
    for (int r = c; r < m_; ++r) {
      const double v = std::fabs(b[size_t(r) * m_ + c]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (piv < 0) return false;
    if (piv != c) {
      for (int j = 0; j < m_; ++j) {
        std::swap(b[size_t(piv) * m_ + j], b[size_t(c) * m_ + j]);
        std::swap(inv[size_t(piv) * m_ + j], inv[size_t(c) * m_ + j]);
      }
    }
    const double d = b[size_t(c) * m_ + c];
    for (int j = 0; j < m_; ++j) {
      b[size_t(c) * m_ + j] /= d;
      inv[size_t(c) * m_ + j] /= d;
    }
    for (int r = 0; r < m_; ++r) {
      if (r == c) continue;
      const double f = b[size_t(r) * m_ + c];
      if (f == 0.0) continue;
      for (int j = 0; j < m_; ++j) {
        b[size_t(r) * m_ + j] -= f * b[size_t(c) * m_ + j];
        inv[size_t(r) * m_ + j] -= f * inv[size_t(c) * m_ + j];
      }
    }
  }
  binv_ = std::move(inv);
  pivots_since_refactor_ = 0;
  return true;
}

// x_B = -B^{-1} * (sum of nonbasic columns times their values).
void SimplexEngine::compute_basic_values() {
  std::vector<double> acc(m_, 0.0);
  for (int j = 0; j < n_; ++j) {
    if (where_[j] >= 0 || x_[j] == 0.0) continue;
    const double* col = p_.a.data() + size_t(j) * m_;
    const double v = x_[j];
    for (int r = 0; r < m_; ++r) acc[r] += col[r] * v;
  }
  for (int i = 0; i < m_; ++i) {
    const int j = n_ + i;
    if (where_[j] < 0 && x_[j] != 0.0) acc[i] -= x_[j];
  }
  ftran(acc.data(), w_.data());
  for (int k = 0; k < m_; ++k) x_[basic_[k]] = -w_[k];
}

int SimplexEngine::classify_infeasible() {
  int count = 0;
  for (int k = 0; k < m_; ++k) {
    const int j = basic_[k];
    signed char f = 0;
    if (x_[j] < lo_[j] - bound_tol(lo_[j]))
      f = -1;
    else if (x_[j] > hi_[j] + bound_tol(hi_[j]))
      f = 1;
    infeas_[j] = f;
    if (f != 0) ++count;
  }
  return count;
}

// y = c_B^T B^{-1}, where the active costs are the phase-1 infeasibility
// signs or the real objective.
void SimplexEngine::compute_duals(bool phase_one) {
  std::fill(y_.begin(), y_.end(), 0.0);
  for (int k = 0; k < m_; ++k) {
    const int j = basic_[k];
    double c;
    if (phase_one)
      c = infeas_[j] == 0 ? 0.0 : (infeas_[j] < 0 ? -1.0 : 1.0);
    else
      c = j < n_ ? p_.obj[j] : 0.0;
    if (c == 0.0) continue;
    const double* row = binv_.data() + size_t(k) * m_;
    for (int i = 0; i < m_; ++i) y_[i] += c * row[i];
  }
}

// Chooses the entering variable.  Dantzig pricing (largest violation of
// optimality, lowest index on ties) or Bland (lowest eligible index).
int SimplexEngine::price(bool phase_one, bool bland, double* d_out,
                         int* sigma_out) {
  double cmax = 1.0;
  if (!phase_one)
    for (int j = 0; j < n_; ++j) cmax = std::max(cmax, std::fabs(p_.obj[j]));
  const double tol = kDualTol * cmax;

  int best = -1, best_sigma = 0;
  double best_score = tol, best_d = 0.0;
  for (int j = 0; j < total_; ++j) {
    if (where_[j] >= 0) continue;
    double d;
    if (j < n_) {
      d = phase_one ? 0.0 : p_.obj[j];
      const double* col = p_.a.data() + size_t(j) * m_;
      double dot = 0.0;
      for (int i = 0; i < m_; ++i) dot += y_[i] * col[i];
      d -= dot;
    } else {
      d = y_[j - n_];
    }
    int sigma = 0;
    if (where_[j] == kAtLower && d < -tol)
      sigma = 1;
    else if (where_[j] == kAtUpper && d > tol)
      sigma = -1;
    else if (where_[j] == kFree && std::fabs(d) > tol)
      sigma = d > 0 ? -1 : 1;
    if (sigma == 0) continue;
    if (bland) {
      *d_out = d;
      *sigma_out = sigma;
      return j;
    }
    const double score = std::fabs(d);
    if (score > best_score) {
      best_score = score;
      best = j;
      best_d = d;
      best_sigma = sigma;
    }
  }
  if (best >= 0) {
    *d_out = best_d;
    *sigma_out = best_sigma;
  }
  return best;
}

// One ratio-test-and-pivot step.  Returns false when the step is unbounded.
bool SimplexEngine::step(int entering, double /*d_enter*/, int sigma,
                         bool bland, bool* progressed) {
  load_column(entering, colbuf_.data());
  ftran(colbuf_.data(), w_.data());

  // Basic variables move at rate g = -sigma * w per unit of entering step.
  double t_limit = kInf;
  int leave_pos = -1;
  int leave_target = 0;  // -1 bound below, +1 bound above
  double best_pivot = 0.0;

  auto consider = [&](int pos, double t, int target, double pivot_mag) {
    if (t < -1e-12) t = 0.0;
    const double slack = 1e-9 * (1.0 + std::fabs(t_limit));
    if (t < t_limit - slack) {
      t_limit = t;
      leave_pos = pos;
      leave_target = target;
      best_pivot = pivot_mag;
    } else if (t <= t_limit + slack && pos >= 0) {
      // Tie break.  Under Bland's rule take the lowest variable index so
      // the anti-cycling argument holds; otherwise prefer the numerically
      // largest pivot, then the lowest index so every run matches.
      bool take;
      if (leave_pos < 0) {
        take = true;
      } else if (bland) {
        take = basic_[pos] < basic_[leave_pos];
      } else {
        take = pivot_mag > best_pivot * (1.0 + 1e-9) ||
               (std::fabs(pivot_mag - best_pivot) <=
                    1e-12 * (1.0 + best_pivot) &&
                basic_[pos] < basic_[leave_pos]);
      }
      if (take) {
        t_limit = std::min(t_limit, t);
        leave_pos = pos;
        leave_target = target;
        best_pivot = pivot_mag;
      }
    }
  };

  for (int k = 0; k < m_; ++k) {
    const double g = -sigma * w_[k];
    if (std::fabs(g) <= kDirTol) continue;
    const int j = basic_[k];
    const double v = x_[j];
    if (g > 0.0) {
      if (infeas_[j] < 0) {
        // Below its lower bound and rising: blocks on regaining it.
        consider(k, (lo_[j] - v) / g, -1, std::fabs(g));
      } else if (infeas_[j] > 0) {
        // Above its upper bound and rising further: no block.
      } else if (std::isfinite(hi_[j])) {
        consider(k, (hi_[j] - v) / g, 1, std::fabs(g));
      }
    } else {
      if (infeas_[j] > 0) {
        consider(k, (hi_[j] - v) / g, 1, std::fabs(g));
      } else if (infeas_[j] < 0) {
        // Below its lower bound and falling further: no block.
      } else if (std::isfinite(lo_[j])) {
        consider(k, (lo_[j] - v) / g, -1, std::fabs(g));
      }
    }
  }

  // The entering variable may also stop at its own opposite bound.
  double t_flip = kInf;
  if (std::isfinite(lo_[entering]) && std::isfinite(hi_[entering]))
    t_flip = hi_[entering] - lo_[entering];
  const bool flip = t_flip <= t_limit;
  const double t = flip ? t_flip : t_limit;

  if (!std::isfinite(t)) return false;

  *progressed = t > kDegenStep;

  // Move the point.
  for (int k = 0; k < m_; ++k) {
    const double g = -sigma * w_[k];
    if (g != 0.0) x_[basic_[k]] += g * t;
  }
  x_[entering] += sigma * t;

  if (flip) {
    where_[entering] = where_[entering] == kAtLower ? kAtUpper : kAtLower;
    x_[entering] = where_[entering] == kAtLower ? lo_[entering] : hi_[entering];
    return true;
  }

  const int leave = basic_[leave_pos];
  const double pivot = w_[leave_pos];
  if (std::fabs(pivot) < kPivotFloor) {
    // Signal the caller to refactorize and retry by reporting no progress
    // through a pivot exception path.
    throw NumericalError("simplex: pivot below  1e-10");
  }

  // Rank-one update of the basis inverse.
  double* prow = binv_.data() + size_t(leave_pos) * m_;
  for (int i = 0; i < m_; ++i) prow[i] /= pivot;
  for (int k = 0; k < m_; ++k) {
    if (k == leave_pos) continue;
    const double f = w_[k];
    if (f == 0.0) continue;
    double* row = binv_.data() + size_t(k) * m_;
    for (int i = 0; i < m_; ++i) row[i] -= f * prow[i];
  }

  basic_[leave_pos] = entering;
  where_[entering] = leave_pos;
  where_[leave] = leave_target < 0 ? kAtLower : kAtUpper;
  x_[leave] = leave_target < 0 ? lo_[leave] : hi_[leave];
  ++pivots_since_refactor_;
  return true;
}

LpSolution SimplexEngine::solve(const std::vector<double>& col_lo,
                                const std::vector<double>& col_hi, bool reuse,
                                const Basis* warm) {
  for (int j = 0; j < n_; ++j) {
    if (!std::isfinite(col_lo[j]) || !std::isfinite(col_hi[j]))
      throw std::invalid_argument("solve_lp: column bounds must be finite");
    lo_[j] = col_lo[j];
    hi_[j] = col_hi[j];
  }
  for (int i = 0; i < m_; ++i) {
    lo_[n_ + i] = p_.row_lo[i];
    hi_[n_ + i] = p_.row_hi[i];
  }

  LpSolution sol;
  sol.x.assign(n_, 0.0);
  sol.row_activity.assign(m_, 0.0);

  if (m_ == 0) {
    // Bounds-only problem: each column sits at the bound its cost prefers.
    sol.status = LpStatus::Optimal;
    for (int j = 0; j < n_; ++j) {
      if (lo_[j] > hi_[j] + bound_tol(hi_[j])) {
        sol.status = LpStatus::Infeasible;
        return sol;
      }
      sol.x[j] = p_.obj[j] >= 0.0 ? lo_[j] : hi_[j];
      sol.objective += p_.obj[j] * sol.x[j];
    }
    return sol;
  }

  for (int j = 0; j < total_; ++j) {
    if (lo_[j] > hi_[j] + bound_tol(hi_[j])) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
  }

  bool started = false;
  if (warm != nullptr) started = install_basis(*warm);
  if (!started && reuse && state_valid_) {
    // Keep basis and inverse; re-snap nonbasic variables to the possibly
    // changed bounds and recompute the basic values.
    for (int j = 0; j < total_; ++j) {
      if (where_[j] >= 0) continue;
      if (where_[j] == kAtLower && std::isfinite(lo_[j]))
        x_[j] = lo_[j];
      else if (where_[j] == kAtUpper && std::isfinite(hi_[j]))
        x_[j] = hi_[j];
      else if (std::isfinite(lo_[j])) {
        where_[j] = kAtLower;
        x_[j] = lo_[j];
      } else if (std::isfinite(hi_[j])) {
        where_[j] = kAtUpper;
        x_[j] = hi_[j];
      } else {
        where_[j] = kFree;
        x_[j] = 0.0;
      }
    }
    compute_basic_values();
    started = true;
  }
  if (!started) cold_start();

  const long iter_cap = 2000 + 60L * total_;
  int degen_run = 0;
  bool bland = false;
  bool refactor_retry = false;

  for (long iter = 0;; ++iter) {
    if (iter > iter_cap) {
      state_valid_ = false;
      throw NumericalError("simplex: iteration cap hit, likely cycling");
    }
    if (pivots_since_refactor_ >= kRefactorEvery) {
      if (!refactor()) {
        state_valid_ = false;
        throw NumericalError("simplex: basis went singular");
      }
      compute_basic_values();
    }

    const int bad = classify_infeasible();
    const bool phase_one = bad > 0;
    compute_duals(phase_one);
    double d = 0.0;
    int sigma = 0;
    const int entering = price(phase_one, bland, &d, &sigma);
    ++iterations_total_;
    ++sol.iterations;

    if (entering < 0) {
      if (phase_one) {
        sol.status = LpStatus::Infeasible;
      } else {
        sol.status = LpStatus::Optimal;
      }
      break;
    }

    bool progressed = false;
    bool ok;
    try {
      ok = step(entering, d, sigma, bland, &progressed);
    } catch (const NumericalError&) {
      if (refactor_retry) {
        state_valid_ = false;
        throw;
      }
      refactor_retry = true;
      if (!refactor()) {
        state_valid_ = false;
        throw NumericalError("simplex: basis went singular");
      }
      compute_basic_values();
      continue;
    }
    if (!ok) {
      if (phase_one) {
        if (refactor_retry) {
          state_valid_ = false;
          throw NumericalError("simplex: unbounded infeasibility direction");
        }
        refactor_retry = true;
        if (!refactor()) {
          state_valid_ = false;
          throw NumericalError("simplex: basis went singular");
        }
        compute_basic_values();
        continue;
      }
      sol.status = LpStatus::Unbounded;
      break;
    }
    refactor_retry = false;
    if (progressed) {
      degen_run = 0;
      bland = false;
    } else if (++degen_run > kDegenLimit) {
      bland = true;
    }
  }

  for (int j = 0; j < n_; ++j) sol.x[j] = x_[j];
  double obj = 0.0;
  for (int j = 0; j < n_; ++j) obj += p_.obj[j] * sol.x[j];
  sol.objective = obj;
  for (int i = 0; i < m_; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n_; ++j) acc += p_.get(i, j) * sol.x[j];
    sol.row_activity[i] = acc;
  }
  sol.basis.basic = basic_;
  sol.basis.at_upper.assign(total_, 0);
  for (int j = 0; j < total_; ++j)
    if (where_[j] == kAtUpper) sol.basis.at_upper[j] = 1;
  return sol;
}

}  // namespace detail

bool MilpProblem::any_integral() const {
  for (uint8_t f : integral)
    if (f) return true;
  return false;
}

LpSolution solve_lp(const LpProblem& problem, const Basis* warm) {
  detail::SimplexEngine engine(problem);
  return engine.solve(problem.col_lo, problem.col_hi, false, warm);
}

}  // namespace slr::milp
