#include "slr/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <ostream>
#include <queue>

#include "simplex_engine.hpp"
#include "slr/errors.hpp"

namespace slr::milp {

namespace {

struct Node {
  double bound;  // parent LP objective, a valid lower bound for the subtree
  long id;
  std::vector<double> lo, hi;
};

struct NodeOrder {
  // Pop lowest bound first; on equal bounds the newest node wins, so ties
  // dive depth-first toward an incumbent.  Still deterministic.
  bool operator()(const std::pair<double, long>& a,
                  const std::pair<double, long>& b) const {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  }
};

int most_fractional(const std::vector<double>& x,
                    const std::vector<uint8_t>& integral, double int_tol,
                    double* frac_out) {
  int pick = -1;
  double best = int_tol;
  for (size_t j = 0; j < x.size(); ++j) {
    if (!integral[j]) continue;
    const double f = std::fabs(x[j] - std::round(x[j]));
    if (f > best) {
      best = f;
      pick = static_cast<int>(j);
    }
  }
  if (frac_out) *frac_out = best;
  return pick;
}

}  // namespace

MilpSolution solve_milp(const MilpProblem& problem, const MilpConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  MilpSolution out;
  detail::SimplexEngine engine(problem.lp);

  std::deque<Node> arena;
  std::priority_queue<std::pair<double, long>,
                      std::vector<std::pair<double, long>>, NodeOrder>
      open;

  long next_id = 0;
  arena.push_back({-kInf, next_id, problem.lp.col_lo, problem.lp.col_hi});
  open.push({-kInf, next_id});
  ++next_id;

  double incumbent_obj = kInf;
  std::vector<double> incumbent_x;
  double best_open_bound = -kInf;

  while (!open.empty()) {
    if (out.nodes >= config.node_limit) {
      out.status = MilpStatus::NodeLimit;
      break;
    }
    if (elapsed() > config.time_limit_s) {
      out.status = MilpStatus::TimeLimit;
      break;
    }

    const auto [bound, id] = open.top();
    open.pop();
    best_open_bound = std::max(best_open_bound, bound);
    const Node node = arena[size_t(id)];
    arena[size_t(id)].lo.clear();
    arena[size_t(id)].lo.shrink_to_fit();
    arena[size_t(id)].hi.clear();
    arena[size_t(id)].hi.shrink_to_fit();

    if (node.bound >= incumbent_obj - config.abs_gap) continue;

    ++out.nodes;
    LpSolution lp = engine.solve(node.lo, node.hi, /*reuse=*/true);
    out.lp_iterations += lp.iterations;

    if (lp.status == LpStatus::Infeasible) continue;
    if (lp.status == LpStatus::Unbounded) {
      if (!problem.any_integral() && out.nodes == 1) {
        out.status = MilpStatus::Unbounded;
        return out;
      }
      throw NumericalError("branch and bound: unbounded node LP");
    }
    if (lp.objective >= incumbent_obj - config.abs_gap) continue;

    double frac = 0.0;
    const int branch_col =
        most_fractional(lp.x, problem.integral, config.int_tol, &frac);

    if (branch_col < 0) {
      if (lp.objective < incumbent_obj - 1e-12) {
        incumbent_obj = lp.objective;
        incumbent_x = lp.x;
        out.has_incumbent = true;
      }
      continue;
    }

    const double v = lp.x[branch_col];
    const double fl = std::floor(v);

    // The nearer side gets the larger id so bound ties dive toward it.
    const bool down_first = v - fl > 0.5;
    for (int child = 0; child < 2; ++child) {
      const bool down = (child == 0) == down_first;
      Node next{lp.objective, next_id, node.lo, node.hi};
      if (down) {
        next.hi[branch_col] = fl;
      } else {
        next.lo[branch_col] = fl + 1.0;
      }
      if (next.lo[branch_col] <= next.hi[branch_col] + 1e-12) {
        arena.push_back(next);
        open.push({next.bound, next.id});
        ++next_id;
      }
    }
  }

  if (open.empty()) {
    if (out.has_incumbent) {
      out.status = MilpStatus::Optimal;
      out.objective = incumbent_obj;
      out.bound = incumbent_obj;
      out.x = incumbent_x;
    } else {
      out.status = MilpStatus::Infeasible;
      out.bound = kInf;
    }
    return out;
  }

  // Stopped on a limit: report the best proven bound and any incumbent.
  double open_min = kInf;
  while (!open.empty()) {
    open_min = std::min(open_min, open.top().first);
    open.pop();
  }
  out.bound = std::max(best_open_bound, open_min == kInf ? best_open_bound
                                                         : open_min);
  if (out.has_incumbent) {
    out.objective = incumbent_obj;
    out.x = incumbent_x;
  }
  return out;
}

void write_lp_format(const MilpProblem& problem, std::ostream& os,
                     const std::vector<std::string>* col_names) {
  const LpProblem& lp = problem.lp;
  auto name = [&](int j) {
    if (col_names && j < static_cast<int>(col_names->size()))
      return (*col_names)[j];
    return "x" + std::to_string(j);
  };
  auto term = [&](double c, int j, bool first) {
    std::string s;
    if (c >= 0.0)
      s += first ? "" : " + ";
    else
      s += first ? "-" : " - ";
    s += std::to_string(std::fabs(c)) + " " + name(j);
    return s;
  };

  os << "Minimize\n obj:";
  bool first = true;
  for (int j = 0; j < lp.ncols; ++j) {
    if (lp.obj[j] == 0.0) continue;
    os << " " << term(lp.obj[j], j, first);
    first = false;
  }
  if (first) os << " 0 " << name(0);
  os << "\nSubject To\n";
  for (int i = 0; i < lp.nrows; ++i) {
    std::string body;
    bool row_first = true;
    for (int j = 0; j < lp.ncols; ++j) {
      const double c = lp.get(i, j);
      if (c == 0.0) continue;
      body += " " + term(c, j, row_first);
      row_first = false;
    }
    if (row_first) body = " 0 " + name(0);
    const bool lo_fin = std::isfinite(lp.row_lo[i]);
    const bool hi_fin = std::isfinite(lp.row_hi[i]);
    if (lo_fin && hi_fin && lp.row_lo[i] == lp.row_hi[i]) {
      os << " r" << i << ":" << body << " = " << lp.row_lo[i] << "\n";
    } else {
      if (lo_fin)
        os << " r" << i << "lo:" << body << " >= " << lp.row_lo[i] << "\n";
      if (hi_fin)
        os << " r" << i << "hi:" << body << " <= " << lp.row_hi[i] << "\n";
    }
  }
  os << "Bounds\n";
  for (int j = 0; j < lp.ncols; ++j)
    os << " " << lp.col_lo[j] << " <= " << name(j) << " <= " << lp.col_hi[j]
       << "\n";
  std::string generals, binaries;
  for (int j = 0; j < lp.ncols; ++j) {
    if (!problem.integral[j]) continue;
    if (lp.col_lo[j] >= 0.0 && lp.col_hi[j] <= 1.0)
      binaries += " " + name(j);
    else
      generals += " " + name(j);
  }
  if (!binaries.empty()) os << "Binaries\n" << binaries << "\n";
  if (!generals.empty()) os << "Generals\n" << generals << "\n";
  os << "End\n";
}

}  // namespace slr::milp
