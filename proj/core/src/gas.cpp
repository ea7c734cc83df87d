#include "slr/gas.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "slr/errors.hpp"

namespace slr::gas {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBar = 1e5;  // Pa per bar

using ordered_json = nlohmann::ordered_json;

}  // namespace

double GasConstants::alpha() const {
  const double p_crit_pa = p_crit_bar * kBar;
  return 0.257 / p_crit_pa - 0.533 * T_crit / (p_crit_pa * T);
}

double PipeParams::area() const { return kPi * diameter_m * diameter_m / 4.0; }

PipeFlow::PipeFlow(PipeParams pipe, GasConstants constants)
    : pipe_(pipe), constants_(constants), alpha_(constants.alpha()) {
  if (!(pipe_.diameter_m > 0.0) || !(pipe_.length_m > 0.0) ||
      !(pipe_.friction > 0.0)) {
    throw ValidationError("PipeFlow: length, diameter, friction must be positive");
  }
  if (!(alpha_ < 0.0)) {
    throw ValidationError(
        "PipeFlow: compressibility slope must be negative for the linear model");
  }
  if (!(constants_.R_s > 0.0) || !(constants_.T > 0.0)) {
    throw ValidationError("PipeFlow: gas constant and temperature must be positive");
  }
}

double PipeFlow::admissible_lo(double q_flux) const {
  return std::fabs(q_flux) * std::sqrt(constants_.R_s * constants_.T);
}

double PipeFlow::admissible_hi() const { return -1.0 / alpha_; }

double PipeFlow::potential(double p_pa, double q_flux) const {
  const double rt = constants_.R_s * constants_.T;
  const double q2rt = q_flux * q_flux * rt;
  double value = p_pa / alpha_ +
                 (q2rt - 1.0 / (alpha_ * alpha_)) * std::log1p(alpha_ * p_pa);
  if (q_flux != 0.0) value -= q2rt * std::log(p_pa);
  return value;
}

double PipeFlow::potential_slope(double p_pa, double q_flux) const {
  const double rt = constants_.R_s * constants_.T;
  return (p_pa * p_pa - q_flux * q_flux * rt) /
         (p_pa * (1.0 + alpha_ * p_pa));
}

double PipeFlow::newton_solve(double target, double q_flux, double lo,
                              double hi, double start, double scale) const {
  const double tol = 1e-10 * std::fabs(scale) + 1e-12;
  double a = lo, b = hi;
  double fa = potential(a, q_flux) - target;
  double fb = potential(b, q_flux) - target;
  if (fa > tol) {
    throw InfeasibleRegionError(
        "gas pipe: outlet pressure leaves the admissible window (low side)");
  }
  if (fb < -tol) {
    throw InfeasibleRegionError(
        "gas pipe: outlet pressure leaves the admissible window (high side)");
  }
  double p = std::clamp(start, a, b);
  for (int it = 0; it < 200; ++it) {
    const double f = potential(p, q_flux) - target;
    if (std::fabs(f) <= tol) return p;
    if (f > 0.0) {
      b = p;
    } else {
      a = p;
    }
    const double slope = potential_slope(p, q_flux);
    double next = slope > 0.0 ? p - f / slope : a;
    if (!(next > a) || !(next < b)) next = 0.5 * (a + b);
    if (b - a <= 1e-15 * b) return 0.5 * (a + b);
    p = next;
  }
  throw NumericalError("gas pipe: pressure solve did not converge");
}

double PipeFlow::outlet_pressure(double p_in_pa, double q_flux,
                                 double x_m) const {
  const double lo_raw = admissible_lo(q_flux);
  const double hi_raw = admissible_hi();
  const double lo = std::max(lo_raw * (1.0 + 1e-9), hi_raw * 1e-12);
  const double hi = hi_raw * (1.0 - 1e-9);
  if (!(p_in_pa > lo_raw) || !(p_in_pa < hi_raw)) {
    throw InfeasibleRegionError("gas pipe: inlet pressure outside the admissible window");
  }
  if (q_flux == 0.0) return p_in_pa;
  const double rt = constants_.R_s * constants_.T;
  const double start_potential = potential(p_in_pa, q_flux);
  const double target = start_potential -
                        0.5 * rt * q_flux * std::fabs(q_flux) *
                            pipe_.theta() * x_m;
  return newton_solve(target, q_flux, lo, hi, p_in_pa, start_potential);
}

double PipeFlow::inlet_pressure(double p_out_pa, double q_flux,
                                double x_m) const {
  // Walking upstream is the downstream problem for the reversed flow.
  return outlet_pressure(p_out_pa, -q_flux, x_m);
}

double PipeFlow::douts_dpin(double p_in_pa, double q_flux, double x_m) const {
  const double p_out = outlet_pressure(p_in_pa, q_flux, x_m);
  return potential_slope(p_in_pa, q_flux) / potential_slope(p_out, q_flux);
}

double PipeFlow::douts_dq(double p_in_pa, double q_flux, double x_m) const {
  const double p_out = outlet_pressure(p_in_pa, q_flux, x_m);
  const double rt = constants_.R_s * constants_.T;
  const double log_ratio =
      std::log(((1.0 + alpha_ * p_in_pa) * p_out) /
               ((1.0 + alpha_ * p_out) * p_in_pa));
  const double numerator = 2.0 * q_flux * rt * log_ratio -
                           rt * std::fabs(q_flux) * pipe_.theta() * x_m;
  return numerator / potential_slope(p_out, q_flux);
}

double PipeFlow::outlet_bar(double p_in_bar, double flow_kg_s) const {
  return outlet_pressure(p_in_bar * kBar, flow_kg_s / pipe_.area(),
                         pipe_.length_m) /
         kBar;
}

double PipeFlow::inlet_bar(double p_out_bar, double flow_kg_s) const {
  return inlet_pressure(p_out_bar * kBar, flow_kg_s / pipe_.area(),
                        pipe_.length_m) /
         kBar;
}

double PipeFlow::douts_dpin_bar(double p_in_bar, double flow_kg_s) const {
  return douts_dpin(p_in_bar * kBar, flow_kg_s / pipe_.area(), pipe_.length_m);
}

double PipeFlow::douts_dflow_bar(double p_in_bar, double flow_kg_s) const {
  return douts_dq(p_in_bar * kBar, flow_kg_s / pipe_.area(), pipe_.length_m) /
         (pipe_.area() * kBar);
}

NormSpec pipe_weights(const PipeFlow& flow, const Box& box,
                      std::optional<double> fixed_flow_kg_s) {
  const int expected = fixed_flow_kg_s ? 1 : 2;
  if (box.dim() != expected) {
    throw ValidationError("pipe_weights: box dimension mismatch");
  }
  const double pu_lo = box.lo[0];
  const double pu_hi = box.hi[0];
  const double q_lo = fixed_flow_kg_s ? *fixed_flow_kg_s : box.lo[1];
  const double q_hi = fixed_flow_kg_s ? *fixed_flow_kg_s : box.hi[1];

  // Outlet pressure rises with inlet pressure and falls with flow, and the
  // pressure sensitivity is largest at low inlet pressure for forward flow
  // (at high inlet pressure for reverse flow), always at the largest flow.
  const double wp = q_hi >= 0.0 ? flow.douts_dpin_bar(pu_lo, q_hi)
                                : flow.douts_dpin_bar(pu_hi, q_hi);

  NormSpec norm;
  norm.kind = NormSpec::Kind::WeightedOne;
  norm.weights.push_back(std::max(std::fabs(wp), 1e-12));
  if (!fixed_flow_kg_s) {
    double wq = 0.0;
    if (q_hi >= 0.0) {
      // Forward-flow part: flow sensitivity peaks at low pressure, high flow.
      wq = std::max(wq, std::fabs(flow.douts_dflow_bar(pu_lo, q_hi)));
    }
    if (q_lo < 0.0) {
      // Reverse-flow part, evaluated on the flipped pipe so the magnitudes
      // match the forward-flow analysis.
      const double p_far = flow.outlet_bar(pu_lo, q_lo);
      wq = std::max(wq, std::fabs(flow.douts_dflow_bar(p_far, -q_lo)));
    }
    norm.weights.push_back(std::max(wq, 1e-12));
  }
  return norm;
}

bool box_feasible(const PipeFlow& flow, const Box& box,
                  std::optional<double> fixed_flow_kg_s, double pv_lo_bar,
                  double pv_hi_bar) {
  const double pu_lo = box.lo[0];
  const double pu_hi = box.hi[0];
  const double q_lo = fixed_flow_kg_s ? *fixed_flow_kg_s : box.lo[1];
  const double q_hi = fixed_flow_kg_s ? *fixed_flow_kg_s : box.hi[1];
  const double slack = 1e-9 * (1.0 + std::fabs(pv_lo_bar) + std::fabs(pv_hi_bar));

  if (q_lo >= 0.0) {
    // Forward flow everywhere: the largest reachable outlet pressure comes
    // from the highest inlet pressure and the smallest flow.
    if (flow.outlet_bar(pu_hi, q_lo) < pv_lo_bar - slack) return false;
  }
  if (q_hi <= 0.0) {
    // Reverse flow everywhere: the smallest reachable outlet pressure comes
    // from the lowest inlet pressure and the least negative flow.
    if (flow.outlet_bar(pu_lo, q_hi) > pv_hi_bar + slack) return false;
  }
  return true;
}

int GasNetwork::find_node(const std::string& name) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

FlowFixing fix_tree_flows(const GasNetwork& network) {
  FlowFixing fixing;
  fixing.fixed_flow.assign(network.arcs.size(), std::nullopt);

  double total = 0.0;
  for (const auto& node : network.nodes) total += node.injection_kg_s;
  if (std::fabs(total) > 1e-6) {
    fixing.feasible = false;
    std::ostringstream os;
    os << "total injection is " << total << " kg/s, expected zero";
    fixing.why = os.str();
    return fixing;
  }

  std::vector<double> residual(network.nodes.size());
  for (std::size_t n = 0; n < network.nodes.size(); ++n) {
    residual[n] = network.nodes[n].injection_kg_s;
  }
  std::vector<char> fixed(network.arcs.size(), 0);
  std::vector<int> degree(network.nodes.size(), 0);
  for (const auto& arc : network.arcs) {
    ++degree[arc.from];
    ++degree[arc.to];
  }

  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t n = 0; n < network.nodes.size(); ++n) {
      if (degree[n] != 1) continue;
      int arc_idx = -1;
      for (std::size_t a = 0; a < network.arcs.size(); ++a) {
        if (fixed[a]) continue;
        if (network.arcs[a].from == static_cast<int>(n) ||
            network.arcs[a].to == static_cast<int>(n)) {
          arc_idx = static_cast<int>(a);
          break;
        }
      }
      if (arc_idx < 0) continue;
      const auto& arc = network.arcs[arc_idx];
      // A valve may be closed, so its flow is not forced by the balance.
      if (arc.kind == ArcKind::Valve) continue;

      const bool incoming = arc.to == static_cast<int>(n);
      const double q = incoming ? -residual[n] : residual[n];
      if (q < arc.q_lo_kg_s - 1e-9 || q > arc.q_hi_kg_s + 1e-9) {
        fixing.feasible = false;
        std::ostringstream os;
        os << "arc " << arc.name << " needs flow " << q
           << " kg/s, outside [" << arc.q_lo_kg_s << ", " << arc.q_hi_kg_s
           << "]";
        fixing.why = os.str();
        return fixing;
      }
      fixing.fixed_flow[arc_idx] = q;
      fixed[arc_idx] = 1;
      residual[arc.to] += q;
      residual[arc.from] -= q;
      --degree[arc.from];
      --degree[arc.to];
      progress = true;
    }
  }

  for (std::size_t n = 0; n < network.nodes.size(); ++n) {
    if (degree[n] == 0 && std::fabs(residual[n]) > 1e-9) {
      fixing.feasible = false;
      std::ostringstream os;
      os << "node " << network.nodes[n].name << " keeps residual injection "
         << residual[n] << " kg/s after flow fixing";
      fixing.why = os.str();
      return fixing;
    }
  }
  return fixing;
}

double gas_big_m(const GasNetwork& network) {
  double m = 0.0;
  const double alpha = network.constants.alpha();
  const double rt = network.constants.R_s * network.constants.T;
  const double p_open_hi_bar = (-1.0 / alpha) / kBar;
  for (const auto& arc : network.arcs) {
    if (arc.kind != ArcKind::Pipe) continue;
    const auto& u = network.nodes[arc.from];
    const auto& v = network.nodes[arc.to];
    const double max_abs_flow =
        std::max(std::fabs(arc.q_lo_kg_s), std::fabs(arc.q_hi_kg_s));
    const double p_min_bar =
        max_abs_flow / arc.pipe.area() * std::sqrt(rt) / kBar;
    m = std::max(m, u.p_hi_bar - u.p_lo_bar);
    m = std::max(m, arc.q_hi_kg_s - arc.q_lo_kg_s);
    m = std::max(m, p_open_hi_bar - v.p_lo_bar);
    m = std::max(m, v.p_hi_bar - p_min_bar);
  }
  return m;
}

namespace {

class GasPipeOracle final : public Oracle {
 public:
  GasPipeOracle(const PipeParams& pipe, const GasConstants& constants,
                std::optional<double> fixed_flow)
      : flow_(pipe, constants), fixed_flow_(fixed_flow) {}

  double eval(std::span<const double> x) const override {
    const double p_in_bar = x[0];
    const double flow_kg_s = fixed_flow_ ? *fixed_flow_ : x[1];
    return flow_.outlet_bar(p_in_bar, flow_kg_s);
  }

  int arity() const override { return fixed_flow_ ? 1 : 2; }

  std::string registry_name() const override { return "gas-pipe"; }

  std::string params_json() const override {
    ordered_json j;
    j["R_s"] = flow_.constants().R_s;
    j["T"] = flow_.constants().T;
    j["p_crit_bar"] = flow_.constants().p_crit_bar;
    j["T_crit"] = flow_.constants().T_crit;
    j["length_m"] = flow_.pipe().length_m;
    j["diameter_m"] = flow_.pipe().diameter_m;
    j["friction"] = flow_.pipe().friction;
    if (fixed_flow_) j["fixed_flow_kg_s"] = *fixed_flow_;
    return j.dump();
  }

  const PipeFlow& flow() const { return flow_; }

 private:
  PipeFlow flow_;
  std::optional<double> fixed_flow_;
};

void validate_network(const GasNetwork& network) {
  std::vector<std::string> issues;
  for (const auto& node : network.nodes) {
    if (!(node.p_lo_bar > 0.0) || !(node.p_lo_bar <= node.p_hi_bar)) {
      issues.push_back("node " + node.name + ": bad pressure bounds");
    }
  }
  const int n = static_cast<int>(network.nodes.size());
  for (const auto& arc : network.arcs) {
    if (arc.from < 0 || arc.from >= n || arc.to < 0 || arc.to >= n) {
      issues.push_back("arc " + arc.name + ": endpoint out of range");
      continue;
    }
    if (arc.from == arc.to) {
      issues.push_back("arc " + arc.name + ": self loop");
    }
    if (!(arc.q_lo_kg_s <= arc.q_hi_kg_s)) {
      issues.push_back("arc " + arc.name + ": bad flow bounds");
    }
    if (arc.kind == ArcKind::Pipe &&
        (!(arc.pipe.length_m > 0.0) || !(arc.pipe.diameter_m > 0.0) ||
         !(arc.pipe.friction > 0.0))) {
      issues.push_back("arc " + arc.name + ": pipe geometry must be positive");
    }
    if ((arc.kind == ArcKind::Compressor ||
         arc.kind == ArcKind::ControlValve) &&
        !(arc.dp_max_bar >= 0.0)) {
      issues.push_back("arc " + arc.name + ": negative pressure-delta bound");
    }
  }
  if (!issues.empty()) {
    std::string what = "gas network invalid:";
    for (const auto& issue : issues) what += "\n  " + issue;
    throw ValidationError(what);
  }
}

// The pressure bounds of both pipe endpoints must sit strictly inside the
// admissible window for every flow the pipe may carry.
void check_operating_window(const GasNetwork& network, const GasArc& arc,
                            double q_lo, double q_hi) {
  const PipeFlow flow(arc.pipe, network.constants);
  const double max_flux =
      std::max(std::fabs(q_lo), std::fabs(q_hi)) / arc.pipe.area();
  const double lo_pa = flow.admissible_lo(max_flux);
  const double hi_pa = flow.admissible_hi();
  for (int side = 0; side < 2; ++side) {
    const auto& node = network.nodes[side == 0 ? arc.from : arc.to];
    if (!(node.p_lo_bar * kBar > lo_pa) || !(node.p_hi_bar * kBar < hi_pa)) {
      std::ostringstream os;
      os << "pipe " << arc.name << ": node " << node.name
         << " pressure window [" << node.p_lo_bar << ", " << node.p_hi_bar
         << "] bar leaves the admissible interval (" << lo_pa / kBar << ", "
         << hi_pa / kBar << ") bar";
      throw ValidationError(os.str());
    }
  }
}

}  // namespace

std::shared_ptr<const Oracle> make_gas_pipe_oracle(
    const PipeParams& pipe, const GasConstants& constants,
    std::optional<double> fixed_flow_kg_s) {
  return std::make_shared<GasPipeOracle>(pipe, constants, fixed_flow_kg_s);
}

GasModel build_minlp(const GasNetwork& network, const GasModelOptions& options) {
  validate_network(network);

  GasModel model;
  model.fixing = options.apply_flow_fixing ? fix_tree_flows(network)
                                           : FlowFixing{};
  if (model.fixing.fixed_flow.empty()) {
    model.fixing.fixed_flow.assign(network.arcs.size(), std::nullopt);
  }
  // Structural infeasibility is left to the relaxation: without the fixing
  // applied, conflicting balances make the first master infeasible.
  const bool use_fixing = model.fixing.feasible;

  LipschitzMinlp& problem = model.problem;
  auto add_var = [&](const std::string& name, double lo, double hi,
                     bool integral) {
    problem.variables.push_back({name, lo, hi, integral});
    return static_cast<int>(problem.variables.size()) - 1;
  };

  for (const auto& node : network.nodes) {
    model.node_pressure_col.push_back(
        add_var("p_" + node.name, node.p_lo_bar, node.p_hi_bar, false));
  }
  for (std::size_t a = 0; a < network.arcs.size(); ++a) {
    const auto& arc = network.arcs[a];
    double lo = arc.q_lo_kg_s, hi = arc.q_hi_kg_s;
    if (use_fixing && model.fixing.fixed_flow[a]) {
      lo = hi = *model.fixing.fixed_flow[a];
    } else if (arc.kind == ArcKind::Valve) {
      // A closed valve carries zero flow regardless of its open-state
      // bounds, which live in the activation rows instead.
      lo = std::min(lo, 0.0);
      hi = std::max(hi, 0.0);
    }
    model.arc_flow_col.push_back(add_var("q_" + arc.name, lo, hi, false));
  }
  model.arc_dp_col.assign(network.arcs.size(), -1);
  model.arc_open_col.assign(network.arcs.size(), -1);
  for (std::size_t a = 0; a < network.arcs.size(); ++a) {
    const auto& arc = network.arcs[a];
    if (arc.kind == ArcKind::Compressor || arc.kind == ArcKind::ControlValve) {
      model.arc_dp_col[a] =
          add_var("dp_" + arc.name, 0.0, arc.dp_max_bar, false);
    } else if (arc.kind == ArcKind::Valve) {
      model.arc_open_col[a] = add_var("o_" + arc.name, 0.0, 1.0, true);
    }
  }

  const int nvars = problem.nvars();
  problem.objective.assign(nvars, 0.0);
  for (std::size_t a = 0; a < network.arcs.size(); ++a) {
    if (network.arcs[a].kind == ArcKind::Compressor) {
      problem.objective[model.arc_dp_col[a]] = 1.0;
    }
  }

  auto zeros = [&] { return std::vector<double>(nvars, 0.0); };

  for (std::size_t n = 0; n < network.nodes.size(); ++n) {
    auto row = zeros();
    for (std::size_t a = 0; a < network.arcs.size(); ++a) {
      if (network.arcs[a].to == static_cast<int>(n)) {
        row[model.arc_flow_col[a]] += 1.0;
      }
      if (network.arcs[a].from == static_cast<int>(n)) {
        row[model.arc_flow_col[a]] -= 1.0;
      }
    }
    problem.linear.add_equality(row, -network.nodes[n].injection_kg_s);
  }

  const double big_m = gas_big_m(network);
  for (std::size_t a = 0; a < network.arcs.size(); ++a) {
    const auto& arc = network.arcs[a];
    const int pu = model.node_pressure_col[arc.from];
    const int pv = model.node_pressure_col[arc.to];
    const int q = model.arc_flow_col[a];
    switch (arc.kind) {
      case ArcKind::ShortPipe: {
        auto row = zeros();
        row[pu] = 1.0;
        row[pv] = -1.0;
        problem.linear.add_equality(row, 0.0);
        break;
      }
      case ArcKind::Compressor: {
        auto row = zeros();
        row[pv] = 1.0;
        row[pu] = -1.0;
        row[model.arc_dp_col[a]] = -1.0;
        problem.linear.add_equality(row, 0.0);
        break;
      }
      case ArcKind::ControlValve: {
        auto row = zeros();
        row[pv] = 1.0;
        row[pu] = -1.0;
        row[model.arc_dp_col[a]] = 1.0;
        problem.linear.add_equality(row, 0.0);
        break;
      }
      case ArcKind::Valve: {
        const int open = model.arc_open_col[a];
        const auto& u = network.nodes[arc.from];
        const auto& v = network.nodes[arc.to];
        const double gap = std::max(u.p_hi_bar - v.p_lo_bar,
                                    v.p_hi_bar - u.p_lo_bar);
        // Closed: q = 0, pressures decoupled.  Open: q within bounds,
        // pressures equal.
        auto row = zeros();
        row[q] = 1.0;
        row[open] = -arc.q_lo_kg_s;
        problem.linear.add_row(row, 0.0);
        row = zeros();
        row[q] = -1.0;
        row[open] = arc.q_hi_kg_s;
        problem.linear.add_row(row, 0.0);
        row = zeros();
        row[pu] = 1.0;
        row[pv] = -1.0;
        row[open] = -gap;
        problem.linear.add_row(row, -gap);
        row = zeros();
        row[pu] = -1.0;
        row[pv] = 1.0;
        row[open] = -gap;
        problem.linear.add_row(row, -gap);
        break;
      }
      case ArcKind::Pipe:
        break;
    }
  }

  model.pipe_binding.assign(network.arcs.size(), -1);
  for (std::size_t a = 0; a < network.arcs.size(); ++a) {
    const auto& arc = network.arcs[a];
    if (arc.kind != ArcKind::Pipe) continue;

    std::optional<double> fixed;
    if (use_fixing && model.fixing.fixed_flow[a]) {
      fixed = *model.fixing.fixed_flow[a];
    }
    const double q_lo = fixed ? *fixed : arc.q_lo_kg_s;
    const double q_hi = fixed ? *fixed : arc.q_hi_kg_s;
    check_operating_window(network, arc, q_lo, q_hi);

    NonlinearityBinding binding;
    binding.name = arc.name;
    binding.inputs.push_back(model.node_pressure_col[arc.from]);
    if (!fixed) binding.inputs.push_back(model.arc_flow_col[a]);
    binding.output = model.node_pressure_col[arc.to];
    binding.lipschitz = 1.0;
    binding.oracle = make_gas_pipe_oracle(arc.pipe, network.constants, fixed);
    binding.big_m_override = big_m;

    const PipeFlow flow(arc.pipe, network.constants);
    const auto& u = network.nodes[arc.from];
    Box root;
    root.lo = {u.p_lo_bar};
    root.hi = {u.p_hi_bar};
    if (!fixed) {
      root.lo.push_back(q_lo);
      root.hi.push_back(q_hi);
    }
    binding.norm = pipe_weights(flow, root, fixed);
    binding.local_norm_hook = [flow, fixed](const Box& box) {
      return pipe_weights(flow, box, fixed);
    };
    if (options.attach_box_filters) {
      const double pv_lo = network.nodes[arc.to].p_lo_bar;
      const double pv_hi = network.nodes[arc.to].p_hi_bar;
      binding.box_filter = [flow, fixed, pv_lo, pv_hi](const Box& box) {
        return box_feasible(flow, box, fixed, pv_lo, pv_hi);
      };
    }
    model.pipe_binding[a] = static_cast<int>(problem.bindings.size());
    problem.bindings.push_back(std::move(binding));
  }

  return model;
}

void register_gas_oracles(OracleRegistry& registry) {
  registry.register_factory(
      "gas-pipe", [](const std::string& params) -> std::shared_ptr<const Oracle> {
        const auto j = nlohmann::json::parse(params);
        GasConstants constants;
        if (j.contains("R_s")) constants.R_s = j.at("R_s").get<double>();
        if (j.contains("T")) constants.T = j.at("T").get<double>();
        if (j.contains("p_crit_bar")) {
          constants.p_crit_bar = j.at("p_crit_bar").get<double>();
        }
        if (j.contains("T_crit")) constants.T_crit = j.at("T_crit").get<double>();
        PipeParams pipe;
        pipe.length_m = j.at("length_m").get<double>();
        pipe.diameter_m = j.at("diameter_m").get<double>();
        pipe.friction = j.at("friction").get<double>();
        std::optional<double> fixed;
        if (j.contains("fixed_flow_kg_s")) {
          fixed = j.at("fixed_flow_kg_s").get<double>();
        }
        return make_gas_pipe_oracle(pipe, constants, fixed);
      });
}

}  // namespace slr::gas
