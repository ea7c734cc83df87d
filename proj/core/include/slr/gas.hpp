#ifndef SLR_GAS_HPP
#define SLR_GAS_HPP

#include <optional>
#include <string>
#include <vector>

#include "slr/box.hpp"
#include "slr/model.hpp"
#include "slr/oracles.hpp"

namespace slr::gas {

// Isothermal natural-gas constants.  The linear compressibility model
// z(p) = 1 + alpha p requires alpha < 0 over the operating range, which
// holds for methane-like critical data at pipeline temperatures.
struct GasConstants {
  double R_s = 518.26;      // specific gas constant, J/(kg K)
  double T = 288.15;        // gas temperature, K
  double p_crit_bar = 46.5;  // critical pressure
  double T_crit = 190.6;     // critical temperature, K

  double alpha() const;  // 1/Pa, negative in the supported regime
};

struct PipeParams {
  double length_m = 0.0;
  double diameter_m = 0.0;
  double friction = 0.0;  // Darcy friction factor, dimensionless

  double area() const;
  double theta() const { return friction / diameter_m; }
};

// Stationary pressure propagation along one pipe.  All members work in SI
// units: pressures in Pa, mass flux q in kg/(m^2 s).  The admissible
// pressure window for flux q is (|q| sqrt(R_s T), 1/|alpha|): below it the
// flow would be supersonic, above it compressibility goes negative.
class PipeFlow {
 public:
  PipeFlow(PipeParams pipe, GasConstants constants);

  const PipeParams& pipe() const { return pipe_; }
  const GasConstants& constants() const { return constants_; }
  double alpha() const { return alpha_; }

  double admissible_lo(double q_flux) const;
  double admissible_hi() const;

  // Antiderivative of the pressure ODE and its slope; the slope is
  // strictly positive on the admissible window, so the potential is
  // strictly increasing there.
  double potential(double p_pa, double q_flux) const;
  double potential_slope(double p_pa, double q_flux) const;

  // Pressure x meters downstream of the inlet, by safeguarded Newton on
  // the potential equation.  Throws InfeasibleRegionError when the root
  // leaves the admissible window.
  double outlet_pressure(double p_in_pa, double q_flux, double x_m) const;

  // Inlet pressure that yields p_out after x meters; negated-flux flip of
  // outlet_pressure.
  double inlet_pressure(double p_out_pa, double q_flux, double x_m) const;

  // Closed-form partial derivatives of the outlet pressure at x_m.
  double douts_dpin(double p_in_pa, double q_flux, double x_m) const;
  double douts_dq(double p_in_pa, double q_flux, double x_m) const;

  // Engineering-unit wrappers over the whole pipe length: pressures in
  // bar, mass flow in kg/s.
  double outlet_bar(double p_in_bar, double flow_kg_s) const;
  double inlet_bar(double p_out_bar, double flow_kg_s) const;
  double douts_dpin_bar(double p_in_bar, double flow_kg_s) const;
  // Derivative of the outlet pressure in bar per kg/s.
  double douts_dflow_bar(double p_in_bar, double flow_kg_s) const;

 private:
  double newton_solve(double target, double q_flux, double lo, double hi,
                      double start, double scale) const;

  PipeParams pipe_;
  GasConstants constants_;
  double alpha_ = 0.0;
};

// Per-box gradient bounds for the outlet-pressure map, as weights for a
// one-norm with Lipschitz constant folded in (constant 1).  The box is
// [p_in_bar] for a fixed-flow pipe or [p_in_bar, flow_kg_s] otherwise.
// Monotonicity puts the extreme derivatives at known corners, so two to
// three evaluations suffice.  Weights are floored at 1e-12.  Throws
// InfeasibleRegionError when the box violates the admissible window.
NormSpec pipe_weights(const PipeFlow& flow, const Box& box,
                      std::optional<double> fixed_flow_kg_s);

// False when the box provably cannot reach the outlet-pressure interval
// [pv_lo_bar, pv_hi_bar]: for forward flow the largest attainable outlet
// pressure sits at (p_in_hi, q_lo), for reverse flow the smallest sits at
// (p_in_lo, q_hi).
bool box_feasible(const PipeFlow& flow, const Box& box,
                  std::optional<double> fixed_flow_kg_s, double pv_lo_bar,
                  double pv_hi_bar);

struct GasNode {
  std::string name;
  double p_lo_bar = 1.0;
  double p_hi_bar = 100.0;
  double injection_kg_s = 0.0;  // positive for entries, negative for exits
};

enum class ArcKind { Pipe, ShortPipe, Valve, Compressor, ControlValve };

struct GasArc {
  std::string name;
  ArcKind kind = ArcKind::Pipe;
  int from = -1;
  int to = -1;
  double q_lo_kg_s = 0.0;
  double q_hi_kg_s = 0.0;
  PipeParams pipe;            // pipes only
  double dp_max_bar = 0.0;    // valves, compressors, control valves
};

struct GasNetwork {
  GasConstants constants;
  std::vector<GasNode> nodes;
  std::vector<GasArc> arcs;

  int find_node(const std::string& name) const;
};

struct FlowFixing {
  // fixed_flow[a] holds the forced flow for arcs hanging off the cyclic
  // core of the network (leaf arcs peeled repeatedly).
  std::vector<std::optional<double>> fixed_flow;
  bool feasible = true;
  std::string why;
};

// Iteratively removes degree-one nodes, reading the unique incident arc's
// flow off the node balance.  Detects violated flow bounds and unbalanced
// total injection.
FlowFixing fix_tree_flows(const GasNetwork& network);

// One activation constant for the whole network: the largest of pressure
// ranges, flow ranges, and admissible-window clearances over all pipes.
double gas_big_m(const GasNetwork& network);

struct GasModelOptions {
  bool apply_flow_fixing = true;
  bool attach_box_filters = true;
};

struct GasModel {
  LipschitzMinlp problem;
  std::vector<int> node_pressure_col;  // per node
  std::vector<int> arc_flow_col;       // per arc
  std::vector<int> arc_dp_col;         // compressors / control valves, else -1
  std::vector<int> arc_open_col;       // valves, else -1
  std::vector<int> pipe_binding;       // per arc: binding index or -1
  FlowFixing fixing;
};

// Variables: one pressure per node (bar), one flow per arc (kg/s), one
// pressure delta per compressor or control valve, one binary per valve.
// Rows: node balances, arc couplings, valve activation.  Every pipe whose
// flow is not fixed becomes a two-input binding (inlet pressure, flow);
// fixed-flow pipes bind the inlet pressure alone.  The objective is the
// total compressor pressure increase.
GasModel build_minlp(const GasNetwork& network, const GasModelOptions& = {});

void register_gas_oracles(OracleRegistry& registry);

// Oracle construction used by both build_minlp and the registry.
std::shared_ptr<const Oracle> make_gas_pipe_oracle(
    const PipeParams& pipe, const GasConstants& constants,
    std::optional<double> fixed_flow_kg_s);

}  // namespace slr::gas

#endif
