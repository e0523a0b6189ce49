#pragma once

#include <functional>
#include <string>

#include "wkit/geometry.hpp"

namespace wkit {

// L^2 gradient flow of the bending energy for height fields over the flat
// periodic unit square, advanced by a semi-implicit splitting: the flat
// bilaplacian is treated spectrally with a stabilization constant large
// enough to dominate the metric stiffness, everything else explicitly.
// Steps are accepted only when the energy does not increase.

struct FlowConfig {
  double tau0 = 1e-4;
  double tau_min = 1e-12;
  double t_end = 1.0;
  double energy_increase_tolerance = 0.0;
  double blowup_threshold = 1e4;  // sup |II|_g = sup |dn|_g on a hypersurface
  double converge_tol = 1e-8;     // sup of the normal speed
  double conc_radius = 0.125;     // concentration probe ball radius
  double conc_eps0 = 1.0;         // concentration flag threshold
};

enum class FlowStatus { Running, Converged, ReachedEnd, BlowUp, StepCollapse };
const char* to_string(FlowStatus s);

struct FlowSample {
  double t, W, sup_u, sup_dn, tau;
};

struct FlowState {
  Grid grid;              // periodic graph chart; x and y live in the affine part
  std::vector<double> u;  // height field, mirrored into grid.values component 2
  double t = 0.0;
  double tau = 0.0;  // next step size to try; set from tau0 on the first step
  FlowStatus status = FlowStatus::Running;
  std::vector<FlowSample> history;
  double first_concentration_t = -1.0;  // first accepted time the probe > eps0
};

FlowState make_flow_state(int res, const std::function<double(double, double)>& height);

// normal speed -(Lap_g H + 2 H (H^2 - K)) per node; stationary exactly on
// Willmore immersions. Throws GraphFold when nrm.e3 <= 0.1 anywhere.
std::vector<double> willmore_velocity(const Geometry& geom);

// One attempted step: (I + tau c Lap^2) u+ = u + tau (w/(nrm.e3) + c Lap^2 u)
// with Lap^2 the spectral flat bilaplacian and c the largest nodal value of
// (det g)^{-1/2} lambda_max(g^{-1})^2. tau halves until the energy stops
// increasing. Returns true iff a step was accepted; otherwise status holds
// Converged, ReachedEnd, BlowUp or StepCollapse.
bool flow_step(FlowState& st, const FlowConfig& cfg);

// Steps until a terminal status, recording (t, W, sup|u|, sup|dn|_g, tau)
// after every accepted step. csv_path, when nonempty, receives the history
// with header t,W,sup_u,sup_dn,tau (written to a temp file, then renamed).
FlowStatus flow_run(FlowState& st, const FlowConfig& cfg, const std::string& csv_path = "");

// max over ball centers of the Gauss-map energy int_{B_r} |dn|^2_g dvol,
// balls taken in the parameter domain (periodic distance on periodic axes);
// the concentration indicator driving first_concentration_t.
double concentration_probe(const Geometry& geom, double r);

void write_flow_csv(const FlowState& st, const std::string& path);

}  // namespace wkit
