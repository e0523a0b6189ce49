#pragma once

#include <limits>
#include <string>

#include "wkit/geometry.hpp"

namespace wkit {

struct ResidualReport {
  std::string name;
  std::string norm_kind;  // "sup" or "L2"
  double value = 0.0;
  double refinement_order = std::numeric_limits<double>::quiet_NaN();
};

// measured convergence order for one residual evaluated at h and h/2
inline double refinement_order(double coarse, double fine) { return std::log2(coarse / fine); }

// Noether potentials of one chart. L integrates *_g V, S integrates L.dPhi,
// R integrates L x dPhi + H dPhi; each defect is the sup mismatch between the
// two axis-path integration orders (a discrete curl, zero iff the form is
// closed). Potentials vanish at the basepoint.
struct NoetherState2D {
  std::vector<double> L;  // N*3
  std::vector<double> S;  // N
  std::vector<double> R;  // N*3
  double defect_L = 0.0;
  double defect_S = 0.0;
  double defect_R = 0.0;
  std::array<int, 2> basepoint{0, 0};
};

// V = nrm dH - H dn - H^2 dPhi, layout N*2*3 like Geometry::dPhi.
// Scales as V(lambda Phi) = V / lambda node for node.
std::vector<double> willmore_tension(const Geometry& geom);

// d(*_g V) over interior nodes, reported through its *_g normalization
// (the Euler-Lagrange density; on Willmore immersions it tends to zero).
struct ConservativeResidual {
  ResidualReport sup;
  ResidualReport l2;
  std::vector<double> density;  // N*3, *_g d(*_g V)
};
ConservativeResidual conservative_residual(const Geometry& geom);

// classical density (Lap_g H + 2 H (H^2 - K)) nrm, N*3; the continuum limit
// of ConservativeResidual::density
std::vector<double> el_density(const Geometry& geom);

// Axis-path integration from the basepoint (defaults to the chart center):
// along axis 0 in the basepoint row, then along axis 1 per column, one cubic
// interpolant cell at a time. Throws NotSimplyConnected on periodic charts.
NoetherState2D reconstruct_potentials(const Geometry& geom, const std::vector<double>& V,
                                      const int* basepoint = nullptr);

struct NoetherResiduals {
  ResidualReport dilation;  // sup |d(L . dPhi)|
  ResidualReport rotation;  // sup |d(L x dPhi + H dPhi)|
};
NoetherResiduals noether_residuals(const Geometry& geom, const NoetherState2D& st);

struct RsSystemResiduals {
  ResidualReport s_eq;  // dS + *_g dR . nrm
  ResidualReport r_eq;  // dR - *_g(nrm x dR + dS nrm)
};
RsSystemResiduals rs_system_residual(const Geometry& geom, const NoetherState2D& st);

// Lap_g Phi - *_g(dS ^ dPhi + dR x^ dPhi)
ResidualReport structure_residual(const Geometry& geom, const NoetherState2D& st);
// flat-Laplacian form valid on conformal charts only:
// Lap Phi + grad S . grad^perp Phi + grad R x grad^perp Phi
// (the invariant residual times e^{2 lambda}); throws NonConformalChart
ResidualReport structure_residual_conformal(const Geometry& geom, const NoetherState2D& st,
                                            double conformal_tol = 1e-3);

struct LaplaceSystemResiduals {
  ResidualReport s_eq;  // Lap_g S - *_g(dn .^ dR)
  ResidualReport r_eq;  // Lap_g R - *_g(dS ^ dn - dR x^ dn)
};
LaplaceSystemResiduals laplace_system_residuals(const Geometry& geom, const NoetherState2D& st);

// sup |d(*_g dPhi - R x dPhi - S dPhi)|; the inversion conservation law
ResidualReport inversion_current_residual(const Geometry& geom, const NoetherState2D& st);

}  // namespace wkit
