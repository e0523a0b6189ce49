#pragma once

#include "wkit/algebra.hpp"
#include "wkit/conserve2d.hpp"
#include "wkit/geometry.hpp"

namespace wkit {

// Tension field of the Dirichlet mean-curvature energy on 4D charts in R^5:
//   V = 2 <dPhi,dH>_g dH - 1/2 d(nrm Lap_g H) + Lap_g H dn - |dH|^2_g dPhi
// layout N*4*5 like Geometry::dPhi. Scales as V(lambda Phi) = lambda^-3 V.
std::vector<double> tension4(const Geometry& geom);

// d(*_g V) through its *_g normalization (for a 1-form this is the metric
// divergence over sqrt(det g)); zero iff the immersion is a critical point
struct El4Residual {
  ResidualReport sup;
  ResidualReport l2;
  std::vector<double> density;  // N*5
};
El4Residual el4_residual(const Geometry& geom);

// Noether current residuals for dilations and rotations. L is the potential
// 2-form (dL = *_g V), R^5-valued: layout N*6*5, base pair index over
// (01,02,03,12,13,23) then ambient component. An empty L means L = 0, valid
// for CMC inputs only (V = 0). Throws on any other size.
//   dilation current: L .|_g dPhi + d(H^2)            (scalar 1-form)
//   rotation current: -L ^|_g dPhi - 1/2 Lap_g H n^dPhi (Lambda^2R^5 1-form)
struct Noether4Residuals {
  ResidualReport dilation;
  ResidualReport rotation;
};
Noether4Residuals noether4_residuals(const Geometry& geom, const std::vector<double>& L);

// one consistent point of immersion data for the algebraic identity checks:
// g is the Gram matrix of dPhi and nrm is the unit normal of its span
struct HsrPoint {
  double dPhi[4][5];
  double nrm[5];
  double dH2[4];  // d(H^2)
  double lapH = 0.0;
};

// defects of the algebraic identities relating the two Noether currents:
//   hsr:  b |^|_g dPhi + a |_g dPhi = 2 Lap_g H nrm - <d(H^2), dPhi>_g
//         with a = -L .|_g dPhi - d(H^2), b = -L ^|_g dPhi - 1/2 Lap_g H n^dPhi
//   ii7a: (L ^|_g dPhi) |^|_g dPhi = -(L .|_g dPhi) |_g dPhi
//   ii7b: (n ^ dPhi) |^|_g dPhi = -4 nrm
struct HsrDefects {
  double hsr = 0.0;
  double ii7a = 0.0;
  double ii7b = 0.0;
  double max() const { return std::max(hsr, std::max(ii7a, ii7b)); }
};
// L must be a vector-valued 2-form (ambient grade 1, base grade 2); throws
// DomainError("GradeMismatch...") otherwise
HsrDefects hsr_identity_check(const HsrPoint& p, const Mixed& L);

// draw a random consistent HsrPoint and L (well-conditioned frame in R^5,
// unit normal from the 4x4 minors, coefficients in [-1,1])
void random_hsr_draw(uint64_t seed, HsrPoint& p, Mixed& L);

}  // namespace wkit
