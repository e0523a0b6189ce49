#pragma once

#include "wkit/conserve2d.hpp"
#include "wkit/geometry.hpp"

namespace wkit {

// Divergence-form problem on one 2D chart: find u with
//   D_i(a^{ij} (D_j u + shift_j)) = rhs,   u = 0 where dirichlet is set.
// rhs is a density against dx^1^dx^2 (any sqrt(det g) factor is the
// caller's). The solution minimizes quadratic_energy(P, u)/2 + int rhs u, so
// a pure-shift problem returns the exact discrete minimizer of the shifted
// Dirichlet energy. An empty dirichlet mask means natural boundary
// conditions; the solve then runs on the mean-zero complement and the caller
// owns compatibility of the data.
struct EllipticProblem {
  const Grid* grid = nullptr;
  std::vector<double> a;           // N*3, {a11, a12, a22} per node
  std::vector<double> rhs;         // N or empty
  std::vector<double> shift;       // N*2 or empty
  std::vector<uint8_t> dirichlet;  // N or empty
};

// 1 on every non-periodic chart edge
std::vector<uint8_t> boundary_mask(const Grid& G);

struct SolveResult {
  std::vector<double> u;
  bool converged = false;
  int iterations = 0;
  double rel_residual = 0.0;
};

// Bilinear elements, 2x2 Gauss cells, coefficients interpolated from the
// nodes; Jacobi-preconditioned CG, max 20N iterations, relative residual
// 1e-10. Non-convergence returns the best iterate with the flag down.
// Throws DomainError if a nodal coefficient matrix is not SPD.
SolveResult solve_divform(const EllipticProblem& P);

// energy int (du + shift)^T a (du + shift) dx by the same cell quadrature the
// solver uses (P.rhs is ignored)
double quadratic_energy(const EllipticProblem& P, const std::vector<double>& u);

struct WenteReport {
  SolveResult sol;
  double u_sup = 0.0;
  double du_l2 = 0.0;  // |du|_{L2,g}
  double da_l2 = 0.0;
  double db_l2 = 0.0;
  double bound_sup = 0.0;   // 18 |da| |db|
  double bound_grad = 0.0;  // 3 sqrt(2) |da| |db|
  bool sup_ok = false;
  bool grad_ok = false;
};

// -Lap_g u = *_g(da ^ db) with u = 0 on the Dirichlet set (empty mask = all
// non-periodic edges). gmet is the nodal metric {g11, g12, g22}; the RHS
// density is D1a D2b - D2a D1b. Norms are metric norms integrated with
// sqrt(det g) quad weights.
WenteReport wente_solve(const Grid& G, const std::vector<double>& gmet,
                        const std::vector<double>& a, const std::vector<double>& b,
                        std::vector<uint8_t> dirichlet = {});
WenteReport wente_solve(const Geometry& geom, const std::vector<double>& a,
                        const std::vector<double>& b);

// one seeded instance of the randomized Wente battery: smooth SPD metric with
// ellipticity bound <= 10 and trigonometric (a, b) on the unit square
WenteReport wente_random_instance(uint64_t seed, int res);

// Orthonormal tangent frame minimizing the connection energy
// E(theta) = int |dtheta + <f1, df2>|^2_g dvol over rotations
// e1 + i e2 = e^{i theta}(f1 + i f2). lambda is the path-integrated primitive
// of *_g(dtheta + alpha); it stays empty on charts with a periodic axis.
// Energies are per-chart (no partition-of-unity weighting).
struct FrameState {
  std::vector<double> f1, f2;  // N*m Gram-Schmidt frame
  std::vector<double> alpha;   // N*2, <f1, d f2>
  std::vector<double> theta;   // N, mean-zero minimizer
  std::vector<double> e1, e2;  // N*m rotated frame
  std::vector<double> lambda;  // N or empty
  double defect_lambda = 0.0;
  double coulomb_energy = 0.0;  // E(theta) at the minimizer, cell quadrature
  double frame_energy = 0.0;    // int |de1|^2_g + |de2|^2_g dvol
  double dn_energy = 0.0;       // int |dn|^2_g dvol
  double total_curvature = 0.0; // int |K| dvol
  bool bound_applies = false;   // total_curvature <= 1/36
  bool bound_holds = false;     // frame_energy <= 1.5 * dn_energy
  bool lambda_valid = false;    // defect_lambda <= 1e-6 * max(1, sup|lambda|)
  bool converged = false;
};

FrameState coulomb_frame(const Geometry& geom);

// Coordinates from the Coulomb frame: dphi^i = e^{-lambda} <e_i, dPhi>,
// path-integrated from the center node. The pullback metric of the immersion
// through phi^{-1} is measured on a resampled Cartesian grid placed inside
// the phi-image (quintic Lagrange interpolation, Newton inversion of phi).
struct IsothermalResult {
  FrameState frame;
  std::vector<double> phi;  // N*2, zero at the center node
  double defect_phi = 0.0;
  bool paths_valid = false;     // both defects <= 1e-6 * max(1, sup|phi|)
  double det_min = 0.0;         // min det(grad phi) over the chart
  double det_bound = 0.0;       // e^{-2 sup|lambda|} / Lambda
  bool det_ok = false;          // det_min >= 0.99 * det_bound
  double square_fraction = 0.0; // largest centered sub-square with det > 0
  int resample_res = 0;
  double resample_halfwidth = 0.0;
  std::vector<double> resampled_g;  // Rt*Rt*3 pullback metric {g11,g12,g22}
  ResidualReport offdiag;     // sup |g'12| / |g'|_F over the target interior
  ResidualReport anisotropy;  // sup |g'11 - g'22| / |g'|_F
};

// Throws NotSimplyConnected on periodic charts and
// DomainError("ResampleFailure...") if phi folds at the center.
IsothermalResult isothermal_coordinates(const Geometry& geom);

}  // namespace wkit
