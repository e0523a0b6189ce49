#pragma once

#include "wkit/algebra.hpp"
#include "wkit/grid.hpp"

namespace wkit {

// Pointwise differential geometry of one chart, codimension 1 (m = n + 1).
// Heavy fields are cached; metric inverses are rebuilt on demand to keep the
// 4d footprint bounded. Layouts: dPhi[(idx*n + i)*m + c], II[idx*n*n + i*n + j].
struct Geometry {
  const Grid* grid = nullptr;
  int n = 0, m = 0;
  int acc = 4;
  std::vector<double> dPhi;     // N*n*m
  std::vector<double> nrm;      // N*m, unit Gauss map
  std::vector<double> II;       // N*n*n, nrm . D_i D_j Phi
  std::vector<double> H;        // N, (1/n) tr_g II; unit sphere carries H = -1
  std::vector<double> g;        // N*n*n
  std::vector<double> sqrtdet;  // N
  std::vector<double> ginv;     // N*n*n, n == 2 only
  std::vector<double> K;        // N, n == 2 only
  std::vector<double> dn;       // N*n*m, n == 2 only

  size_t node_count() const { return grid->node_count(); }
  MetricAtPoint metric_at(size_t idx) const;
  // ginv row i at node (rebuilds for n == 4)
  void ginv_at(size_t idx, double* out) const;
};

Geometry compute_geometry(const Grid& G, int acc = 4);

// gradient of an mc-component field: out[(idx*n + i)*mc + c] = D_i f_c
std::vector<double> gradient(const Grid& G, const std::vector<double>& f, int mc, int acc);

// Sum_i D_i(sqrtG g^{ij} omega_j) per component; omega layout N*n*mc -> N*mc.
// This is the dx^{1..n} coefficient of d(*_g omega) for a 1-form omega.
std::vector<double> metric_divergence(const Geometry& geom, const std::vector<double>& omega,
                                      int mc, int acc);

// (1/sqrtG) Sum_i D_i(sqrtG g^{ij} D_j f) per component
std::vector<double> laplace_beltrami(const Geometry& geom, const std::vector<double>& f,
                                     int mc, int acc);

// n == 2: dx^1^dx^2 coefficient of d(omega) for an mc-component 1-form
std::vector<double> curl2(const Grid& G, const std::vector<double>& omega, int mc, int acc);

// *_g on the form index of an mc-component 1-form (layout N*2*mc), n == 2:
// (*w)_1 = -sqrtG g^{2j} w_j, (*w)_2 = +sqrtG g^{1j} w_j
std::vector<double> hodge_1form(const Geometry& geom, const std::vector<double>& w, int mc);

// Primitive of a numerically closed 1-form by axis-path integration from the
// basepoint, one cubic interpolant cell at a time: along axis 0 in the
// basepoint row, then axis 1 per column. defect is the sup mismatch against
// the swapped axis order. Throws NotSimplyConnected on periodic charts.
struct PathPrimitive {
  std::vector<double> F;  // N*mc, zero at the basepoint
  double defect = 0.0;
};
PathPrimitive integrate_1form(const Grid& G, const std::vector<double>& w, int mc, int b0, int b1);

// pointwise |df|_g^2 for scalar f given its gradient (layout N*n)
std::vector<double> grad_norm2(const Geometry& geom, const std::vector<double>& df);

// max over nodes of max(lambda_max(g), 1/lambda_min(g)); weak-immersion bound
// against the flat reference
double weak_immersion_bound(const Geometry& geom, const std::vector<uint8_t>& mask);

// Phi -> (Phi - c)/|Phi - c|^2 on every chart; throws DomainError if the
// center sits on (or numerically on) the image
void invert_atlas(Atlas& atlas, const double* center);

// sup over masked nodes of |H nrm - (1/n) Lap_g Phi|
double mean_identity_residual(const Geometry& geom, const std::vector<uint8_t>& mask);

}  // namespace wkit
