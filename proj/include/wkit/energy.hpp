#pragma once

#include <functional>
#include <string>

#include "wkit/geometry.hpp"

namespace wkit {

// Geometry of every chart of an atlas plus the per-node integration weights
// (partition of unity times tensor-product quadrature). Built once and
// shared by the energy and conservation-law evaluators.
struct AtlasGeometry {
  const Atlas* atlas = nullptr;
  int acc = 4;
  std::vector<Geometry> charts;
  std::vector<std::vector<double>> weights;

  double measure() const;  // integral of dvol_g over the atlas
};

AtlasGeometry compute_atlas_geometry(const Atlas& A, int acc = 4);
// the result aliases the atlas, so a temporary cannot back it
AtlasGeometry compute_atlas_geometry(Atlas&&, int = 4) = delete;

// One scalar functional: the quadrature value plus pointwise statistics of
// the integrand over weight-carrying nodes. value is exactly the weighted
// pairwise sum of the integrand field (mean is measure-weighted).
struct EnergyReport {
  std::string name;
  double value = 0.0;
  double integrand_min = 0.0;
  double integrand_max = 0.0;
  double integrand_mean = 0.0;
  std::string resolution;  // chart dims, e.g. "65x65+65x65"
  std::string quadrature;  // "simpson", "trapezoid" or "mixed"
};

// integrand(chart, node) is evaluated node-parallel; the sum uses a
// deterministic pairwise reduction.
EnergyReport evaluate_functional(const AtlasGeometry& AG, const std::string& name,
                                 const std::function<double(int, size_t)>& integrand);

// integral of |H|^2 dvol. n == 2; open patches refuse totals unless patch_ok.
EnergyReport willmore(const AtlasGeometry& AG, bool patch_ok = false);

// integral of |K| dvol over a closed surface (>= 4pi, = 4pi iff convex)
EnergyReport chern_lashof(const AtlasGeometry& AG);

struct GaussBonnetReport {
  double total = 0.0;       // integral of K dvol
  double genus_real = 0.0;  // 1 - total/(4pi), before rounding
  int genus = 0;
};
GaussBonnetReport gauss_bonnet(const AtlasGeometry& AG);

// sup over interior nodes of -Lap(alpha) - e^{2 alpha} K on a conformal
// chart, alpha = log(g_11)/2 against the flat background (flat Laplacian,
// second order). Throws NonConformalChart unless g_11 = g_22 and g_12 = 0
// to within conformal_tol relative.
double liouville_residual(const Geometry& geom, double conformal_tol = 1e-3);

// integral of |dH|_g^2 - H^2 |II|_g^2 + 7 H^4 dvol. n == 4; scale invariant,
// unbounded from below along stretched ellipsoids.
EnergyReport graham_reichert(const AtlasGeometry& AG, bool patch_ok = false);

struct CoerciveReport {
  EnergyReport energy;       // >= 0, = 0 iff round sphere
  double lower_bound = 0.0;  // integral of |DII|_g^2 + |II|_g^4, ratio diagnostic
};
// integral of 4|dH|^2 + |IIo|^4/3 + 2H^2|II|^2 - 4H tr(II^3) + 2 tr(II^4);
// traces through the raised shape operator g^{-1} II, IIo = II - H g.
// lower_bound uses the full covariant derivative of II (Christoffel terms).
CoerciveReport coercive_energy(const AtlasGeometry& AG, bool patch_ok = false);

// half the integral of |dH|_g^2 dvol; n == 4, scale invariant
EnergyReport dirichlet_h(const AtlasGeometry& AG, bool patch_ok = false);

struct ConstrainedQuantities {
  double enclosed_volume = 0.0;  // (1/3) integral of Phi.n dvol, outward normal
  double isoperimetric = 0.0;    // area / volume^{2/3}
  double total_mean = 0.0;       // area^{-1/2} integral of H dvol
};
// closed 2d atlases; total_mean^2 <= willmore holds exactly (Cauchy-Schwarz
// with shared quadrature weights)
ConstrainedQuantities constrained_quantities(const AtlasGeometry& AG);

EnergyReport surface_measure(const AtlasGeometry& AG);

}  // namespace wkit
