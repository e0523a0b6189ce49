#include "wkit/conserve2d.hpp"

#include <algorithm>
#include <cmath>

namespace wkit {

namespace {

// Residual norms are taken over a fixed central window of each chart: nodes
// at least 20% of every non-periodic axis away from the boundary, and never
// fewer than 6 nodes. The node floor is the dependency cone of the nested
// stencils (one-sided windows fill nodes 0..1, the tension field reads them
// through dH/dn up to node 3, derivatives of the reconstructed potentials
// reach node 5). The fixed fraction keeps the window physically identical
// across resolutions, so sup norms admit refinement-order comparisons.
constexpr int kResidualCollarMin = 6;
constexpr double kResidualMargin = 0.2;

std::vector<uint8_t> residual_mask(const Grid& G) {
  int collar = kResidualCollarMin;
  for (int a = 0; a < G.n; ++a) {
    if (!G.periodic[a]) {
      collar = std::max(collar, static_cast<int>(std::ceil(kResidualMargin * (G.dims[a] - 1))));
    }
  }
  return interior_mask(G, collar);
}

void cx3(const double* a, const double* b, double* o) {
  o[0] = a[1] * b[2] - a[2] * b[1];
  o[1] = a[2] * b[0] - a[0] * b[2];
  o[2] = a[0] * b[1] - a[1] * b[0];
}

void require_chart2(const Geometry& geom, const char* what) {
  if (geom.n != 2 || geom.m != 3) {
    throw DomainError(std::string("DimensionMismatch: ") + what + " needs a surface chart in R^3");
  }
}

double sup_masked(const std::vector<double>& f, int mc, const std::vector<uint8_t>& mask) {
  size_t N = mask.size();
  double worst = 0.0;
  for (size_t idx = 0; idx < N; ++idx) {
    if (!mask[idx]) continue;
    double s = 0.0;
    for (int c = 0; c < mc; ++c) s += sq(f[idx * mc + c]);
    worst = std::max(worst, s);
  }
  return std::sqrt(worst);
}

// pointwise |w|_g^2 = Sum_c g^{ij} w_i^c w_j^c for a 1-form, sup over mask
double sup_gnorm1(const Geometry& geom, const std::vector<double>& w, int mc,
                  const std::vector<uint8_t>& mask) {
  size_t N = geom.node_count();
  double worst = 0.0;
  for (size_t idx = 0; idx < N; ++idx) {
    if (!mask[idx]) continue;
    const double* Gi = &geom.ginv[idx * 4];
    double s = 0.0;
    for (int c = 0; c < mc; ++c) {
      double w1 = w[(idx * 2 + 0) * mc + c];
      double w2 = w[(idx * 2 + 1) * mc + c];
      s += Gi[0] * w1 * w1 + 2.0 * Gi[1] * w1 * w2 + Gi[3] * w2 * w2;
    }
    worst = std::max(worst, s);
  }
  return std::sqrt(worst);
}

// d of an mc-component 1-form through its *_g normalization, i.e. the scalar
// (or R^3-valued) function *_g d(omega)
std::vector<double> curl_density(const Geometry& geom, const std::vector<double>& omega,
                                 int mc) {
  auto c = curl2(*geom.grid, omega, mc, geom.acc);
  size_t N = geom.node_count();
  parallel_for(N, [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      for (int k = 0; k < mc; ++k) c[idx * mc + k] /= geom.sqrtdet[idx];
    }
  });
  return c;
}

void check_state(const Geometry& geom, const NoetherState2D& st, const char* what) {
  size_t N = geom.node_count();
  if (st.L.size() != N * 3 || st.S.size() != N || st.R.size() != N * 3) {
    throw DomainError(std::string("DimensionMismatch: ") + what +
                      " got a Noether state sized for another grid");
  }
}

// currents of the dilation / rotation laws, layout N*2 and N*2*3
void noether_currents(const Geometry& geom, const NoetherState2D& st, std::vector<double>& wS,
                      std::vector<double>& wR) {
  size_t N = geom.node_count();
  wS.assign(N * 2, 0.0);
  wR.assign(N * 2 * 3, 0.0);
  parallel_for(N, [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      const double* L = &st.L[idx * 3];
      for (int i = 0; i < 2; ++i) {
        const double* dP = &geom.dPhi[(idx * 2 + i) * 3];
        double cr[3];
        cx3(L, dP, cr);
        double dot = 0.0;
        for (int c = 0; c < 3; ++c) {
          wR[(idx * 2 + i) * 3 + c] = cr[c] + geom.H[idx] * dP[c];
          dot += L[c] * dP[c];
        }
        wS[idx * 2 + i] = dot;
      }
    }
  });
}

}  // namespace

std::vector<double> willmore_tension(const Geometry& geom) {
  require_chart2(geom, "willmore_tension");
  size_t N = geom.node_count();
  auto dH = gradient(*geom.grid, geom.H, 1, geom.acc);
  std::vector<double> V(N * 2 * 3);
  parallel_for(N, [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      double H = geom.H[idx], H2 = sq(H);
      for (int i = 0; i < 2; ++i) {
        for (int c = 0; c < 3; ++c) {
          size_t k = (idx * 2 + i) * 3 + c;
          V[k] = geom.nrm[idx * 3 + c] * dH[idx * 2 + i] - H * geom.dn[k] - H2 * geom.dPhi[k];
        }
      }
    }
  });
  return V;
}

ConservativeResidual conservative_residual(const Geometry& geom) {
  require_chart2(geom, "conservative_residual");
  const Grid& G = *geom.grid;
  auto V = willmore_tension(geom);
  auto sV = hodge_1form(geom, V, 3);
  ConservativeResidual out;
  out.density = curl_density(geom, sV, 3);
  auto mask = residual_mask(G);
  out.sup = {"conservative", "sup", sup_masked(out.density, 3, mask)};
  auto qw = quad_weights(G);
  double acc = 0.0;
  size_t N = geom.node_count();
  for (size_t idx = 0; idx < N; ++idx) {
    if (!mask[idx]) continue;
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += sq(out.density[idx * 3 + c]);
    double w = qw[idx] * geom.sqrtdet[idx];
    if (!G.pou.empty()) w *= G.pou[idx];
    acc += w * s;
  }
  out.l2 = {"conservative", "L2", std::sqrt(acc)};
  return out;
}

std::vector<double> el_density(const Geometry& geom) {
  require_chart2(geom, "el_density");
  size_t N = geom.node_count();
  auto lapH = laplace_beltrami(geom, geom.H, 1, geom.acc);
  std::vector<double> out(N * 3);
  parallel_for(N, [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      double H = geom.H[idx];
      double rho = lapH[idx] + 2.0 * H * (sq(H) - geom.K[idx]);
      for (int c = 0; c < 3; ++c) out[idx * 3 + c] = rho * geom.nrm[idx * 3 + c];
    }
  });
  return out;
}

NoetherState2D reconstruct_potentials(const Geometry& geom, const std::vector<double>& V,
                                      const int* basepoint) {
  require_chart2(geom, "reconstruct_potentials");
  const Grid& G = *geom.grid;
  if (G.periodic[0] || G.periodic[1]) {
    throw DomainError("NotSimplyConnected: axis-path potentials need a non-periodic chart");
  }
  size_t N = geom.node_count();
  if (V.size() != N * 2 * 3) {
    throw DomainError("DimensionMismatch: tension field sized for another grid");
  }
  int b0 = basepoint ? basepoint[0] : G.dims[0] / 2;
  int b1 = basepoint ? basepoint[1] : G.dims[1] / 2;
  if (b0 < 0 || b0 >= G.dims[0] || b1 < 0 || b1 >= G.dims[1]) {
    throw DomainError("DimensionMismatch: basepoint outside the grid");
  }
  NoetherState2D st;
  st.basepoint = {b0, b1};
  auto sV = hodge_1form(geom, V, 3);
  auto pL = integrate_1form(G, sV, 3, b0, b1);
  st.L = std::move(pL.F);
  st.defect_L = pL.defect;
  std::vector<double> wS, wR;
  st.S.assign(N, 0.0);
  st.R.assign(N * 3, 0.0);
  noether_currents(geom, st, wS, wR);
  auto pS = integrate_1form(G, wS, 1, b0, b1);
  st.S = std::move(pS.F);
  st.defect_S = pS.defect;
  auto pR = integrate_1form(G, wR, 3, b0, b1);
  st.R = std::move(pR.F);
  st.defect_R = pR.defect;
  return st;
}

NoetherResiduals noether_residuals(const Geometry& geom, const NoetherState2D& st) {
  require_chart2(geom, "noether_residuals");
  check_state(geom, st, "noether_residuals");
  std::vector<double> wS, wR;
  noether_currents(geom, st, wS, wR);
  auto mask = residual_mask(*geom.grid);
  NoetherResiduals out;
  out.dilation = {"noether_dilation", "sup", sup_masked(curl_density(geom, wS, 1), 1, mask)};
  out.rotation = {"noether_rotation", "sup", sup_masked(curl_density(geom, wR, 3), 3, mask)};
  return out;
}

RsSystemResiduals rs_system_residual(const Geometry& geom, const NoetherState2D& st) {
  require_chart2(geom, "rs_system_residual");
  check_state(geom, st, "rs_system_residual");
  const Grid& G = *geom.grid;
  size_t N = geom.node_count();
  auto dS = gradient(G, st.S, 1, geom.acc);
  auto dR = gradient(G, st.R, 3, geom.acc);
  auto sdR = hodge_1form(geom, dR, 3);
  std::vector<double> r1(N * 2), q(N * 2 * 3);
  parallel_for(N, [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      const double* nv = &geom.nrm[idx * 3];
      for (int i = 0; i < 2; ++i) {
        double dot = 0.0;
        double cr[3];
        cx3(nv, &dR[(idx * 2 + i) * 3], cr);
        for (int c = 0; c < 3; ++c) {
          dot += sdR[(idx * 2 + i) * 3 + c] * nv[c];
          q[(idx * 2 + i) * 3 + c] = cr[c] + dS[idx * 2 + i] * nv[c];
        }
        r1[idx * 2 + i] = dS[idx * 2 + i] + dot;
      }
    }
  });
  auto sq1 = hodge_1form(geom, q, 3);
  std::vector<double> r2(N * 2 * 3);
  for (size_t k = 0; k < r2.size(); ++k) r2[k] = dR[k] - sq1[k];
  auto mask = residual_mask(G);
  RsSystemResiduals out;
  out.s_eq = {"rs_scalar", "sup", sup_gnorm1(geom, r1, 1, mask)};
  out.r_eq = {"rs_vector", "sup", sup_gnorm1(geom, r2, 3, mask)};
  return out;
}

ResidualReport structure_residual(const Geometry& geom, const NoetherState2D& st) {
  require_chart2(geom, "structure_residual");
  check_state(geom, st, "structure_residual");
  const Grid& G = *geom.grid;
  size_t N = geom.node_count();
  auto div = metric_divergence(geom, geom.dPhi, 3, geom.acc);
  auto dS = gradient(G, st.S, 1, geom.acc);
  auto dR = gradient(G, st.R, 3, geom.acc);
  std::vector<double> r(N * 3);
  parallel_for(N, [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      const double* d1 = &geom.dPhi[(idx * 2 + 0) * 3];
      const double* d2 = &geom.dPhi[(idx * 2 + 1) * 3];
      double c1[3], c2[3];
      cx3(&dR[(idx * 2 + 0) * 3], d2, c1);
      cx3(&dR[(idx * 2 + 1) * 3], d1, c2);
      double sg = geom.sqrtdet[idx];
      for (int c = 0; c < 3; ++c) {
        double wedge = dS[idx * 2 + 0] * d2[c] - dS[idx * 2 + 1] * d1[c] + c1[c] - c2[c];
        r[idx * 3 + c] = div[idx * 3 + c] / sg - wedge / sg;
      }
    }
  });
  auto mask = residual_mask(G);
  return {"structure", "sup", sup_masked(r, 3, mask)};
}

ResidualReport structure_residual_conformal(const Geometry& geom, const NoetherState2D& st,
                                            double conformal_tol) {
  require_chart2(geom, "structure_residual_conformal");
  check_state(geom, st, "structure_residual_conformal");
  const Grid& G = *geom.grid;
  size_t N = geom.node_count();
  auto mask = residual_mask(G);
  for (size_t idx = 0; idx < N; ++idx) {
    if (!mask[idx]) continue;
    const double* gm = &geom.g[idx * 4];
    double tr = gm[0] + gm[3];
    if (2.0 * std::abs(gm[1]) > conformal_tol * tr ||
        std::abs(gm[0] - gm[3]) > conformal_tol * tr) {
      throw DomainError("NonConformalChart: flat-Laplacian structure form needs g ~ e^{2l} I");
    }
  }
  auto lap1 = differentiate(G, G.values, 3, 0, 2, geom.acc);
  auto lap2 = differentiate(G, G.values, 3, 1, 2, geom.acc);
  auto dS = gradient(G, st.S, 1, geom.acc);
  auto dR = gradient(G, st.R, 3, geom.acc);
  std::vector<double> r(N * 3);
  parallel_for(N, [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      const double* d1 = &geom.dPhi[(idx * 2 + 0) * 3];
      const double* d2 = &geom.dPhi[(idx * 2 + 1) * 3];
      double c1[3], c2[3];
      cx3(&dR[(idx * 2 + 0) * 3], d2, c1);
      cx3(&dR[(idx * 2 + 1) * 3], d1, c2);
      for (int c = 0; c < 3; ++c) {
        double wedge = dS[idx * 2 + 0] * d2[c] - dS[idx * 2 + 1] * d1[c] + c1[c] - c2[c];
        r[idx * 3 + c] = lap1[idx * 3 + c] + lap2[idx * 3 + c] - wedge;
      }
    }
  });
  return {"structure_conformal", "sup", sup_masked(r, 3, mask)};
}

LaplaceSystemResiduals laplace_system_residuals(const Geometry& geom, const NoetherState2D& st) {
  require_chart2(geom, "laplace_system_residuals");
  check_state(geom, st, "laplace_system_residuals");
  const Grid& G = *geom.grid;
  size_t N = geom.node_count();
  auto lapS = laplace_beltrami(geom, st.S, 1, geom.acc);
  auto lapR = laplace_beltrami(geom, st.R, 3, geom.acc);
  auto dS = gradient(G, st.S, 1, geom.acc);
  auto dR = gradient(G, st.R, 3, geom.acc);
  std::vector<double> rS(N), rR(N * 3);
  parallel_for(N, [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      const double* n1 = &geom.dn[(idx * 2 + 0) * 3];
      const double* n2 = &geom.dn[(idx * 2 + 1) * 3];
      const double* R1 = &dR[(idx * 2 + 0) * 3];
      const double* R2 = &dR[(idx * 2 + 1) * 3];
      double sg = geom.sqrtdet[idx];
      double dot = 0.0;
      for (int c = 0; c < 3; ++c) dot += n1[c] * R2[c] - n2[c] * R1[c];
      rS[idx] = lapS[idx] - dot / sg;
      double c1[3], c2[3];
      cx3(R1, n2, c1);
      cx3(R2, n1, c2);
      for (int c = 0; c < 3; ++c) {
        double wedge = dS[idx * 2 + 0] * n2[c] - dS[idx * 2 + 1] * n1[c] - (c1[c] - c2[c]);
        rR[idx * 3 + c] = lapR[idx * 3 + c] - wedge / sg;
      }
    }
  });
  auto mask = residual_mask(G);
  LaplaceSystemResiduals out;
  out.s_eq = {"laplace_S", "sup", sup_masked(rS, 1, mask)};
  out.r_eq = {"laplace_R", "sup", sup_masked(rR, 3, mask)};
  return out;
}

ResidualReport inversion_current_residual(const Geometry& geom, const NoetherState2D& st) {
  require_chart2(geom, "inversion_current_residual");
  check_state(geom, st, "inversion_current_residual");
  size_t N = geom.node_count();
  auto j = hodge_1form(geom, geom.dPhi, 3);
  parallel_for(N, [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      const double* R = &st.R[idx * 3];
      for (int i = 0; i < 2; ++i) {
        const double* dP = &geom.dPhi[(idx * 2 + i) * 3];
        double cr[3];
        cx3(R, dP, cr);
        for (int c = 0; c < 3; ++c) {
          j[(idx * 2 + i) * 3 + c] -= cr[c] + st.S[idx] * dP[c];
        }
      }
    }
  });
  auto mask = residual_mask(*geom.grid);
  return {"inversion_current", "sup", sup_masked(curl_density(geom, j, 3), 3, mask)};
}

}  // namespace wkit
