#include "wkit/conserve4d.hpp"

#include <algorithm>
#include <cmath>

namespace wkit {

namespace {

// Same fixed-fraction window as the surface residuals, but the node floor is
// deeper: the tension field differentiates Lap_g H, so one-sided stencil
// windows (nodes 0..1) pollute H to node 1, Lap_g H to node 3, d(Lap_g H) and
// V to node 5, and d(*_g V) to node 7.
constexpr int kResidualCollarMin4 = 8;
constexpr double kResidualMargin4 = 0.2;

std::vector<uint8_t> residual_mask4(const Grid& G) {
  int collar = kResidualCollarMin4;
  for (int a = 0; a < G.n; ++a) {
    if (!G.periodic[a]) {
      collar = std::max(collar, static_cast<int>(std::ceil(kResidualMargin4 * (G.dims[a] - 1))));
    }
  }
  return interior_mask(G, collar);
}

void require_chart4(const Geometry& geom, const char* what) {
  if (geom.n != 4 || geom.m != 5) {
    throw DomainError(std::string("DimensionMismatch: ") + what + " needs a 4d chart in R^5");
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

// base pair masks in the order (01,02,03,12,13,23); ambient pairs of R^5 in
// lexicographic order
constexpr unsigned kPair4[6] = {3u, 5u, 9u, 6u, 10u, 12u};
constexpr unsigned kAmb2[10] = {3u, 5u, 9u, 17u, 6u, 10u, 18u, 12u, 20u, 24u};
constexpr int kAmb2Pair[10][2] = {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2},
                                  {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}};

Mixed mixed_axpy(const Mixed& a, double s, const Mixed& b) {
  Mixed out = a;
  for (size_t k = 0; k < out.c.size(); ++k) out.c[k] += s * b.c[k];
  return out;
}

Mixed dphi_mixed(const double* dPhi) {
  Mixed out(5, 4);
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 5; ++c) out.at(1u << c, 1u << i) = dPhi[i * 5 + c];
  }
  return out;
}

}  // namespace

std::vector<double> tension4(const Geometry& geom) {
  require_chart4(geom, "tension4");
  const Grid& G = *geom.grid;
  size_t N = geom.node_count();
  auto dH = gradient(G, geom.H, 1, geom.acc);
  auto lapH = laplace_beltrami(geom, geom.H, 1, geom.acc);
  auto dn = gradient(G, geom.nrm, 5, geom.acc);
  std::vector<double> nlap(N * 5);
  for (size_t idx = 0; idx < N; ++idx) {
    for (int c = 0; c < 5; ++c) nlap[idx * 5 + c] = geom.nrm[idx * 5 + c] * lapH[idx];
  }
  auto dnlap = gradient(G, nlap, 5, geom.acc);
  std::vector<double> V(N * 4 * 5);
  parallel_for(N, [&](size_t lo, size_t hi) {
    double gi[16];
    for (size_t idx = lo; idx < hi; ++idx) {
      geom.ginv_at(idx, gi);
      const double* dPhi = &geom.dPhi[idx * 20];
      const double* dh = &dH[idx * 4];
      double dhr[4];
      for (int i = 0; i < 4; ++i) {
        dhr[i] = gi[i * 4 + 0] * dh[0] + gi[i * 4 + 1] * dh[1] + gi[i * 4 + 2] * dh[2] +
                 gi[i * 4 + 3] * dh[3];
      }
      // <dPhi, dH>_g per ambient component and |dH|_g^2
      double p[5];
      for (int c = 0; c < 5; ++c) {
        p[c] = dhr[0] * dPhi[0 * 5 + c] + dhr[1] * dPhi[1 * 5 + c] + dhr[2] * dPhi[2 * 5 + c] +
               dhr[3] * dPhi[3 * 5 + c];
      }
      double dh2 = dhr[0] * dh[0] + dhr[1] * dh[1] + dhr[2] * dh[2] + dhr[3] * dh[3];
      for (int i = 0; i < 4; ++i) {
        for (int c = 0; c < 5; ++c) {
          size_t k = (idx * 4 + i) * 5 + c;
          V[k] = 2.0 * p[c] * dh[i] - 0.5 * dnlap[k] + lapH[idx] * dn[k] - dh2 * dPhi[i * 5 + c];
        }
      }
    }
  });
  return V;
}

El4Residual el4_residual(const Geometry& geom) {
  require_chart4(geom, "el4_residual");
  const Grid& G = *geom.grid;
  auto V = tension4(geom);
  auto div = metric_divergence(geom, V, 5, geom.acc);
  size_t N = geom.node_count();
  El4Residual out;
  out.density.resize(N * 5);
  for (size_t idx = 0; idx < N; ++idx) {
    for (int c = 0; c < 5; ++c) out.density[idx * 5 + c] = div[idx * 5 + c] / geom.sqrtdet[idx];
  }
  auto mask = residual_mask4(G);
  out.sup = {"el4", "sup", sup_masked(out.density, 5, mask)};
  auto qw = quad_weights(G);
  double acc = 0.0;
  for (size_t idx = 0; idx < N; ++idx) {
    if (!mask[idx]) continue;
    double s = 0.0;
    for (int c = 0; c < 5; ++c) s += sq(out.density[idx * 5 + c]);
    double w = qw[idx] * geom.sqrtdet[idx];
    if (!G.pou.empty()) w *= G.pou[idx];
    acc += w * s;
  }
  out.l2 = {"el4", "L2", std::sqrt(acc)};
  return out;
}

Noether4Residuals noether4_residuals(const Geometry& geom, const std::vector<double>& L) {
  require_chart4(geom, "noether4_residuals");
  const Grid& G = *geom.grid;
  size_t N = geom.node_count();
  bool haveL = !L.empty();
  if (haveL && L.size() != N * 30) {
    throw DomainError("GradeMismatch: noether4_residuals needs an R^5-valued 2-form, layout N*6*5");
  }
  auto lapH = laplace_beltrami(geom, geom.H, 1, geom.acc);
  std::vector<double> H2(N);
  for (size_t idx = 0; idx < N; ++idx) H2[idx] = sq(geom.H[idx]);
  auto dH2 = gradient(G, H2, 1, geom.acc);

  // dilation current L .|_g dPhi + d(H^2), scalar-valued 1-form; rotation
  // current -L ^|_g dPhi - 1/2 Lap_g H n ^ dPhi, Lambda^2 R^5-valued 1-form
  std::vector<double> dil(N * 4), rot(N * 4 * 10);
  parallel_for(N, [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      for (int i = 0; i < 4; ++i) dil[idx * 4 + i] = dH2[idx * 4 + i];
      const double* dPhi = &geom.dPhi[idx * 20];
      const double* nv = &geom.nrm[idx * 5];
      if (!haveL) {
        // L = 0 leaves only -1/2 Lap_g H n ^ dPhi; assembled directly, the
        // graded machinery reduces to this same bilinear expression
        for (int i = 0; i < 4; ++i) {
          for (int a = 0; a < 10; ++a) {
            int c = kAmb2Pair[a][0], cc = kAmb2Pair[a][1];
            rot[(idx * 4 + i) * 10 + a] =
                -0.5 * lapH[idx] * (nv[c] * dPhi[i * 5 + cc] - nv[cc] * dPhi[i * 5 + c]);
          }
        }
        continue;
      }
      MetricAtPoint M = geom.metric_at(idx);
      Mixed dPhiMx = dphi_mixed(dPhi);
      Mixed Lmx(5, 4);
      for (int q = 0; q < 6; ++q) {
        for (int c = 0; c < 5; ++c) Lmx.at(1u << c, kPair4[q]) = L[(idx * 6 + q) * 5 + c];
      }
      Mixed ldot = mixed_product(AmbOp::Dot, BaseOp::InteriorG, Lmx, dPhiMx, &M);
      for (int i = 0; i < 4; ++i) dil[idx * 4 + i] += ldot.at(0u, 1u << i);
      Mixed bwedge = mixed_product(AmbOp::Wedge, BaseOp::InteriorG, Lmx, dPhiMx, &M);
      Mixed nMx(5, 4);
      for (int c = 0; c < 5; ++c) nMx.at(1u << c, 0u) = nv[c];
      Mixed nw = mixed_product(AmbOp::Wedge, BaseOp::Wedge, nMx, dPhiMx, nullptr);
      for (int i = 0; i < 4; ++i) {
        for (int a = 0; a < 10; ++a) {
          rot[(idx * 4 + i) * 10 + a] =
              -bwedge.at(kAmb2[a], 1u << i) - 0.5 * lapH[idx] * nw.at(kAmb2[a], 1u << i);
        }
      }
    }
  });

  auto mask = residual_mask4(G);
  auto finish = [&](const char* name, std::vector<double>& cur, int mc) {
    auto div = metric_divergence(geom, cur, mc, geom.acc);
    for (size_t idx = 0; idx < N; ++idx) {
      for (int c = 0; c < mc; ++c) div[idx * mc + c] /= geom.sqrtdet[idx];
    }
    return ResidualReport{name, "sup", sup_masked(div, mc, mask)};
  };
  Noether4Residuals out;
  out.dilation = finish("noether4_dilation", dil, 1);
  out.rotation = finish("noether4_rotation", rot, 10);
  return out;
}

HsrDefects hsr_identity_check(const HsrPoint& p, const Mixed& L) {
  if (L.m != 5 || L.n != 4) {
    throw DomainError("GradeMismatch: hsr_identity_check needs L in Lambda^1 R^5 x Lambda^2");
  }
  for (unsigned A = 0; A < 32; ++A) {
    for (unsigned B = 0; B < 16; ++B) {
      if (L.at(A, B) != 0.0 && (grade(A) != 1 || grade(B) != 2)) {
        throw DomainError("GradeMismatch: hsr_identity_check needs an R^5-valued 2-form");
      }
    }
  }
  double gmat[16];
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int c = 0; c < 5; ++c) s += p.dPhi[i][c] * p.dPhi[j][c];
      gmat[i * 4 + j] = s;
    }
  }
  MetricAtPoint M = MetricAtPoint::make(4, gmat);
  Mixed dPhiMx = dphi_mixed(&p.dPhi[0][0]);
  Mixed nMx(5, 4), dH2Mx(5, 4);
  for (int c = 0; c < 5; ++c) nMx.at(1u << c, 0u) = p.nrm[c];
  for (int i = 0; i < 4; ++i) dH2Mx.at(0u, 1u << i) = p.dH2[i];

  Mixed ldot = mixed_product(AmbOp::Dot, BaseOp::InteriorG, L, dPhiMx, &M);
  Mixed lwedge = mixed_product(AmbOp::Wedge, BaseOp::InteriorG, L, dPhiMx, &M);
  Mixed nw = mixed_product(AmbOp::Wedge, BaseOp::Wedge, nMx, dPhiMx, nullptr);

  Mixed a = mixed_axpy(mixed_axpy(Mixed(5, 4), -1.0, ldot), -1.0, dH2Mx);
  Mixed b = mixed_axpy(mixed_axpy(Mixed(5, 4), -1.0, lwedge), -0.5 * p.lapH, nw);
  Mixed lhs = mixed_axpy(mixed_product(AmbOp::Interior, BaseOp::InteriorG, b, dPhiMx, &M), 1.0,
                         mixed_product(AmbOp::Wedge, BaseOp::InteriorG, a, dPhiMx, &M));
  Mixed rhs(5, 4);
  for (int c = 0; c < 5; ++c) {
    double pair = 0.0;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) pair += M.ginv[i * 4 + j] * p.dH2[i] * p.dPhi[j][c];
    }
    rhs.at(1u << c, 0u) = 2.0 * p.lapH * p.nrm[c] - pair;
  }

  HsrDefects out;
  out.hsr = mixed_axpy(lhs, -1.0, rhs).max_abs();
  out.ii7a = mixed_axpy(mixed_product(AmbOp::Interior, BaseOp::InteriorG, lwedge, dPhiMx, &M), 1.0,
                        mixed_product(AmbOp::Wedge, BaseOp::InteriorG, ldot, dPhiMx, &M))
                 .max_abs();
  out.ii7b = mixed_axpy(mixed_product(AmbOp::Interior, BaseOp::InteriorG, nw, dPhiMx, &M), 4.0, nMx)
                 .max_abs();
  return out;
}

void random_hsr_draw(uint64_t seed, HsrPoint& p, Mixed& L) {
  Rng rng(seed);
  // frame rejection keeps the Gram matrix well conditioned so the identity
  // defects stay at roundoff scale
  for (;;) {
    for (int i = 0; i < 4; ++i) {
      for (int c = 0; c < 5; ++c) p.dPhi[i][c] = rng.uniform(-1.0, 1.0);
    }
    double gmat[16];
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        double s = 0.0;
        for (int c = 0; c < 5; ++c) s += p.dPhi[i][c] * p.dPhi[j][c];
        gmat[i * 4 + j] = s;
      }
    }
    if (det_small(4, gmat) > 0.05) break;
  }
  // unit normal from the 4x4 minors of the frame matrix
  double nn = 0.0;
  for (int c = 0; c < 5; ++c) {
    double sub[16];
    for (int i = 0; i < 4; ++i) {
      int col = 0;
      for (int cc = 0; cc < 5; ++cc) {
        if (cc == c) continue;
        sub[i * 4 + col++] = p.dPhi[i][cc];
      }
    }
    p.nrm[c] = (c % 2 == 0 ? 1.0 : -1.0) * det_small(4, sub);
    nn += sq(p.nrm[c]);
  }
  nn = std::sqrt(nn);
  for (int c = 0; c < 5; ++c) p.nrm[c] /= nn;
  for (int i = 0; i < 4; ++i) p.dH2[i] = rng.uniform(-1.0, 1.0);
  p.lapH = rng.uniform(-1.0, 1.0);
  L = Mixed(5, 4);
  for (int c = 0; c < 5; ++c) {
    for (unsigned q : kPair4) L.at(1u << c, q) = rng.uniform(-1.0, 1.0);
  }
}

}  // namespace wkit
