#include "wkit/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <sstream>

namespace wkit {

MetricAtPoint Geometry::metric_at(size_t idx) const {
  return MetricAtPoint::make(n, &g[idx * n * n]);
}

void Geometry::ginv_at(size_t idx, double* out) const {
  if (!ginv.empty()) {
    for (int k = 0; k < n * n; ++k) out[k] = ginv[idx * n * n + k];
    return;
  }
  double det = invert_small(n, &g[idx * n * n], out);
  if (!(det > 0.0)) {
    std::ostringstream os;
    os << "DegenerateMetric: det g = " << det << " at node " << idx;
    throw DomainError(os.str());
  }
}

std::vector<double> gradient(const Grid& G, const std::vector<double>& f, int mc, int acc) {
  size_t N = G.node_count();
  std::vector<double> out(N * G.n * mc, 0.0);
  for (int i = 0; i < G.n; ++i) {
    auto d = differentiate(G, f, mc, i, 1, acc);
    parallel_for(N, [&](size_t b, size_t e) {
      for (size_t idx = b; idx < e; ++idx) {
        for (int c = 0; c < mc; ++c) out[(idx * G.n + i) * mc + c] = d[idx * mc + c];
      }
    });
  }
  return out;
}

namespace {

// normal direction scaled by sqrt(det g): m = 3 cross product, m = 5 signed
// 4x4 cofactors of the 5x4 tangent matrix
void normal_raw(int n, int m, const double* dphi, double* w) {
  if (m == 3) {
    const double* a = dphi;           // D_1 Phi
    const double* b = dphi + m;       // D_2 Phi
    w[0] = a[1] * b[2] - a[2] * b[1];
    w[1] = a[2] * b[0] - a[0] * b[2];
    w[2] = a[0] * b[1] - a[1] * b[0];
    return;
  }
  // rows of A are ambient components, columns are axes
  double A[5][4];
  for (int r = 0; r < m; ++r) {
    for (int i = 0; i < n; ++i) A[r][i] = dphi[i * m + r];
  }
  for (int c = 0; c < m; ++c) {
    double sub[16];
    int rr = 0;
    for (int r = 0; r < m; ++r) {
      if (r == c) continue;
      for (int i = 0; i < 4; ++i) sub[rr * 4 + i] = A[r][i];
      ++rr;
    }
    double d = det_small(4, sub);
    w[c] = (c % 2 == 0) ? d : -d;  // (-1)^{c} with 0-based c = (-1)^{c+1} 1-based
  }
}

}  // namespace

Geometry compute_geometry(const Grid& G, int acc) {
  if (G.m != G.n + 1) throw DomainError("geometry: codimension must be 1");
  Geometry geo;
  geo.grid = &G;
  geo.n = G.n;
  geo.m = G.m;
  geo.acc = acc;
  const int n = G.n, m = G.m;
  const size_t N = G.node_count();

  geo.dPhi.assign(N * n * m, 0.0);
  for (int i = 0; i < n; ++i) {
    auto d = differentiate(G, G.values, m, i, 1, acc);
    parallel_for(N, [&](size_t b, size_t e) {
      for (size_t idx = b; idx < e; ++idx) {
        for (int c = 0; c < m; ++c) {
          geo.dPhi[(idx * n + i) * m + c] = d[idx * m + c] + G.affine[c * 4 + i];
        }
      }
    });
  }

  geo.g.assign(N * n * n, 0.0);
  geo.sqrtdet.assign(N, 0.0);
  geo.nrm.assign(N * m, 0.0);
  if (n == 2) geo.ginv.assign(N * n * n, 0.0);
  for (size_t idx = 0; idx < N; ++idx) {
    const double* dp = &geo.dPhi[idx * n * m];
    double* gg = &geo.g[idx * n * n];
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (int c = 0; c < m; ++c) s += dp[i * m + c] * dp[j * m + c];
        gg[i * n + j] = gg[j * n + i] = s;
      }
    }
    double inv[16];
    double det = invert_small(n, gg, inv);
    if (!(det > 0.0) || !std::isfinite(det)) {
      std::ostringstream os;
      os << "DegenerateMetric: det g = " << det << " at node " << idx;
      throw DomainError(os.str());
    }
    geo.sqrtdet[idx] = std::sqrt(det);
    if (n == 2) {
      for (int k = 0; k < 4; ++k) geo.ginv[idx * 4 + k] = inv[k];
    }
    double w[5];
    normal_raw(n, m, dp, w);
    double wn = 0.0;
    for (int c = 0; c < m; ++c) wn += w[c] * w[c];
    wn = std::sqrt(wn);
    if (!(wn > 0.0)) {
      std::ostringstream os;
      os << "DegenerateMetric: vanishing normal at node " << idx;
      throw DomainError(os.str());
    }
    for (int c = 0; c < m; ++c) geo.nrm[idx * m + c] = w[c] / wn;
  }

  geo.II.assign(N * n * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      std::vector<double> dij;
      if (i == j) {
        dij = differentiate(G, G.values, m, i, 2, acc);
      } else {
        dij = differentiate(G, differentiate(G, G.values, m, i, 1, acc), m, j, 1, acc);
      }
      parallel_for(N, [&](size_t b, size_t e) {
        for (size_t idx = b; idx < e; ++idx) {
          double s = 0.0;
          for (int c = 0; c < m; ++c) s += geo.nrm[idx * m + c] * dij[idx * m + c];
          geo.II[idx * n * n + i * n + j] = s;
          geo.II[idx * n * n + j * n + i] = s;
        }
      });
    }
  }

  geo.H.assign(N, 0.0);
  for (size_t idx = 0; idx < N; ++idx) {
    double inv[16];
    geo.ginv_at(idx, inv);
    double tr = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) tr += inv[i * n + j] * geo.II[idx * n * n + j * n + i];
    }
    geo.H[idx] = tr / n;
  }

  if (n == 2) {
    geo.K.assign(N, 0.0);
    for (size_t idx = 0; idx < N; ++idx) {
      const double* II = &geo.II[idx * 4];
      double detII = II[0] * II[3] - II[1] * II[2];
      geo.K[idx] = detII / sq(geo.sqrtdet[idx]);
    }
    geo.dn = gradient(G, geo.nrm, m, acc);
  }
  return geo;
}

std::vector<double> metric_divergence(const Geometry& geom, const std::vector<double>& omega,
                                      int mc, int acc) {
  const Grid& G = *geom.grid;
  const int n = geom.n;
  const size_t N = G.node_count();
  if (omega.size() != N * n * mc) throw DomainError("metric_divergence: bad field size");
  std::vector<std::vector<double>> flux(n);
  for (int i = 0; i < n; ++i) flux[i].assign(N * mc, 0.0);
  parallel_for(N, [&](size_t b, size_t e) {
    double inv[16];
    for (size_t idx = b; idx < e; ++idx) {
      geom.ginv_at(idx, inv);
      double sg = geom.sqrtdet[idx];
      for (int i = 0; i < n; ++i) {
        for (int c = 0; c < mc; ++c) {
          double s = 0.0;
          for (int j = 0; j < n; ++j) s += inv[i * n + j] * omega[(idx * n + j) * mc + c];
          flux[i][idx * mc + c] = sg * s;
        }
      }
    }
  });
  std::vector<double> out(N * mc, 0.0);
  for (int i = 0; i < n; ++i) {
    auto d = differentiate(G, flux[i], mc, i, 1, acc);
    for (size_t k = 0; k < out.size(); ++k) out[k] += d[k];
  }
  return out;
}

std::vector<double> laplace_beltrami(const Geometry& geom, const std::vector<double>& f,
                                     int mc, int acc) {
  auto grad = gradient(*geom.grid, f, mc, acc);
  auto div = metric_divergence(geom, grad, mc, acc);
  const size_t N = geom.node_count();
  parallel_for(N, [&](size_t b, size_t e) {
    for (size_t idx = b; idx < e; ++idx) {
      for (int c = 0; c < mc; ++c) div[idx * mc + c] /= geom.sqrtdet[idx];
    }
  });
  return div;
}

std::vector<double> curl2(const Grid& G, const std::vector<double>& omega, int mc, int acc) {
  if (G.n != 2) throw DomainError("curl2: n must be 2");
  const size_t N = G.node_count();
  std::vector<double> s1(N * mc), s2(N * mc);
  for (size_t idx = 0; idx < N; ++idx) {
    for (int c = 0; c < mc; ++c) {
      s1[idx * mc + c] = omega[(idx * 2 + 0) * mc + c];
      s2[idx * mc + c] = omega[(idx * 2 + 1) * mc + c];
    }
  }
  auto d1s2 = differentiate(G, s2, mc, 0, 1, acc);
  auto d2s1 = differentiate(G, s1, mc, 1, 1, acc);
  std::vector<double> out(N * mc);
  for (size_t k = 0; k < out.size(); ++k) out[k] = d1s2[k] - d2s1[k];
  return out;
}

std::vector<double> hodge_1form(const Geometry& geom, const std::vector<double>& w, int mc) {
  size_t N = geom.node_count();
  std::vector<double> out(N * 2 * mc);
  parallel_for(N, [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      const double* Gi = &geom.ginv[idx * 4];
      double sg = geom.sqrtdet[idx];
      for (int c = 0; c < mc; ++c) {
        double w1 = w[(idx * 2 + 0) * mc + c];
        double w2 = w[(idx * 2 + 1) * mc + c];
        out[(idx * 2 + 0) * mc + c] = -sg * (Gi[2] * w1 + Gi[3] * w2);
        out[(idx * 2 + 1) * mc + c] = sg * (Gi[0] * w1 + Gi[1] * w2);
      }
    }
  });
  return out;
}

namespace {

// integral of the degree-3 interpolant over one grid cell [k, k+1]; the
// identical interior stencil at every step keeps the cumulative error smooth
// in the endpoint, which matters because downstream residuals differentiate
// the integrated field (trapezoid fine structure shows up there at 1e-5)
template <class F>
double cell_integral(F&& f, int k, int d, double h) {
  if (d < 4) return 0.5 * h * (f(k) + f(k + 1));
  if (k == 0) return h * (9 * f(0) + 19 * f(1) - 5 * f(2) + f(3)) / 24.0;
  if (k == d - 2) return h * (f(d - 4) - 5 * f(d - 3) + 19 * f(d - 2) + 9 * f(d - 1)) / 24.0;
  return h * (-f(k - 1) + 13 * f(k) + 13 * f(k + 1) - f(k + 2)) / 24.0;
}

std::vector<double> path_integrate(const Grid& G, const std::vector<double>& w, int mc,
                                   int b0, int b1, bool axis0_first) {
  int d0 = G.dims[0], d1 = G.dims[1];
  double h0 = G.h(0), h1 = G.h(1);
  std::vector<double> F(G.node_count() * mc, 0.0);
  auto node = [&](int i, int j) { return static_cast<size_t>(i) * d1 + j; };
  auto seg0 = [&](int k, int j, int c) {
    return cell_integral([&](int i) { return w[(node(i, j) * 2 + 0) * mc + c]; }, k, d0, h0);
  };
  auto seg1 = [&](int i, int k, int c) {
    return cell_integral([&](int j) { return w[(node(i, j) * 2 + 1) * mc + c]; }, k, d1, h1);
  };
  if (axis0_first) {
    for (int c = 0; c < mc; ++c) {
      for (int i = b0 + 1; i < d0; ++i) {
        F[node(i, b1) * mc + c] = F[node(i - 1, b1) * mc + c] + seg0(i - 1, b1, c);
      }
      for (int i = b0 - 1; i >= 0; --i) {
        F[node(i, b1) * mc + c] = F[node(i + 1, b1) * mc + c] - seg0(i, b1, c);
      }
    }
    parallel_for(d0, [&](size_t lo, size_t hi) {
      for (size_t i = lo; i < hi; ++i) {
        for (int c = 0; c < mc; ++c) {
          for (int j = b1 + 1; j < d1; ++j) {
            F[node(i, j) * mc + c] = F[node(i, j - 1) * mc + c] + seg1(i, j - 1, c);
          }
          for (int j = b1 - 1; j >= 0; --j) {
            F[node(i, j) * mc + c] = F[node(i, j + 1) * mc + c] - seg1(i, j, c);
          }
        }
      }
    });
  } else {
    for (int c = 0; c < mc; ++c) {
      for (int j = b1 + 1; j < d1; ++j) {
        F[node(b0, j) * mc + c] = F[node(b0, j - 1) * mc + c] + seg1(b0, j - 1, c);
      }
      for (int j = b1 - 1; j >= 0; --j) {
        F[node(b0, j) * mc + c] = F[node(b0, j + 1) * mc + c] - seg1(b0, j, c);
      }
    }
    parallel_for(d1, [&](size_t lo, size_t hi) {
      for (size_t j = lo; j < hi; ++j) {
        for (int c = 0; c < mc; ++c) {
          for (int i = b0 + 1; i < d0; ++i) {
            F[node(i, j) * mc + c] = F[node(i - 1, j) * mc + c] + seg0(i - 1, j, c);
          }
          for (int i = b0 - 1; i >= 0; --i) {
            F[node(i, j) * mc + c] = F[node(i + 1, j) * mc + c] - seg0(i, j, c);
          }
        }
      }
    });
  }
  return F;
}

}  // namespace

PathPrimitive integrate_1form(const Grid& G, const std::vector<double>& w, int mc, int b0,
                              int b1) {
  if (G.n != 2) throw DomainError("integrate_1form: n must be 2");
  if (G.periodic[0] || G.periodic[1]) {
    throw DomainError("NotSimplyConnected: axis-path primitives need a non-periodic chart");
  }
  if (b0 < 0 || b0 >= G.dims[0] || b1 < 0 || b1 >= G.dims[1]) {
    throw DomainError("DimensionMismatch: basepoint outside the grid");
  }
  PathPrimitive out;
  out.F = path_integrate(G, w, mc, b0, b1, true);
  auto alt = path_integrate(G, w, mc, b0, b1, false);
  double worst = 0.0;
  size_t N = G.node_count();
  for (size_t idx = 0; idx < N; ++idx) {
    double s = 0.0;
    for (int c = 0; c < mc; ++c) s += sq(out.F[idx * mc + c] - alt[idx * mc + c]);
    worst = std::max(worst, s);
  }
  out.defect = std::sqrt(worst);
  return out;
}

std::vector<double> grad_norm2(const Geometry& geom, const std::vector<double>& df) {
  const int n = geom.n;
  const size_t N = geom.node_count();
  std::vector<double> out(N, 0.0);
  parallel_for(N, [&](size_t b, size_t e) {
    double inv[16];
    for (size_t idx = b; idx < e; ++idx) {
      geom.ginv_at(idx, inv);
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) s += inv[i * n + j] * df[idx * n + i] * df[idx * n + j];
      }
      out[idx] = s;
    }
  });
  return out;
}

double weak_immersion_bound(const Geometry& geom, const std::vector<uint8_t>& mask) {
  const int n = geom.n;
  const size_t N = geom.node_count();
  double bound = 0.0;
  Eigen::MatrixXd M(n, n);
  for (size_t idx = 0; idx < N; ++idx) {
    if (!mask.empty() && !mask[idx]) continue;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) M(i, j) = geom.g[idx * n * n + i * n + j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    double lmin = es.eigenvalues()(0);
    double lmax = es.eigenvalues()(n - 1);
    bound = std::max(bound, std::max(lmax, 1.0 / lmin));
  }
  return bound;
}

void invert_atlas(Atlas& atlas, const double* center) {
  for (auto& chart : atlas.charts) {
    const size_t N = chart.node_count();
    const int m = chart.m;
    if (chart.has_affine()) {
      // bake the affine part in; the inverted map is not graph-like anyway
      std::array<int, 4> iv{};
      for (size_t idx = 0; idx < N; ++idx) {
        chart.unindex(idx, iv);
        for (int c = 0; c < m; ++c) {
          for (int i = 0; i < chart.n; ++i) {
            chart.values[idx * m + c] += chart.affine[c * 4 + i] * chart.coord(i, iv[i]);
          }
        }
      }
      chart.affine = {};
      if (std::any_of(chart.periodic.begin(), chart.periodic.begin() + chart.n,
                      [](bool p) { return p; })) {
        throw DomainError("invert_atlas: graph charts with periodic axes not invertible");
      }
    }
    for (size_t idx = 0; idx < N; ++idx) {
      double r2 = 0.0;
      for (int c = 0; c < m; ++c) r2 += sq(chart.values[idx * m + c] - center[c]);
      if (r2 < 1e-12) throw DomainError("InversionCenterOnSurface: |Phi - c|^2 too small");
      for (int c = 0; c < m; ++c) {
        chart.values[idx * m + c] = (chart.values[idx * m + c] - center[c]) / r2;
      }
    }
  }
}

double mean_identity_residual(const Geometry& geom, const std::vector<uint8_t>& mask) {
  const Grid& G = *geom.grid;
  auto lap = laplace_beltrami(geom, G.values, geom.m, geom.acc);
  // the affine part of graph charts is linear: Lap_g of it is not zero in
  // general, so rebuild from full dPhi instead when one is present
  if (G.has_affine()) {
    auto div = metric_divergence(geom, geom.dPhi, geom.m, geom.acc);
    for (size_t k = 0; k < lap.size(); ++k) lap[k] = div[k] / geom.sqrtdet[k / geom.m];
  }
  double worst = 0.0;
  const size_t N = geom.node_count();
  for (size_t idx = 0; idx < N; ++idx) {
    if (!mask.empty() && !mask[idx]) continue;
    double s = 0.0;
    for (int c = 0; c < geom.m; ++c) {
      s += sq(geom.H[idx] * geom.nrm[idx * geom.m + c] - lap[idx * geom.m + c] / geom.n);
    }
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

}  // namespace wkit
