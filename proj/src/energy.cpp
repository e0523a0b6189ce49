#include "wkit/energy.hpp"

#include <algorithm>
#include <cmath>

namespace wkit {

namespace {

std::string dims_string(const Atlas& A) {
  std::string s;
  for (size_t c = 0; c < A.charts.size(); ++c) {
    if (c) s += '+';
    for (int a = 0; a < A.n; ++a) {
      if (a) s += 'x';
      s += std::to_string(A.charts[c].dims[a]);
    }
  }
  return s;
}

std::string quadrature_string(const Atlas& A) {
  bool any_per = false, any_simp = false;
  for (const Grid& G : A.charts) {
    for (int a = 0; a < A.n; ++a) (G.periodic[a] ? any_per : any_simp) = true;
  }
  if (any_per && any_simp) return "mixed";
  return any_per ? "trapezoid" : "simpson";
}

void require_closed(const AtlasGeometry& AG, bool patch_ok, const char* what) {
  if (!AG.atlas->closed && !patch_ok)
    throw DomainError(std::string("OpenPatch: ") + what + " needs a closed atlas");
}

void require_n(const AtlasGeometry& AG, int n, const char* what) {
  if (AG.atlas->n != n)
    throw DomainError(std::string("DimensionMismatch: ") + what + " needs n = " +
                      std::to_string(n));
}

// C = A B for row-major n x n blocks
void matmul(int n, const double* A, const double* B, double* C) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += A[i * n + k] * B[k * n + j];
      C[i * n + j] = s;
    }
  }
}

double trace(int n, const double* A) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += A[i * n + i];
  return s;
}

struct ShapeTraces {
  double tr2, tr3, tr4;  // tr(S^k), S = g^{-1} II
};

ShapeTraces shape_traces(const Geometry& geom, size_t idx) {
  int n = geom.n;
  double Gi[16], S[16], S2[16], S3[16], S4[16];
  geom.ginv_at(idx, Gi);
  matmul(n, Gi, &geom.II[idx * n * n], S);
  matmul(n, S, S, S2);
  matmul(n, S2, S, S3);
  matmul(n, S2, S2, S4);
  return {trace(n, S2), trace(n, S3), trace(n, S4)};
}

// per-chart pointwise |dH|_g^2
std::vector<double> dh_norm2(const Geometry& geom) {
  auto dH = gradient(*geom.grid, geom.H, 1, geom.acc);
  return grad_norm2(geom, dH);
}

EnergyReport report_from_fields(const AtlasGeometry& AG, const std::string& name,
                                const std::vector<std::vector<double>>& fields) {
  return evaluate_functional(AG, name, [&fields](int c, size_t i) { return fields[c][i]; });
}

}  // namespace

AtlasGeometry compute_atlas_geometry(const Atlas& A, int acc) {
  AtlasGeometry AG;
  AG.atlas = &A;
  AG.acc = acc;
  AG.charts.reserve(A.charts.size());
  AG.weights.reserve(A.charts.size());
  for (const Grid& G : A.charts) {
    AG.charts.push_back(compute_geometry(G, acc));
    std::vector<double> w = quad_weights(G);
    if (!G.pou.empty()) {
      for (size_t i = 0; i < w.size(); ++i) w[i] *= G.pou[i];
    }
    AG.weights.push_back(std::move(w));
  }
  return AG;
}

double AtlasGeometry::measure() const {
  std::vector<double> partial;
  for (size_t c = 0; c < charts.size(); ++c) {
    const size_t N = charts[c].node_count();
    std::vector<double> terms(N);
    for (size_t i = 0; i < N; ++i) terms[i] = weights[c][i] * charts[c].sqrtdet[i];
    partial.push_back(pairwise_sum(terms.data(), N));
  }
  return pairwise_sum(partial.data(), partial.size());
}

EnergyReport evaluate_functional(const AtlasGeometry& AG, const std::string& name,
                                 const std::function<double(int, size_t)>& integrand) {
  EnergyReport R;
  R.name = name;
  R.resolution = dims_string(*AG.atlas);
  R.quadrature = quadrature_string(*AG.atlas);
  double fmin = 0.0, fmax = 0.0;
  bool seen = false;
  std::vector<double> partial;
  for (size_t c = 0; c < AG.charts.size(); ++c) {
    const Geometry& geom = AG.charts[c];
    const std::vector<double>& w = AG.weights[c];
    const size_t N = geom.node_count();
    std::vector<double> f(N), terms(N);
    parallel_for(N, [&](size_t lo, size_t hi) {
      for (size_t i = lo; i < hi; ++i) {
        f[i] = integrand(static_cast<int>(c), i);
        terms[i] = w[i] * geom.sqrtdet[i] * f[i];
      }
    });
    for (size_t i = 0; i < N; ++i) {
      if (w[i] <= 0.0) continue;
      if (!seen || f[i] < fmin) fmin = f[i];
      if (!seen || f[i] > fmax) fmax = f[i];
      seen = true;
    }
    partial.push_back(pairwise_sum(terms.data(), N));
  }
  R.value = pairwise_sum(partial.data(), partial.size());
  R.integrand_min = fmin;
  R.integrand_max = fmax;
  double meas = AG.measure();
  R.integrand_mean = meas > 0.0 ? R.value / meas : 0.0;
  return R;
}

EnergyReport willmore(const AtlasGeometry& AG, bool patch_ok) {
  require_n(AG, 2, "willmore");
  require_closed(AG, patch_ok, "willmore");
  return evaluate_functional(AG, "willmore",
                             [&AG](int c, size_t i) { return sq(AG.charts[c].H[i]); });
}

EnergyReport chern_lashof(const AtlasGeometry& AG) {
  require_n(AG, 2, "chern_lashof");
  require_closed(AG, false, "chern_lashof");
  return evaluate_functional(
      AG, "chern_lashof", [&AG](int c, size_t i) { return std::abs(AG.charts[c].K[i]); });
}

GaussBonnetReport gauss_bonnet(const AtlasGeometry& AG) {
  require_n(AG, 2, "gauss_bonnet");
  require_closed(AG, false, "gauss_bonnet");
  EnergyReport R = evaluate_functional(
      AG, "gauss_bonnet", [&AG](int c, size_t i) { return AG.charts[c].K[i]; });
  GaussBonnetReport out;
  out.total = R.value;
  out.genus_real = 1.0 - R.value / (4.0 * kPi);
  out.genus = static_cast<int>(std::llround(out.genus_real));
  return out;
}

double liouville_residual(const Geometry& geom, double conformal_tol) {
  if (geom.n != 2) throw DomainError("DimensionMismatch: liouville_residual needs n = 2");
  const Grid& G = *geom.grid;
  const size_t N = geom.node_count();
  std::vector<double> alpha(N);
  for (size_t i = 0; i < N; ++i) {
    double g11 = geom.g[i * 4 + 0], g12 = geom.g[i * 4 + 1], g22 = geom.g[i * 4 + 3];
    double s = g11 + g22;
    if (2.0 * std::abs(g12) > conformal_tol * s || std::abs(g11 - g22) > conformal_tol * s)
      throw DomainError("NonConformalChart: metric departs from e^{2a}(flat) at node " +
                        std::to_string(i));
    alpha[i] = 0.5 * std::log(g11);
  }
  std::vector<double> lap(N, 0.0);
  for (int a = 0; a < 2; ++a) {
    auto d2 = differentiate(G, alpha, 1, a, 2, 2);
    for (size_t i = 0; i < N; ++i) lap[i] += d2[i];
  }
  auto mask = interior_mask(G, 2);
  double sup = 0.0;
  for (size_t i = 0; i < N; ++i) {
    if (!mask[i]) continue;
    sup = std::max(sup, std::abs(-lap[i] - std::exp(2.0 * alpha[i]) * geom.K[i]));
  }
  return sup;
}

EnergyReport graham_reichert(const AtlasGeometry& AG, bool patch_ok) {
  require_n(AG, 4, "graham_reichert");
  require_closed(AG, patch_ok, "graham_reichert");
  std::vector<std::vector<double>> fields;
  for (const Geometry& geom : AG.charts) {
    std::vector<double> f = dh_norm2(geom);
    const size_t N = geom.node_count();
    parallel_for(N, [&](size_t lo, size_t hi) {
      for (size_t i = lo; i < hi; ++i) {
        ShapeTraces t = shape_traces(geom, i);
        double H2 = sq(geom.H[i]);
        f[i] += -H2 * t.tr2 + 7.0 * sq(H2);
      }
    });
    fields.push_back(std::move(f));
  }
  return report_from_fields(AG, "graham_reichert", fields);
}

CoerciveReport coercive_energy(const AtlasGeometry& AG, bool patch_ok) {
  require_n(AG, 4, "coercive_energy");
  require_closed(AG, patch_ok, "coercive_energy");
  const int n = 4;
  std::vector<std::vector<double>> fields, lower;
  for (const Geometry& geom : AG.charts) {
    const Grid& G = *geom.grid;
    const size_t N = geom.node_count();
    std::vector<double> f = dh_norm2(geom);
    std::vector<double> lb(N);
    std::array<std::vector<double>, 4> dg, dII;
    for (int a = 0; a < n; ++a) {
      dg[a] = differentiate(G, geom.g, n * n, a, 1, geom.acc);
      dII[a] = differentiate(G, geom.II, n * n, a, 1, geom.acc);
    }
    parallel_for(N, [&](size_t lo, size_t hi) {
      for (size_t i = lo; i < hi; ++i) {
        ShapeTraces t = shape_traces(geom, i);
        double H = geom.H[i];
        double ring2 = t.tr2 - n * sq(H);  // |IIo|^2
        f[i] = 4.0 * f[i] + sq(ring2) / 3.0 + 2.0 * sq(H) * t.tr2 - 4.0 * H * t.tr3 +
               2.0 * t.tr4;

        double Gi[16];
        geom.ginv_at(i, Gi);
        const size_t off = i * n * n;
        // Christoffels of g, then the covariant derivative of II
        double Gam[4][16];  // Gam[k][i*n+j]
        for (int k = 0; k < n; ++k) {
          for (int p = 0; p < n; ++p) {
            for (int q = 0; q < n; ++q) {
              double s = 0.0;
              for (int l = 0; l < n; ++l) {
                s += Gi[k * n + l] * (dg[p][off + q * n + l] + dg[q][off + p * n + l] -
                                      dg[l][off + p * n + q]);
              }
              Gam[k][p * n + q] = 0.5 * s;
            }
          }
        }
        double T[4][16];  // T[a][p*n+q] = D_a II_pq
        for (int a = 0; a < n; ++a) {
          for (int p = 0; p < n; ++p) {
            for (int q = 0; q < n; ++q) {
              double s = dII[a][off + p * n + q];
              for (int k = 0; k < n; ++k) {
                s -= Gam[k][a * n + p] * geom.II[off + k * n + q];
                s -= Gam[k][a * n + q] * geom.II[off + p * n + k];
              }
              T[a][p * n + q] = s;
            }
          }
        }
        double norm2 = 0.0;
        for (int a = 0; a < n; ++a) {
          for (int b = 0; b < n; ++b) {
            double gab = Gi[a * n + b];
            if (gab == 0.0) continue;
            double inner = 0.0;
            for (int p = 0; p < n; ++p) {
              for (int k = 0; k < n; ++k) {
                double gpk = Gi[p * n + k];
                if (gpk == 0.0) continue;
                for (int q = 0; q < n; ++q) {
                  for (int l = 0; l < n; ++l) {
                    inner += gpk * Gi[q * n + l] * T[a][p * n + q] * T[b][k * n + l];
                  }
                }
              }
            }
            norm2 += gab * inner;
          }
        }
        lb[i] = norm2 + sq(t.tr2);  // |DII|^2 + |II|^4
      }
    });
    fields.push_back(std::move(f));
    lower.push_back(std::move(lb));
  }
  CoerciveReport out;
  out.energy = report_from_fields(AG, "coercive_energy", fields);
  out.lower_bound = report_from_fields(AG, "coercive_lower_bound", lower).value;
  return out;
}

EnergyReport dirichlet_h(const AtlasGeometry& AG, bool patch_ok) {
  require_n(AG, 4, "dirichlet_h");
  require_closed(AG, patch_ok, "dirichlet_h");
  std::vector<std::vector<double>> fields;
  for (const Geometry& geom : AG.charts) {
    std::vector<double> f = dh_norm2(geom);
    for (double& v : f) v *= 0.5;
    fields.push_back(std::move(f));
  }
  return report_from_fields(AG, "dirichlet_h", fields);
}

ConstrainedQuantities constrained_quantities(const AtlasGeometry& AG) {
  require_n(AG, 2, "constrained_quantities");
  require_closed(AG, false, "constrained_quantities");
  if (AG.atlas->m != 3)
    throw DomainError("DimensionMismatch: constrained_quantities needs m = 3");
  EnergyReport vol = evaluate_functional(AG, "enclosed_volume", [&AG](int c, size_t i) {
    const Geometry& geom = AG.charts[c];
    double phi[3];
    geom.grid->phi_at(i, phi);
    double dot = 0.0;
    for (int k = 0; k < 3; ++k) dot += phi[k] * geom.nrm[i * 3 + k];
    return dot / 3.0;
  });
  EnergyReport hm = evaluate_functional(
      AG, "total_mean", [&AG](int c, size_t i) { return AG.charts[c].H[i]; });
  double area = AG.measure();
  ConstrainedQuantities out;
  out.enclosed_volume = vol.value;
  out.isoperimetric = area / std::cbrt(sq(vol.value));
  out.total_mean = hm.value / std::sqrt(area);
  return out;
}

EnergyReport surface_measure(const AtlasGeometry& AG) {
  return evaluate_functional(AG, "measure", [](int, size_t) { return 1.0; });
}

}  // namespace wkit
