#include "wkit/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace wkit {

namespace {

void require_chart2(const Grid& G) {
  if (G.n != 2) throw DomainError("elliptic: chart must be 2D");
  if (G.dims[0] < 2 || G.dims[1] < 2) throw DomainError("elliptic: grid too small");
}

// bilinear cells with 2x2 Gauss points; node order inside a cell is
// (00, 10, 01, 11), l = di + 2*dj
struct CellOps {
  const Grid& G;
  int c0, c1;  // cell counts per axis
  double wq;   // quadrature weight per Gauss point
  double Nsh[4][4], Gx[4][4], Gy[4][4];

  explicit CellOps(const Grid& g) : G(g) {
    c0 = G.periodic[0] ? G.dims[0] : G.dims[0] - 1;
    c1 = G.periodic[1] ? G.dims[1] : G.dims[1] - 1;
    const double h0 = G.h(0), h1 = G.h(1);
    wq = 0.25 * h0 * h1;
    const double s = 0.5 / std::sqrt(3.0);
    const double pts[2] = {0.5 - s, 0.5 + s};
    for (int gi = 0; gi < 2; ++gi) {
      for (int gj = 0; gj < 2; ++gj) {
        const int q = gi * 2 + gj;
        const double xi = pts[gi], et = pts[gj];
        for (int dj = 0; dj < 2; ++dj) {
          for (int di = 0; di < 2; ++di) {
            const int l = di + 2 * dj;
            const double X = di ? xi : 1.0 - xi;
            const double E = dj ? et : 1.0 - et;
            Nsh[q][l] = X * E;
            Gx[q][l] = (di ? 1.0 : -1.0) / h0 * E;
            Gy[q][l] = X * (dj ? 1.0 : -1.0) / h1;
          }
        }
      }
    }
  }

  void corners(int ci, int cj, size_t out[4]) const {
    const int d0 = G.dims[0], d1 = G.dims[1];
    const int i1 = (ci + 1 == d0) ? (G.periodic[0] ? 0 : ci + 1) : ci + 1;
    const int j1 = (cj + 1 == d1) ? (G.periodic[1] ? 0 : cj + 1) : cj + 1;
    out[0] = size_t(ci) * d1 + cj;
    out[1] = size_t(i1) * d1 + cj;
    out[2] = size_t(ci) * d1 + j1;
    out[3] = size_t(i1) * d1 + j1;
  }
};

// y = K x with Dirichlet nodes held at zero on both sides
void apply_stiffness(const CellOps& C, const std::vector<double>& a,
                     const std::vector<uint8_t>& dir, const std::vector<double>& x,
                     std::vector<double>& y) {
  std::fill(y.begin(), y.end(), 0.0);
  size_t nd[4];
  for (int ci = 0; ci < C.c0; ++ci) {
    for (int cj = 0; cj < C.c1; ++cj) {
      C.corners(ci, cj, nd);
      double xl[4], al[4][3];
      for (int l = 0; l < 4; ++l) {
        xl[l] = (!dir.empty() && dir[nd[l]]) ? 0.0 : x[nd[l]];
        al[l][0] = a[nd[l] * 3 + 0];
        al[l][1] = a[nd[l] * 3 + 1];
        al[l][2] = a[nd[l] * 3 + 2];
      }
      for (int q = 0; q < 4; ++q) {
        double ux = 0, uy = 0, A0 = 0, A1 = 0, A2 = 0;
        for (int l = 0; l < 4; ++l) {
          ux += C.Gx[q][l] * xl[l];
          uy += C.Gy[q][l] * xl[l];
          A0 += C.Nsh[q][l] * al[l][0];
          A1 += C.Nsh[q][l] * al[l][1];
          A2 += C.Nsh[q][l] * al[l][2];
        }
        const double qx = A0 * ux + A1 * uy;
        const double qy = A1 * ux + A2 * uy;
        for (int l = 0; l < 4; ++l) {
          y[nd[l]] += C.wq * (C.Gx[q][l] * qx + C.Gy[q][l] * qy);
        }
      }
    }
  }
  if (!dir.empty()) {
    for (size_t i = 0; i < y.size(); ++i) {
      if (dir[i]) y[i] = 0.0;
    }
  }
}

std::vector<double> assemble_diag(const CellOps& C, const std::vector<double>& a,
                                  const std::vector<uint8_t>& dir, size_t N) {
  std::vector<double> diag(N, 0.0);
  size_t nd[4];
  for (int ci = 0; ci < C.c0; ++ci) {
    for (int cj = 0; cj < C.c1; ++cj) {
      C.corners(ci, cj, nd);
      double al[4][3];
      for (int l = 0; l < 4; ++l) {
        al[l][0] = a[nd[l] * 3 + 0];
        al[l][1] = a[nd[l] * 3 + 1];
        al[l][2] = a[nd[l] * 3 + 2];
      }
      for (int q = 0; q < 4; ++q) {
        double A0 = 0, A1 = 0, A2 = 0;
        for (int l = 0; l < 4; ++l) {
          A0 += C.Nsh[q][l] * al[l][0];
          A1 += C.Nsh[q][l] * al[l][1];
          A2 += C.Nsh[q][l] * al[l][2];
        }
        for (int l = 0; l < 4; ++l) {
          const double gx = C.Gx[q][l], gy = C.Gy[q][l];
          diag[nd[l]] += C.wq * (gx * (A0 * gx + A1 * gy) + gy * (A1 * gx + A2 * gy));
        }
      }
    }
  }
  if (!dir.empty()) {
    for (size_t i = 0; i < N; ++i) {
      if (dir[i]) diag[i] = 1.0;
    }
  }
  return diag;
}

std::vector<double> assemble_load(const CellOps& C, const std::vector<double>& a,
                                  const std::vector<double>& rhs,
                                  const std::vector<double>& shift, size_t N) {
  std::vector<double> b(N, 0.0);
  if (rhs.empty() && shift.empty()) return b;
  size_t nd[4];
  for (int ci = 0; ci < C.c0; ++ci) {
    for (int cj = 0; cj < C.c1; ++cj) {
      C.corners(ci, cj, nd);
      for (int q = 0; q < 4; ++q) {
        double rq = 0.0, wx = 0.0, wy = 0.0, A0 = 0, A1 = 0, A2 = 0;
        for (int l = 0; l < 4; ++l) {
          if (!rhs.empty()) rq += C.Nsh[q][l] * rhs[nd[l]];
          if (!shift.empty()) {
            wx += C.Nsh[q][l] * shift[nd[l] * 2 + 0];
            wy += C.Nsh[q][l] * shift[nd[l] * 2 + 1];
          }
          A0 += C.Nsh[q][l] * a[nd[l] * 3 + 0];
          A1 += C.Nsh[q][l] * a[nd[l] * 3 + 1];
          A2 += C.Nsh[q][l] * a[nd[l] * 3 + 2];
        }
        const double fx = A0 * wx + A1 * wy;
        const double fy = A1 * wx + A2 * wy;
        // weak form of D_i(a^{ij}(D_j u + shift_j)) = rhs flips the rhs sign
        for (int l = 0; l < 4; ++l) {
          b[nd[l]] -= C.wq * (C.Nsh[q][l] * rq + C.Gx[q][l] * fx + C.Gy[q][l] * fy);
        }
      }
    }
  }
  return b;
}

void check_spd(const std::vector<double>& a, size_t N) {
  for (size_t idx = 0; idx < N; ++idx) {
    const double a11 = a[idx * 3], a12 = a[idx * 3 + 1], a22 = a[idx * 3 + 2];
    if (!(a11 > 0.0) || !(a11 * a22 - a12 * a12 > 0.0)) {
      throw DomainError("DegenerateCoefficient: not SPD at node " + std::to_string(idx));
    }
  }
}

double subtract_mean(std::vector<double>& v) {
  double s = pairwise_sum(v.data(), v.size()) / double(v.size());
  for (double& x : v) x -= s;
  return s;
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

std::vector<uint8_t> boundary_mask(const Grid& G) {
  const size_t N = G.node_count();
  std::vector<uint8_t> mask(N, 0);
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < N; ++idx) {
    G.unindex(idx, iv);
    for (int a = 0; a < G.n; ++a) {
      if (!G.periodic[a] && (iv[a] == 0 || iv[a] == G.dims[a] - 1)) mask[idx] = 1;
    }
  }
  return mask;
}

SolveResult solve_divform(const EllipticProblem& P) {
  const Grid& G = *P.grid;
  require_chart2(G);
  const size_t N = G.node_count();
  if (P.a.size() != N * 3) throw DomainError("elliptic: coefficient size");
  if (!P.rhs.empty() && P.rhs.size() != N) throw DomainError("elliptic: rhs size");
  if (!P.shift.empty() && P.shift.size() != N * 2) throw DomainError("elliptic: shift size");
  if (!P.dirichlet.empty() && P.dirichlet.size() != N)
    throw DomainError("elliptic: dirichlet size");
  check_spd(P.a, N);

  const CellOps C(G);
  const bool neumann = P.dirichlet.empty();
  std::vector<double> b = assemble_load(C, P.a, P.rhs, P.shift, N);
  if (!neumann) {
    for (size_t i = 0; i < N; ++i) {
      if (P.dirichlet[i]) b[i] = 0.0;
    }
  } else {
    subtract_mean(b);
  }

  SolveResult R;
  R.u.assign(N, 0.0);
  const double nb = std::sqrt(dot(b, b));
  if (nb == 0.0) {
    R.converged = true;
    return R;
  }

  const std::vector<double> diag = assemble_diag(C, P.a, P.dirichlet, N);
  const double tol = 1e-10;
  const long maxit = 20L * long(N);

  std::vector<double> r = b, z(N), p(N), q(N), best = R.u;
  for (size_t i = 0; i < N; ++i) z[i] = r[i] / diag[i];
  if (neumann) subtract_mean(z);
  p = z;
  double rz = dot(r, z);
  double best_rn = nb;
  long it = 0;
  for (; it < maxit; ++it) {
    apply_stiffness(C, P.a, P.dirichlet, p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;  // numerically lost positivity
    const double alpha = rz / pq;
    for (size_t i = 0; i < N; ++i) {
      R.u[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    const double rn = std::sqrt(dot(r, r));
    if (rn < best_rn) {
      best_rn = rn;
      best = R.u;
    }
    if (rn <= tol * nb) {
      R.converged = true;
      break;
    }
    for (size_t i = 0; i < N; ++i) z[i] = r[i] / diag[i];
    if (neumann) subtract_mean(z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (size_t i = 0; i < N; ++i) p[i] = z[i] + beta * p[i];
  }
  R.iterations = int(std::min<long>(it + 1, maxit));
  R.rel_residual = best_rn / nb;
  if (!R.converged) R.u = best;
  if (neumann) subtract_mean(R.u);
  return R;
}

double quadratic_energy(const EllipticProblem& P, const std::vector<double>& u) {
  const Grid& G = *P.grid;
  require_chart2(G);
  const CellOps C(G);
  double E = 0.0;
  size_t nd[4];
  for (int ci = 0; ci < C.c0; ++ci) {
    for (int cj = 0; cj < C.c1; ++cj) {
      C.corners(ci, cj, nd);
      for (int q = 0; q < 4; ++q) {
        double vx = 0, vy = 0, A0 = 0, A1 = 0, A2 = 0;
        for (int l = 0; l < 4; ++l) {
          vx += C.Gx[q][l] * u[nd[l]];
          vy += C.Gy[q][l] * u[nd[l]];
          if (!P.shift.empty()) {
            vx += C.Nsh[q][l] * P.shift[nd[l] * 2 + 0];
            vy += C.Nsh[q][l] * P.shift[nd[l] * 2 + 1];
          }
          A0 += C.Nsh[q][l] * P.a[nd[l] * 3 + 0];
          A1 += C.Nsh[q][l] * P.a[nd[l] * 3 + 1];
          A2 += C.Nsh[q][l] * P.a[nd[l] * 3 + 2];
        }
        E += C.wq * (vx * (A0 * vx + A1 * vy) + vy * (A1 * vx + A2 * vy));
      }
    }
  }
  return E;
}

namespace {

// metric norm of a scalar 1-form against nodal {g11,g12,g22}
double form_norm2(const double* gm, double w1, double w2) {
  const double det = gm[0] * gm[2] - gm[1] * gm[1];
  return (gm[2] * w1 * w1 - 2.0 * gm[1] * w1 * w2 + gm[0] * w2 * w2) / det;
}

}  // namespace

WenteReport wente_solve(const Grid& G, const std::vector<double>& gmet,
                        const std::vector<double>& a, const std::vector<double>& b,
                        std::vector<uint8_t> dirichlet) {
  require_chart2(G);
  const size_t N = G.node_count();
  if (gmet.size() != N * 3) throw DomainError("wente_solve: metric size");
  if (a.size() != N || b.size() != N) throw DomainError("wente_solve: data size");

  EllipticProblem P;
  P.grid = &G;
  P.a.resize(N * 3);
  std::vector<double> sq(N);
  for (size_t idx = 0; idx < N; ++idx) {
    const double g11 = gmet[idx * 3], g12 = gmet[idx * 3 + 1], g22 = gmet[idx * 3 + 2];
    const double det = g11 * g22 - g12 * g12;
    if (!(det > 0.0) || !(g11 > 0.0))
      throw DomainError("DegenerateMetric: wente_solve at node " + std::to_string(idx));
    sq[idx] = std::sqrt(det);
    P.a[idx * 3 + 0] = g22 / sq[idx];
    P.a[idx * 3 + 1] = -g12 / sq[idx];
    P.a[idx * 3 + 2] = g11 / sq[idx];
  }

  const std::vector<double> da = gradient(G, a, 1, 4);
  const std::vector<double> db = gradient(G, b, 1, 4);
  P.rhs.resize(N);
  for (size_t idx = 0; idx < N; ++idx) {
    P.rhs[idx] = -(da[idx * 2] * db[idx * 2 + 1] - da[idx * 2 + 1] * db[idx * 2]);
  }
  P.dirichlet = dirichlet.empty() ? boundary_mask(G) : std::move(dirichlet);

  WenteReport W;
  W.sol = solve_divform(P);

  const std::vector<double> qw = quad_weights(G);
  const std::vector<double> du = gradient(G, W.sol.u, 1, 4);
  double i_u = 0.0, i_a = 0.0, i_b = 0.0;
  for (size_t idx = 0; idx < N; ++idx) {
    const double* gm = &gmet[idx * 3];
    const double w = qw[idx] * sq[idx];
    i_u += w * form_norm2(gm, du[idx * 2], du[idx * 2 + 1]);
    i_a += w * form_norm2(gm, da[idx * 2], da[idx * 2 + 1]);
    i_b += w * form_norm2(gm, db[idx * 2], db[idx * 2 + 1]);
    W.u_sup = std::max(W.u_sup, std::abs(W.sol.u[idx]));
  }
  W.du_l2 = std::sqrt(i_u);
  W.da_l2 = std::sqrt(i_a);
  W.db_l2 = std::sqrt(i_b);
  W.bound_sup = 18.0 * W.da_l2 * W.db_l2;
  W.bound_grad = 3.0 * std::sqrt(2.0) * W.da_l2 * W.db_l2;
  W.sup_ok = W.u_sup <= W.bound_sup;
  W.grad_ok = W.du_l2 <= W.bound_grad;
  return W;
}

WenteReport wente_solve(const Geometry& geom, const std::vector<double>& a,
                        const std::vector<double>& b) {
  const size_t N = geom.node_count();
  std::vector<double> gmet(N * 3);
  for (size_t idx = 0; idx < N; ++idx) {
    gmet[idx * 3 + 0] = geom.g[idx * 4 + 0];
    gmet[idx * 3 + 1] = geom.g[idx * 4 + 1];
    gmet[idx * 3 + 2] = geom.g[idx * 4 + 3];
  }
  return wente_solve(*geom.grid, gmet, a, b);
}

WenteReport wente_random_instance(uint64_t seed, int res) {
  Grid G;
  G.n = 2;
  G.m = 1;
  G.dims = {res, res, 1, 1};
  G.lo = {0.0, 0.0, 0, 0};
  G.hi = {1.0, 1.0, 0, 0};
  G.periodic = {false, false, false, false};
  G.alloc();
  const size_t N = G.node_count();

  Rng rng(seed);
  // log-eigenvalue and rotation fields keep every nodal metric inside the
  // ellipticity budget: |p|, |q| <= 2 gives Lambda <= e^2 < 10
  const double bp = rng.uniform(0.3, 2.0), bq = rng.uniform(0.3, 2.0);
  const double kp1 = 1 + double(rng.next_u64() % 2), kp2 = 1 + double(rng.next_u64() % 2);
  const double kq1 = 1 + double(rng.next_u64() % 2), kq2 = 1 + double(rng.next_u64() % 2);
  const double pp1 = rng.uniform(0.0, 2 * kPi), pp2 = rng.uniform(0.0, 2 * kPi);
  const double pq1 = rng.uniform(0.0, 2 * kPi), pq2 = rng.uniform(0.0, 2 * kPi);
  const double t0 = rng.uniform(0.0, kPi), t1 = rng.uniform(0.0, 0.8);
  const double pt1 = rng.uniform(0.0, 2 * kPi), pt2 = rng.uniform(0.0, 2 * kPi);

  struct TrigMode {
    double c, k1, k2, p1, p2;
  };
  auto draw_field = [&rng]() {
    std::vector<TrigMode> md(3);
    for (auto& m : md) {
      m.c = rng.uniform(-1.0, 1.0);
      m.k1 = 1 + double(rng.next_u64() % 3);
      m.k2 = 1 + double(rng.next_u64() % 3);
      m.p1 = rng.uniform(0.0, 2 * kPi);
      m.p2 = rng.uniform(0.0, 2 * kPi);
    }
    return md;
  };
  auto eval_field = [](const std::vector<TrigMode>& md, double x, double y) {
    double f = 0.0;
    for (const auto& m : md) {
      f += m.c * std::sin(2 * kPi * m.k1 * x + m.p1) * std::sin(2 * kPi * m.k2 * y + m.p2);
    }
    return f;
  };
  const auto ma = draw_field(), mb = draw_field();

  std::vector<double> gmet(N * 3), af(N), bf(N);
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < N; ++idx) {
    G.unindex(idx, iv);
    const double x = G.coord(0, iv[0]), y = G.coord(1, iv[1]);
    const double p = bp * std::sin(2 * kPi * kp1 * x + pp1) * std::sin(2 * kPi * kp2 * y + pp2);
    const double q = bq * std::sin(2 * kPi * kq1 * x + pq1) * std::sin(2 * kPi * kq2 * y + pq2);
    const double t = t0 + t1 * std::sin(2 * kPi * x + pt1) * std::sin(2 * kPi * y + pt2);
    const double l1 = std::exp(p), l2 = std::exp(q);
    const double ct = std::cos(t), st = std::sin(t);
    gmet[idx * 3 + 0] = l1 * ct * ct + l2 * st * st;
    gmet[idx * 3 + 1] = (l1 - l2) * st * ct;
    gmet[idx * 3 + 2] = l1 * st * st + l2 * ct * ct;
    af[idx] = eval_field(ma, x, y);
    bf[idx] = eval_field(mb, x, y);
  }
  return wente_solve(G, gmet, af, bf);
}

FrameState coulomb_frame(const Geometry& geom) {
  const Grid& G = *geom.grid;
  require_chart2(G);
  const size_t N = geom.node_count();
  const int m = geom.m;

  FrameState F;
  F.f1.resize(N * m);
  F.f2.resize(N * m);
  for (size_t idx = 0; idx < N; ++idx) {
    const double* d1 = &geom.dPhi[(idx * 2 + 0) * m];
    const double* d2 = &geom.dPhi[(idx * 2 + 1) * m];
    double n1 = 0.0;
    for (int c = 0; c < m; ++c) n1 += sq(d1[c]);
    n1 = std::sqrt(n1);
    if (!(n1 > 1e-14)) throw DomainError("DegenerateFrame: |D1 Phi| ~ 0");
    double proj = 0.0;
    for (int c = 0; c < m; ++c) {
      F.f1[idx * m + c] = d1[c] / n1;
      proj += d2[c] * d1[c] / n1;
    }
    double n2 = 0.0;
    for (int c = 0; c < m; ++c) {
      const double r = d2[c] - proj * F.f1[idx * m + c];
      F.f2[idx * m + c] = r;
      n2 += sq(r);
    }
    n2 = std::sqrt(n2);
    if (!(n2 > 1e-14)) throw DomainError("DegenerateFrame: tangent plane collapsed");
    for (int c = 0; c < m; ++c) F.f2[idx * m + c] /= n2;
  }

  const std::vector<double> df2 = gradient(G, F.f2, m, geom.acc);
  F.alpha.assign(N * 2, 0.0);
  for (size_t idx = 0; idx < N; ++idx) {
    for (int k = 0; k < 2; ++k) {
      double s = 0.0;
      for (int c = 0; c < m; ++c) {
        s += F.f1[idx * m + c] * df2[(idx * 2 + k) * m + c];
      }
      F.alpha[idx * 2 + k] = s;
    }
  }

  EllipticProblem P;
  P.grid = &G;
  P.a.resize(N * 3);
  for (size_t idx = 0; idx < N; ++idx) {
    const double s = geom.sqrtdet[idx];
    P.a[idx * 3 + 0] = s * geom.ginv[idx * 4 + 0];
    P.a[idx * 3 + 1] = s * geom.ginv[idx * 4 + 1];
    P.a[idx * 3 + 2] = s * geom.ginv[idx * 4 + 3];
  }
  P.shift = F.alpha;
  const SolveResult sol = solve_divform(P);
  F.theta = sol.u;
  F.converged = sol.converged;
  F.coulomb_energy = quadratic_energy(P, F.theta);

  F.e1.resize(N * m);
  F.e2.resize(N * m);
  for (size_t idx = 0; idx < N; ++idx) {
    const double ct = std::cos(F.theta[idx]), st = std::sin(F.theta[idx]);
    for (int c = 0; c < m; ++c) {
      const double a1 = F.f1[idx * m + c], a2 = F.f2[idx * m + c];
      F.e1[idx * m + c] = ct * a1 - st * a2;
      F.e2[idx * m + c] = st * a1 + ct * a2;
    }
  }

  const std::vector<double> qw = quad_weights(G);
  const std::vector<double> de1 = gradient(G, F.e1, m, geom.acc);
  const std::vector<double> de2 = gradient(G, F.e2, m, geom.acc);
  double fe = 0.0, dne = 0.0, tc = 0.0;
  for (size_t idx = 0; idx < N; ++idx) {
    const double* gi = &geom.ginv[idx * 4];
    auto energy_of = [&](const std::vector<double>& dv) {
      double s = 0.0;
      for (int k = 0; k < 2; ++k) {
        for (int l = 0; l < 2; ++l) {
          double dotkl = 0.0;
          for (int c = 0; c < m; ++c) {
            dotkl += dv[(idx * 2 + k) * m + c] * dv[(idx * 2 + l) * m + c];
          }
          s += gi[k * 2 + l] * dotkl;
        }
      }
      return s;
    };
    const double w = qw[idx] * geom.sqrtdet[idx];
    fe += w * (energy_of(de1) + energy_of(de2));
    dne += w * energy_of(geom.dn);
    tc += w * std::abs(geom.K[idx]);
  }
  F.frame_energy = fe;
  F.dn_energy = dne;
  F.total_curvature = tc;
  F.bound_applies = tc <= 1.0 / 36.0;
  // absolute floor keeps the flag meaningful on exactly flat patches where
  // both energies are pure roundoff
  F.bound_holds = fe <= 1.5 * dne + 1e-14;

  if (!G.periodic[0] && !G.periodic[1]) {
    // d lambda = *_g(d theta + alpha); the rotated-frame connection form
    // <e1, d e2> equals d theta + alpha identically
    const std::vector<double> dth = gradient(G, F.theta, 1, geom.acc);
    std::vector<double> omega(N * 2);
    for (size_t k = 0; k < N * 2; ++k) omega[k] = dth[k] + F.alpha[k];
    const std::vector<double> mu = hodge_1form(geom, omega, 1);
    const PathPrimitive pp = integrate_1form(G, mu, 1, G.dims[0] / 2, G.dims[1] / 2);
    F.lambda = pp.F;
    F.defect_lambda = pp.defect;
    double lsup = 0.0;
    for (double v : F.lambda) lsup = std::max(lsup, std::abs(v));
    F.lambda_valid = F.defect_lambda <= 1e-6 * std::max(1.0, lsup);
  }
  return F;
}

namespace {

// tensor-product Lagrange window (ord nodes per axis) on a 2D grid field;
// jac may be null
struct WindowInterp {
  const Grid& G;
  const std::vector<double>& F;
  int mc, ord;

  void eval(const double x[2], double* val, double* jac) const {
    int i0[2];
    std::vector<double> w0[2], w1[2];
    for (int a = 0; a < 2; ++a) {
      const double h = G.h(a);
      const int d = G.dims[a];
      int start = int(std::floor((x[a] - G.lo[a]) / h)) - (ord / 2 - 1);
      start = std::max(0, std::min(start, d - ord));
      i0[a] = start;
      std::vector<double> xs(ord);
      for (int j = 0; j < ord; ++j) xs[j] = G.coord(a, start + j);
      const auto W = fd_weights(x[a], xs, jac ? 1 : 0);
      w0[a].resize(ord);
      if (jac) w1[a].resize(ord);
      for (int j = 0; j < ord; ++j) {
        w0[a][j] = W[j][0];
        if (jac) w1[a][j] = W[j][1];
      }
    }
    for (int c = 0; c < mc; ++c) {
      val[c] = 0.0;
      if (jac) jac[c * 2] = jac[c * 2 + 1] = 0.0;
    }
    const size_t d1 = G.dims[1];
    for (int i = 0; i < ord; ++i) {
      for (int j = 0; j < ord; ++j) {
        const size_t idx = size_t(i0[0] + i) * d1 + (i0[1] + j);
        for (int c = 0; c < mc; ++c) {
          const double f = F[idx * mc + c];
          val[c] += w0[0][i] * w0[1][j] * f;
          if (jac) {
            jac[c * 2 + 0] += w1[0][i] * w0[1][j] * f;
            jac[c * 2 + 1] += w0[0][i] * w1[1][j] * f;
          }
        }
      }
    }
  }
};

bool invert_point(const WindowInterp& ip, const double y[2], double x[2],
                  const double blo[2], const double bhi[2], double tol, double hcap0,
                  double hcap1) {
  double val[2], jac[4];
  for (int it = 0; it < 60; ++it) {
    ip.eval(x, val, jac);
    const double rx = y[0] - val[0], ry = y[1] - val[1];
    if (std::abs(rx) <= tol && std::abs(ry) <= tol) return true;
    const double det = jac[0] * jac[3] - jac[1] * jac[2];
    if (std::abs(det) < 1e-300) return false;
    double dx = (jac[3] * rx - jac[1] * ry) / det;
    double dy = (jac[0] * ry - jac[2] * rx) / det;
    dx = std::clamp(dx, -3.0 * hcap0, 3.0 * hcap0);
    dy = std::clamp(dy, -3.0 * hcap1, 3.0 * hcap1);
    x[0] = std::clamp(x[0] + dx, blo[0], bhi[0]);
    x[1] = std::clamp(x[1] + dy, blo[1], bhi[1]);
  }
  ip.eval(x, val, nullptr);
  return std::abs(y[0] - val[0]) <= tol && std::abs(y[1] - val[1]) <= tol;
}

}  // namespace

IsothermalResult isothermal_coordinates(const Geometry& geom) {
  const Grid& G = *geom.grid;
  require_chart2(G);
  if (G.periodic[0] || G.periodic[1]) {
    throw DomainError("NotSimplyConnected: isothermal coordinates need a patch");
  }
  const size_t N = geom.node_count();
  const int m = geom.m;

  IsothermalResult R;
  R.frame = coulomb_frame(geom);

  // dphi^i = e^{-lambda} <e_i, dPhi>, both components in one pass
  std::vector<double> w(N * 2 * 2);
  for (size_t idx = 0; idx < N; ++idx) {
    const double el = std::exp(-R.frame.lambda[idx]);
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        const std::vector<double>& e = i == 0 ? R.frame.e1 : R.frame.e2;
        double s = 0.0;
        for (int c = 0; c < m; ++c) {
          s += e[idx * m + c] * geom.dPhi[(idx * 2 + k) * m + c];
        }
        w[(idx * 2 + k) * 2 + i] = el * s;
      }
    }
  }
  const int c0 = G.dims[0] / 2, c1 = G.dims[1] / 2;
  const PathPrimitive pp = integrate_1form(G, w, 2, c0, c1);
  R.phi = pp.F;
  R.defect_phi = pp.defect;
  double psup = 0.0;
  for (double v : R.phi) psup = std::max(psup, std::abs(v));
  R.paths_valid = R.defect_phi <= 1e-6 * std::max(1.0, psup);

  const std::vector<double> dphi = gradient(G, R.phi, 2, geom.acc);
  std::vector<double> det(N);
  R.det_min = std::numeric_limits<double>::infinity();
  for (size_t idx = 0; idx < N; ++idx) {
    det[idx] = dphi[(idx * 2 + 0) * 2 + 0] * dphi[(idx * 2 + 1) * 2 + 1] -
               dphi[(idx * 2 + 0) * 2 + 1] * dphi[(idx * 2 + 1) * 2 + 0];
    R.det_min = std::min(R.det_min, det[idx]);
  }
  double lsup = 0.0;
  for (double v : R.frame.lambda) lsup = std::max(lsup, std::abs(v));
  const double Lambda = weak_immersion_bound(geom, {});
  R.det_bound = std::exp(-2.0 * lsup) / Lambda;
  R.det_ok = R.det_min >= R.det_bound * (1.0 - 1e-3);

  // largest centered sub-square on which det stays positive
  const int wmax = std::min(std::min(c0, G.dims[0] - 1 - c0), std::min(c1, G.dims[1] - 1 - c1));
  int wpos = -1;
  for (int wtry = wmax; wtry >= 0; --wtry) {
    bool ok = true;
    for (int i = c0 - wtry; i <= c0 + wtry && ok; ++i) {
      for (int j = c1 - wtry; j <= c1 + wtry && ok; ++j) {
        if (!(det[size_t(i) * G.dims[1] + j] > 0.0)) ok = false;
      }
    }
    if (ok) {
      wpos = wtry;
      break;
    }
  }
  if (wpos < 1) throw DomainError("ResampleFailure: phi folds at the center");
  R.square_fraction = double(wpos) / double(wmax);

  // inversion box and target half-width from the image of the sub-square rim
  const double blo[2] = {G.coord(0, c0 - wpos), G.coord(1, c1 - wpos)};
  const double bhi[2] = {G.coord(0, c0 + wpos), G.coord(1, c1 + wpos)};
  double rim = std::numeric_limits<double>::infinity();
  for (int i = c0 - wpos; i <= c0 + wpos; ++i) {
    for (int j = c1 - wpos; j <= c1 + wpos; ++j) {
      if (i != c0 - wpos && i != c0 + wpos && j != c1 - wpos && j != c1 + wpos) continue;
      const size_t idx = size_t(i) * G.dims[1] + j;
      rim = std::min(rim, std::max(std::abs(R.phi[idx * 2]), std::abs(R.phi[idx * 2 + 1])));
    }
  }

  const int Rt = G.dims[0];
  R.resample_res = Rt;
  const WindowInterp ip_phi{G, R.phi, 2, 6};
  const WindowInterp ip_val{G, G.values, m, 6};

  Grid T;
  T.n = 2;
  T.m = m;
  T.dims = {Rt, Rt, 1, 1};
  T.periodic = {false, false, false, false};

  bool placed = false;
  double s = 0.7 * rim;
  for (int attempt = 0; attempt < 5 && !placed; ++attempt, s *= 0.8) {
    T.lo = {-s, -s, 0, 0};
    T.hi = {s, s, 0, 0};
    T.alloc();
    const double tol = 1e-12 * std::max(1.0, s);
    placed = true;
    double xrow[2] = {G.coord(0, c0), G.coord(1, c1)};
    for (int ti = 0; ti < Rt && placed; ++ti) {
      double xcur[2] = {xrow[0], xrow[1]};
      for (int tj = 0; tj < Rt && placed; ++tj) {
        const double y[2] = {T.coord(0, ti), T.coord(1, tj)};
        if (!invert_point(ip_phi, y, xcur, blo, bhi, tol, G.h(0), G.h(1))) {
          placed = false;
          break;
        }
        const size_t t = size_t(ti) * Rt + tj;
        if (tj == 0) {
          xrow[0] = xcur[0];
          xrow[1] = xcur[1];
        }
        double val[8];
        ip_val.eval(xcur, val, nullptr);
        for (int c = 0; c < m; ++c) {
          double v = val[c];
          for (int a = 0; a < 2; ++a) v += G.affine[c * 4 + a] * xcur[a];
          T.values[t * m + c] = v;
        }
      }
    }
  }
  if (!placed) throw DomainError("ResampleFailure: inversion did not converge");
  R.resample_halfwidth = T.hi[0];

  const std::vector<double> dT = gradient(T, T.values, m, 4);
  R.resampled_g.assign(size_t(Rt) * Rt * 3, 0.0);
  const std::vector<uint8_t> tmask = interior_mask(T, 2, false);
  double off = 0.0, aniso = 0.0;
  for (size_t t = 0; t < size_t(Rt) * Rt; ++t) {
    double gg[3] = {0.0, 0.0, 0.0};
    for (int c = 0; c < m; ++c) {
      const double u1 = dT[(t * 2 + 0) * m + c], u2 = dT[(t * 2 + 1) * m + c];
      gg[0] += u1 * u1;
      gg[1] += u1 * u2;
      gg[2] += u2 * u2;
    }
    R.resampled_g[t * 3] = gg[0];
    R.resampled_g[t * 3 + 1] = gg[1];
    R.resampled_g[t * 3 + 2] = gg[2];
    if (!tmask[t]) continue;
    const double den = std::sqrt(gg[0] * gg[0] + 2.0 * gg[1] * gg[1] + gg[2] * gg[2]);
    off = std::max(off, std::abs(gg[1]) / den);
    aniso = std::max(aniso, std::abs(gg[0] - gg[2]) / den);
  }
  R.offdiag = {"isothermal_offdiag", "sup", off,
               std::numeric_limits<double>::quiet_NaN()};
  R.anisotropy = {"isothermal_anisotropy", "sup", aniso,
                  std::numeric_limits<double>::quiet_NaN()};
  return R;
}

}  // namespace wkit
