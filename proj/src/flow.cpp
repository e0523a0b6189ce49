#include "wkit/flow.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace wkit {

namespace {

void require_graph(const Geometry& geom, const char* what) {
  if (geom.n != 2 || geom.m != 3) {
    throw DomainError(std::string("DimensionMismatch: ") + what + " needs a surface chart in R^3");
  }
}

// |dn|^2_g = g^{ij} d_i n . d_j n; equals |II|^2_g in codimension one
double dn_norm2_at(const Geometry& geom, size_t idx) {
  const double* gi = &geom.ginv[idx * 4];
  const double* d1 = &geom.dn[(idx * 2 + 0) * 3];
  const double* d2 = &geom.dn[(idx * 2 + 1) * 3];
  double d11 = 0, d12 = 0, d22 = 0;
  for (int c = 0; c < 3; ++c) {
    d11 += d1[c] * d1[c];
    d12 += d1[c] * d2[c];
    d22 += d2[c] * d2[c];
  }
  return gi[0] * d11 + 2 * gi[1] * d12 + gi[3] * d22;
}

struct Measure {
  double W = 0.0;
  double sup_u = 0.0;
  double sup_dn = 0.0;
  double stiffness = 0.0;  // max (det g)^{-1/2} lambda_max(g^{-1})^2
};

Measure measure_chart(const Geometry& geom) {
  const Grid& G = *geom.grid;
  const size_t N = G.node_count();
  const std::vector<double> qw = quad_weights(G);
  std::vector<double> cell(N);
  Measure M;
  double dn2max = 0.0;
  for (size_t i = 0; i < N; ++i) {
    cell[i] = qw[i] * geom.sqrtdet[i] * sq(geom.H[i]);
    M.sup_u = std::max(M.sup_u, std::abs(G.values[i * 3 + 2]));
    dn2max = std::max(dn2max, dn_norm2_at(geom, i));
    const double a = geom.ginv[i * 4 + 0], b = geom.ginv[i * 4 + 1], c = geom.ginv[i * 4 + 3];
    const double lmax = 0.5 * ((a + c) + std::sqrt(sq(a - c) + 4 * b * b));
    M.stiffness = std::max(M.stiffness, sq(lmax) / geom.sqrtdet[i]);
  }
  M.W = pairwise_sum(cell);
  M.sup_dn = std::sqrt(dn2max);
  return M;
}

// (I + tau c Lap^2) u+ = u + tau (v + c Lap^2 u), Lap^2 spectral on the
// periodic unit cell: mode (kx, ky) carries the symbol ((2 pi |k|)^2)^2
std::vector<double> spectral_step(int n0, int n1, const std::vector<double>& u,
                                  const std::vector<double>& v, double c, double tau) {
  const int nc = n1 / 2 + 1;
  std::vector<double> real_buf(static_cast<size_t>(n0) * n1);
  std::vector<double> uh(2 * static_cast<size_t>(n0) * nc), vh(2 * static_cast<size_t>(n0) * nc);
  fftw_plan fwd_u = fftw_plan_dft_r2c_2d(n0, n1, real_buf.data(),
                                         reinterpret_cast<fftw_complex*>(uh.data()), FFTW_ESTIMATE);
  fftw_plan fwd_v = fftw_plan_dft_r2c_2d(n0, n1, real_buf.data(),
                                         reinterpret_cast<fftw_complex*>(vh.data()), FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_dft_c2r_2d(n0, n1, reinterpret_cast<fftw_complex*>(uh.data()),
                                       real_buf.data(), FFTW_ESTIMATE);
  std::memcpy(real_buf.data(), u.data(), sizeof(double) * u.size());
  fftw_execute(fwd_u);
  std::memcpy(real_buf.data(), v.data(), sizeof(double) * v.size());
  fftw_execute(fwd_v);
  const double scale = 1.0 / (static_cast<double>(n0) * n1);
  for (int i = 0; i < n0; ++i) {
    const int kx = i <= n0 / 2 ? i : i - n0;
    for (int j = 0; j < nc; ++j) {
      const double xi2 = sq(2 * kPi * kx) + sq(2 * kPi * j);
      const double s = sq(xi2);
      const size_t at = 2 * (static_cast<size_t>(i) * nc + j);
      for (int p = 0; p < 2; ++p) {
        uh[at + p] = scale * (uh[at + p] * (1 + tau * c * s) + tau * vh[at + p]) / (1 + tau * c * s);
      }
    }
  }
  fftw_execute(bwd);
  fftw_destroy_plan(fwd_u);
  fftw_destroy_plan(fwd_v);
  fftw_destroy_plan(bwd);
  return real_buf;
}

void sync_height(FlowState& st) {
  const size_t N = st.grid.node_count();
  for (size_t i = 0; i < N; ++i) st.grid.values[i * 3 + 2] = st.u[i];
}

}  // namespace

const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::Running: return "running";
    case FlowStatus::Converged: return "converged";
    case FlowStatus::ReachedEnd: return "t_end";
    case FlowStatus::BlowUp: return "blowup";
    case FlowStatus::StepCollapse: return "step_collapse";
  }
  return "unknown";
}

FlowState make_flow_state(int res, const std::function<double(double, double)>& height) {
  if (res < 8) throw DomainError("BadResolution: flow grids need res >= 8");
  FlowState st;
  Grid& G = st.grid;
  G.n = 2;
  G.m = 3;
  G.dims = {res, res, 1, 1};
  G.lo = {0, 0, 0, 0};
  G.hi = {1, 1, 0, 0};
  G.periodic = {true, true, false, false};
  G.affine[0 * 4 + 0] = 1.0;  // x and y stay affine so wraparound is exact
  G.affine[1 * 4 + 1] = 1.0;
  G.alloc();
  st.u.resize(G.node_count());
  std::array<int, 4> iv{};
  for (size_t i = 0; i < G.node_count(); ++i) {
    G.unindex(i, iv);
    st.u[i] = height(G.coord(0, iv[0]), G.coord(1, iv[1]));
  }
  sync_height(st);
  return st;
}

std::vector<double> willmore_velocity(const Geometry& geom) {
  require_graph(geom, "willmore_velocity");
  const size_t N = geom.node_count();
  for (size_t i = 0; i < N; ++i) {
    if (geom.nrm[i * 3 + 2] <= 0.1) {
      throw DomainError("GraphFold: normal e3 component " +
                        std::to_string(geom.nrm[i * 3 + 2]) + " at node " + std::to_string(i));
    }
  }
  const std::vector<double> lapH = laplace_beltrami(geom, geom.H, 1, geom.acc);
  std::vector<double> w(N);
  for (size_t i = 0; i < N; ++i) {
    w[i] = -(lapH[i] + 2 * geom.H[i] * (sq(geom.H[i]) - geom.K[i]));
  }
  return w;
}

double concentration_probe(const Geometry& geom, double r) {
  require_graph(geom, "concentration_probe");
  if (r <= 0) throw DomainError("BadRadius: concentration radius must be positive");
  const Grid& G = *geom.grid;
  const size_t N = G.node_count();
  const std::vector<double> qw = quad_weights(G);
  std::vector<double> e(N);
  for (size_t i = 0; i < N; ++i) e[i] = qw[i] * geom.sqrtdet[i] * dn_norm2_at(geom, i);

  const double h0 = G.h(0), h1 = G.h(1);
  const int d0 = G.dims[0], d1 = G.dims[1];
  // one visit per node: periodic offsets never reach past half the cell
  int R0 = std::min(static_cast<int>(r / h0), G.periodic[0] ? (d0 - 1) / 2 : d0 - 1);
  int R1 = std::min(static_cast<int>(r / h1), G.periodic[1] ? (d1 - 1) / 2 : d1 - 1);
  std::vector<std::array<int, 2>> offsets;
  for (int di = -R0; di <= R0; ++di) {
    for (int dj = -R1; dj <= R1; ++dj) {
      if (sq(di * h0) + sq(dj * h1) <= r * r) offsets.push_back({di, dj});
    }
  }
  std::vector<double> ball(N, 0.0);
  parallel_for(N, [&](size_t lo, size_t hi) {
    std::array<int, 4> iv{};
    for (size_t idx = lo; idx < hi; ++idx) {
      G.unindex(idx, iv);
      double s = 0.0;
      for (const auto& off : offsets) {
        int i = iv[0] + off[0], j = iv[1] + off[1];
        if (G.periodic[0]) {
          i = (i + d0) % d0;
        } else if (i < 0 || i >= d0) {
          continue;
        }
        if (G.periodic[1]) {
          j = (j + d1) % d1;
        } else if (j < 0 || j >= d1) {
          continue;
        }
        s += e[static_cast<size_t>(i) * d1 + j];
      }
      ball[idx] = s;
    }
  });
  return *std::max_element(ball.begin(), ball.end());
}

bool flow_step(FlowState& st, const FlowConfig& cfg) {
  if (st.status != FlowStatus::Running) return false;
  if (st.tau <= 0) st.tau = cfg.tau0;

  Geometry geom = compute_geometry(st.grid);
  const std::vector<double> w = willmore_velocity(geom);
  const Measure M = measure_chart(geom);

  // the indicator is recorded ahead of the flag checks, so a flagged run
  // still reports whether concentration preceded it
  if (st.first_concentration_t < 0 && std::isfinite(cfg.conc_eps0) &&
      concentration_probe(geom, cfg.conc_radius) > cfg.conc_eps0) {
    st.first_concentration_t = st.t;
  }
  if (M.sup_dn > cfg.blowup_threshold) {
    st.status = FlowStatus::BlowUp;
    return false;
  }
  double sup_w = 0.0;
  for (double v : w) sup_w = std::max(sup_w, std::abs(v));
  if (sup_w <= cfg.converge_tol) {
    st.status = FlowStatus::Converged;
    return false;
  }
  if (st.t >= cfg.t_end) {
    st.status = FlowStatus::ReachedEnd;
    return false;
  }

  const size_t N = st.grid.node_count();
  std::vector<double> udot(N);
  for (size_t i = 0; i < N; ++i) udot[i] = w[i] / geom.nrm[i * 3 + 2];

  const std::vector<double> saved = st.u;
  double tau = st.tau;
  for (;;) {
    st.u = spectral_step(st.grid.dims[0], st.grid.dims[1], saved, udot, M.stiffness, tau);
    sync_height(st);
    Geometry cand = compute_geometry(st.grid);
    const Measure Mc = measure_chart(cand);
    if (Mc.W <= M.W + cfg.energy_increase_tolerance) {
      st.t += tau;
      st.tau = tau;
      st.history.push_back({st.t, Mc.W, Mc.sup_u, Mc.sup_dn, tau});
      return true;
    }
    tau *= 0.5;
    if (tau < cfg.tau_min) {
      st.u = saved;
      sync_height(st);
      st.status = FlowStatus::StepCollapse;
      return false;
    }
  }
}

FlowStatus flow_run(FlowState& st, const FlowConfig& cfg, const std::string& csv_path) {
  if (st.history.empty()) {
    Geometry geom = compute_geometry(st.grid);
    const Measure M = measure_chart(geom);
    st.history.push_back({st.t, M.W, M.sup_u, M.sup_dn, cfg.tau0});
  }
  while (flow_step(st, cfg)) {
  }
  if (!csv_path.empty()) write_flow_csv(st, csv_path);
  return st.status;
}

void write_flow_csv(const FlowState& st, const std::string& path) {
  const std::string tmp = path + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "w");
  if (!f) throw IoError("OpenFailed: cannot write " + tmp);
  std::fputs("t,W,sup_u,sup_dn,tau\n", f);
  for (const FlowSample& s : st.history) {
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.W, s.sup_u, s.sup_dn, s.tau);
  }
  if (std::fclose(f) != 0) throw IoError("WriteFailed: " + tmp);
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("RenameFailed: " + tmp + " -> " + path);
  }
}

}  // namespace wkit
