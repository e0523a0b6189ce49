#include "wkit/shapes.hpp"

#include "wkit/geometry.hpp"

namespace wkit {

namespace {

constexpr double kChartRect = 1.4;
constexpr double kTaperLo = 0.7;
constexpr double kTaperHi = 1.3;

// raw taper in the chart radius; C^1, 1 inside, 0 outside
double taper(double rho) {
  if (rho <= kTaperLo) return 1.0;
  if (rho >= kTaperHi) return 0.0;
  return 0.5 * (1.0 + std::cos(kPi * (rho - kTaperLo) / (kTaperHi - kTaperLo)));
}

// normalized against the partner chart at radius 1/rho
double pou_weight(double rho) {
  double w = taper(rho);
  double wp = taper(rho > 1e-30 ? 1.0 / rho : 1e30);
  double s = w + wp;
  return s > 0.0 ? w / s : 0.0;
}

Grid blank_chart(int n, int m, int res) {
  Grid G;
  G.n = n;
  G.m = m;
  for (int a = 0; a < n; ++a) {
    G.dims[a] = res;
    G.lo[a] = -kChartRect;
    G.hi[a] = kChartRect;
    G.periodic[a] = false;
  }
  G.alloc();
  return G;
}

// stereographic sphere charts; flip = one parameter axis mirrored so both
// charts orient the outward normal
void fill_sphere_chart(Grid& G, bool north_pole_chart, double radius,
                       const double* center) {
  const int n = G.n, m = G.m;
  const size_t N = G.node_count();
  std::array<int, 4> iv{};
  G.pou.assign(N, 0.0);
  for (size_t idx = 0; idx < N; ++idx) {
    G.unindex(idx, iv);
    double x[4], r2 = 0.0;
    for (int a = 0; a < n; ++a) {
      x[a] = G.coord(a, iv[a]);
      r2 += sq(x[a]);
    }
    double denom = 1.0 + r2;
    double* v = &G.values[idx * m];
    for (int a = 0; a < n; ++a) {
      double xa = x[a];
      // the chart covering the south pole mirrors its second axis
      if (a == 1 && !north_pole_chart) xa = -xa;
      v[a] = 2.0 * xa / denom;
    }
    v[m - 1] = north_pole_chart ? (1.0 - r2) / denom : (r2 - 1.0) / denom;
    for (int c = 0; c < m; ++c) v[c] = center[c] + radius * v[c];
    G.pou[idx] = pou_weight(std::sqrt(r2));
  }
}

}  // namespace

Atlas make_sphere2(int res, double radius, const std::array<double, 3>& center) {
  Atlas A;
  A.n = 2;
  A.m = 3;
  A.closed = true;
  A.charts.push_back(blank_chart(2, 3, res));
  A.charts.push_back(blank_chart(2, 3, res));
  fill_sphere_chart(A.charts[0], false, radius, center.data());
  fill_sphere_chart(A.charts[1], true, radius, center.data());
  return A;
}

Atlas make_ellipsoid2(int res, double a, double b, double c) {
  Atlas A = make_sphere2(res);
  const double s[3] = {a, b, c};
  for (auto& chart : A.charts) {
    for (size_t idx = 0; idx < chart.node_count(); ++idx) {
      for (int k = 0; k < 3; ++k) chart.values[idx * 3 + k] *= s[k];
    }
  }
  return A;
}

Atlas make_sphere4(int res, double radius) {
  Atlas A;
  A.n = 4;
  A.m = 5;
  A.closed = true;
  const double center[5] = {0, 0, 0, 0, 0};
  A.charts.push_back(blank_chart(4, 5, res));
  A.charts.push_back(blank_chart(4, 5, res));
  fill_sphere_chart(A.charts[0], false, radius, center);
  fill_sphere_chart(A.charts[1], true, radius, center);
  return A;
}

// two semi-axes equal to a, three of length 1; a -> infinity degenerates
// toward S^2 x R^2 geometry
Atlas make_ellipsoid4(int res, double a) {
  Atlas A = make_sphere4(res);
  for (auto& chart : A.charts) {
    for (size_t idx = 0; idx < chart.node_count(); ++idx) {
      chart.values[idx * 5 + 0] *= a;
      chart.values[idx * 5 + 1] *= a;
    }
  }
  return A;
}

Atlas make_torus(int res, double R, double r) {
  Atlas A;
  A.n = 2;
  A.m = 3;
  A.closed = true;
  Grid G;
  G.n = 2;
  G.m = 3;
  G.dims = {res, res, 1, 1};
  G.lo = {0, 0, 0, 0};
  G.hi = {2 * kPi, 2 * kPi, 0, 0};
  G.periodic = {true, true, false, false};
  G.alloc();
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < G.node_count(); ++idx) {
    G.unindex(idx, iv);
    double u = G.coord(0, iv[0]), v = G.coord(1, iv[1]);
    double w = R + r * std::cos(v);
    G.values[idx * 3 + 0] = w * std::cos(u);
    G.values[idx * 3 + 1] = w * std::sin(u);
    G.values[idx * 3 + 2] = r * std::sin(v);
  }
  A.charts.push_back(std::move(G));
  return A;
}

Atlas make_sphere2_double_cover(int res) {
  Atlas A;
  A.n = 2;
  A.m = 3;
  A.closed = true;
  Grid G;
  G.n = 2;
  G.m = 3;
  G.dims = {res, res, 1, 1};
  double h = 2 * kPi / res;
  G.lo = {0.5 * h, 0.5 * h, 0, 0};
  G.hi = {2 * kPi + 0.5 * h, 2 * kPi + 0.5 * h, 0, 0};
  G.periodic = {true, true, false, false};
  G.alloc();
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < G.node_count(); ++idx) {
    G.unindex(idx, iv);
    double th = G.coord(0, iv[0]), ph = G.coord(1, iv[1]);
    G.values[idx * 3 + 0] = std::sin(th) * std::cos(ph);
    G.values[idx * 3 + 1] = std::sin(th) * std::sin(ph);
    G.values[idx * 3 + 2] = std::cos(th);
  }
  A.charts.push_back(std::move(G));
  return A;
}

namespace {

Grid blank_periodic_graph(int n, int m, int res) {
  Grid G;
  G.n = n;
  G.m = m;
  for (int a = 0; a < n; ++a) {
    G.dims[a] = res;
    G.lo[a] = 0.0;
    G.hi[a] = 1.0;
    G.periodic[a] = true;
  }
  G.alloc();
  for (int a = 0; a < n; ++a) G.affine[a * 4 + a] = 1.0;  // component a tracks axis a
  return G;
}

}  // namespace

namespace {

struct Mode {
  int kx, ky;
  double a, px, py;
};

std::vector<Mode> draw_modes(uint64_t seed) {
  if (seed == 0) {
    return {{1, 1, 1.0, 0.0, 0.0}, {2, 1, 0.5, 0.3, 0.0}, {1, 2, 0.35, 0.0, 1.1}};
  }
  std::vector<Mode> modes;
  Rng rng(seed);
  for (int k = 0; k < 4; ++k) {
    modes.push_back({1 + int(rng.next_u64() % 2), 1 + int(rng.next_u64() % 2),
                     rng.uniform(0.4, 1.0), rng.uniform(0.0, 2 * kPi),
                     rng.uniform(0.0, 2 * kPi)});
  }
  return modes;
}

double mode_height(const std::vector<Mode>& modes, double x, double y) {
  double f = 0.0;
  for (const auto& md : modes) {
    f += md.a * std::sin(2 * kPi * md.kx * x + md.px) * std::sin(2 * kPi * md.ky * y + md.py);
  }
  return f;
}

}  // namespace

Atlas make_graph2(int res, double amp, uint64_t seed) {
  Atlas A;
  A.n = 2;
  A.m = 3;
  A.closed = true;
  Grid G = blank_periodic_graph(2, 3, res);
  auto modes = draw_modes(seed);
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < G.node_count(); ++idx) {
    G.unindex(idx, iv);
    double x = G.coord(0, iv[0]), y = G.coord(1, iv[1]);
    G.values[idx * 3 + 2] = amp * mode_height(modes, x, y);
  }
  A.charts.push_back(std::move(G));
  return A;
}

Atlas make_graph2_from_height(int res, const std::vector<double>& u) {
  Atlas A;
  A.n = 2;
  A.m = 3;
  A.closed = true;
  Grid G = blank_periodic_graph(2, 3, res);
  if (u.size() != G.node_count()) throw DomainError("graph2_from_height: bad size");
  for (size_t idx = 0; idx < u.size(); ++idx) G.values[idx * 3 + 2] = u[idx];
  A.charts.push_back(std::move(G));
  return A;
}

Atlas make_graph4(int res, double amp, uint64_t seed) {
  Atlas A;
  A.n = 4;
  A.m = 5;
  A.closed = true;
  Grid G = blank_periodic_graph(4, 5, res);
  Rng rng(seed ? seed : 4242);
  double p1 = rng.uniform(0.0, 2 * kPi), p2 = rng.uniform(0.0, 2 * kPi);
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < G.node_count(); ++idx) {
    G.unindex(idx, iv);
    double x[4];
    for (int a = 0; a < 4; ++a) x[a] = G.coord(a, iv[a]);
    double f = std::sin(2 * kPi * x[0] + p1) * std::sin(2 * kPi * x[1]) +
               0.5 * std::sin(2 * kPi * x[2] + p2) * std::sin(2 * kPi * x[3]);
    G.values[idx * 5 + 4] = amp * f;
  }
  A.charts.push_back(std::move(G));
  return A;
}

Atlas make_graph4_from_height(int res, const std::function<double(const double*)>& u) {
  Atlas A;
  A.n = 4;
  A.m = 5;
  A.closed = true;
  Grid G = blank_periodic_graph(4, 5, res);
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < G.node_count(); ++idx) {
    G.unindex(idx, iv);
    double x[4];
    for (int a = 0; a < 4; ++a) x[a] = G.coord(a, iv[a]);
    G.values[idx * 5 + 4] = u(x);
  }
  A.charts.push_back(std::move(G));
  return A;
}

Atlas make_catenoid_patch(int res, double half_width) {
  Atlas A;
  A.n = 2;
  A.m = 3;
  A.closed = false;
  Grid G;
  G.n = 2;
  G.m = 3;
  G.dims = {res, res, 1, 1};
  G.lo = {-half_width, -half_width, 0, 0};
  G.hi = {half_width, half_width, 0, 0};
  G.periodic = {false, false, false, false};
  G.alloc();
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < G.node_count(); ++idx) {
    G.unindex(idx, iv);
    double u = G.coord(0, iv[0]), v = G.coord(1, iv[1]);
    G.values[idx * 3 + 0] = std::cosh(v) * std::cos(u);
    G.values[idx * 3 + 1] = std::cosh(v) * std::sin(u);
    G.values[idx * 3 + 2] = v;
  }
  A.charts.push_back(std::move(G));
  return A;
}

Atlas make_inverted_catenoid_patch(int res, double half_width) {
  Atlas A = make_catenoid_patch(res, half_width);
  const double center[3] = {0, 0, 0};
  invert_atlas(A, center);
  return A;
}

Atlas make_enneper_patch(int res, double half_width) {
  Atlas A;
  A.n = 2;
  A.m = 3;
  A.closed = false;
  Grid G;
  G.n = 2;
  G.m = 3;
  G.dims = {res, res, 1, 1};
  G.lo = {0.7 - half_width, -half_width, 0, 0};
  G.hi = {0.7 + half_width, half_width, 0, 0};
  G.periodic = {false, false, false, false};
  G.alloc();
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < G.node_count(); ++idx) {
    G.unindex(idx, iv);
    double u = G.coord(0, iv[0]), v = G.coord(1, iv[1]);
    G.values[idx * 3 + 0] = u - u * u * u / 3.0 + u * v * v;
    G.values[idx * 3 + 1] = v - v * v * v / 3.0 + v * u * u;
    G.values[idx * 3 + 2] = u * u - v * v;
  }
  A.charts.push_back(std::move(G));
  return A;
}

Atlas make_inverted_enneper_patch(int res, double half_width) {
  Atlas A = make_enneper_patch(res, half_width);
  const double center[3] = {0, 0, 0};
  invert_atlas(A, center);
  return A;
}

Atlas make_product_patch(int res, double r) {
  Atlas A;
  A.n = 4;
  A.m = 5;
  A.closed = false;
  Grid G;
  G.n = 4;
  G.m = 5;
  G.dims = {res, res, res, res};
  G.lo = {0.6, 0.0, 0.0, 0.0};
  G.hi = {2.5, 2 * kPi, 0.8, 0.8};
  G.periodic = {false, true, false, false};
  G.alloc();
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < G.node_count(); ++idx) {
    G.unindex(idx, iv);
    double u = G.coord(0, iv[0]), v = G.coord(1, iv[1]);
    double s = G.coord(2, iv[2]), t = G.coord(3, iv[3]);
    G.values[idx * 5 + 0] = r * std::sin(u) * std::cos(v);
    G.values[idx * 5 + 1] = r * std::sin(u) * std::sin(v);
    G.values[idx * 5 + 2] = r * std::cos(u);
    G.values[idx * 5 + 3] = s;
    G.values[idx * 5 + 4] = t;
  }
  A.charts.push_back(std::move(G));
  return A;
}

Atlas make_disk_polar(int res, double R) {
  Atlas A;
  A.n = 2;
  A.m = 3;
  A.closed = false;
  Grid G;
  G.n = 2;
  G.m = 3;
  G.dims = {res, res, 1, 1};
  double h = R / (res - 0.5);
  G.lo = {0.5 * h, 0.0, 0, 0};
  G.hi = {R, 2 * kPi, 0, 0};
  G.periodic = {false, true, false, false};
  G.alloc();
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < G.node_count(); ++idx) {
    G.unindex(idx, iv);
    double rho = G.coord(0, iv[0]), th = G.coord(1, iv[1]);
    G.values[idx * 3 + 0] = rho * std::cos(th);
    G.values[idx * 3 + 1] = rho * std::sin(th);
    G.values[idx * 3 + 2] = 0.0;
  }
  A.charts.push_back(std::move(G));
  return A;
}

namespace {

Grid blank_patch(int res) {
  Grid G;
  G.n = 2;
  G.m = 3;
  G.dims = {res, res, 1, 1};
  G.lo = {0.0, 0.0, 0, 0};
  G.hi = {1.0, 1.0, 0, 0};
  G.periodic = {false, false, false, false};
  G.alloc();
  return G;
}

}  // namespace

Atlas make_graph_patch(int res, double amp, uint64_t seed) {
  auto modes = draw_modes(seed);
  return make_graph_patch_from_height(
      res, [&](double x, double y) { return amp * mode_height(modes, x, y); });
}

Atlas make_graph_patch_from_height(int res,
                                   const std::function<double(double, double)>& u) {
  Atlas A;
  A.n = 2;
  A.m = 3;
  A.closed = false;
  Grid G = blank_patch(res);
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < G.node_count(); ++idx) {
    G.unindex(idx, iv);
    double x = G.coord(0, iv[0]), y = G.coord(1, iv[1]);
    G.values[idx * 3 + 0] = x;
    G.values[idx * 3 + 1] = y;
    G.values[idx * 3 + 2] = u(x, y);
  }
  A.charts.push_back(std::move(G));
  return A;
}

Atlas make_small_curvature_patch(int res, uint64_t seed, double kmax) {
  double amp = 0.05;
  for (int pass = 0; pass < 12; ++pass) {
    Atlas A = make_graph_patch(res, amp, seed);
    Geometry geom = compute_geometry(A.charts[0]);
    auto qw = quad_weights(A.charts[0]);
    double total = 0.0;
    for (size_t idx = 0; idx < geom.node_count(); ++idx) {
      total += qw[idx] * geom.sqrtdet[idx] * std::abs(geom.K[idx]);
    }
    if (total <= 0.9 * kmax) return A;
    // |K| ~ amp^2 at small slope, so this overshoots slightly and converges
    amp *= std::sqrt(0.8 * kmax / total);
  }
  throw DomainError("make_small_curvature_patch: curvature target unreachable");
}

Atlas make_shape(const std::string& kind, int res, const ShapeParams& P) {
  if (kind == "sphere2") return make_sphere2(res, P.radius);
  if (kind == "ellipsoid2") return make_ellipsoid2(res, P.a, P.b, P.c);
  if (kind == "sphere4") return make_sphere4(res, P.radius);
  if (kind == "ellipsoid4") return make_ellipsoid4(res, P.a);
  if (kind == "torus_revolution") return make_torus(res, P.big_R, P.small_r);
  if (kind == "sphere2_double_cover") return make_sphere2_double_cover(res);
  if (kind == "graph2") return make_graph2(res, P.amp, P.seed);
  if (kind == "graph4") return make_graph4(res, P.amp, P.seed);
  if (kind == "catenoid_patch") return make_catenoid_patch(res);
  if (kind == "inverted_catenoid_patch") return make_inverted_catenoid_patch(res);
  if (kind == "enneper_patch") return make_enneper_patch(res);
  if (kind == "inverted_enneper_patch") return make_inverted_enneper_patch(res);
  if (kind == "product_patch") return make_product_patch(res, P.radius);
  if (kind == "disk_polar") return make_disk_polar(res, P.radius);
  if (kind == "graph_patch") return make_graph_patch(res, P.amp, P.seed);
  throw DomainError("make_shape: unknown kind " + kind);
}

}  // namespace wkit
