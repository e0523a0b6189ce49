#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "wkit/flow.hpp"
#include "wkit/shapes.hpp"

using namespace wkit;

namespace {

double sup_abs(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

bool energy_monotone(const FlowState& st) {
  for (size_t i = 1; i < st.history.size(); ++i) {
    if (st.history[i].W > st.history[i - 1].W) return false;
  }
  return true;
}

// decay rate (1/2)(2 pi k)^4 of mode k under the mean-curvature normal speed
double half_rate(int k) { return 0.5 * std::pow(2 * kPi * k, 4); }

}  // namespace

TEST_CASE("velocity linearizes to minus half the flat bilaplacian") {
  const double eps = 1e-3;
  FlowState st = make_flow_state(64, [&](double x, double) { return eps * std::sin(2 * kPi * x); });
  Geometry geom = compute_geometry(st.grid);
  const std::vector<double> w = willmore_velocity(geom);
  const double pi4 = std::pow(2 * kPi, 4);
  double worst = 0, wsup = 0;
  for (size_t i = 0; i < st.u.size(); ++i) {
    worst = std::max(worst, std::abs(w[i] + 0.5 * pi4 * st.u[i]));
    wsup = std::max(wsup, std::abs(w[i]));
  }
  CHECK(worst / (0.5 * pi4 * eps) < 0.02);  // measured 1.8e-4
  // the same measurement against the full bilaplacian pins the factor 1/2
  // carried by the averaged-trace mean curvature
  CHECK(wsup / (pi4 * eps) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("flat graphs are stationary and converge immediately") {
  FlowState st = make_flow_state(32, [](double, double) { return 0.0; });
  Geometry geom = compute_geometry(st.grid);
  CHECK(sup_abs(willmore_velocity(geom)) < 1e-12);
  FlowConfig cfg;
  CHECK(flow_run(st, cfg) == FlowStatus::Converged);
  CHECK(st.t == 0.0);
  CHECK(st.history.size() == 1);
  CHECK(sup_abs(st.u) == 0.0);
}

TEST_CASE("spherical caps are numerically stationary") {
  auto cap_residual = [](int res) {
    Grid G;
    G.n = 2;
    G.m = 3;
    G.dims = {res, res, 1, 1};
    G.lo = {-0.35, -0.35, 0, 0};
    G.hi = {0.35, 0.35, 0, 0};
    G.periodic = {false, false, false, false};
    G.alloc();
    std::array<int, 4> iv{};
    for (size_t i = 0; i < G.node_count(); ++i) {
      G.unindex(i, iv);
      const double x = G.coord(0, iv[0]), y = G.coord(1, iv[1]);
      G.values[i * 3 + 0] = x;
      G.values[i * 3 + 1] = y;
      G.values[i * 3 + 2] = std::sqrt(1 - x * x - y * y);
    }
    Geometry geom = compute_geometry(G);
    const std::vector<double> w = willmore_velocity(geom);
    const int collar = std::max(6, static_cast<int>(std::ceil(0.2 * (res - 1))));
    const std::vector<uint8_t> mask = interior_mask(G, collar, false);
    double s = 0;
    for (size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) s = std::max(s, std::abs(w[i]));
    }
    return s;
  };
  const double c = cap_residual(33), f = cap_residual(65);
  CHECK(c < 5e-6);  // measured 1.4e-6
  CHECK(f < 5e-7);  // measured 1.6e-7
  CHECK(refinement_order(c, f) > 1.8);
}

TEST_CASE("linear modes decay at half the fourth-power rate") {
  {
    FlowConfig cfg;
    cfg.tau0 = 2e-6;
    cfg.conc_eps0 = INFINITY;
    FlowState st = make_flow_state(32, [](double x, double) { return 1e-3 * std::sin(2 * kPi * x); });
    for (int k = 0; k < 300; ++k) REQUIRE(flow_step(st, cfg));
    const double rate = std::log(1e-3 / sup_abs(st.u)) / st.t;
    CHECK(rate == doctest::Approx(half_rate(1)).epsilon(0.05));  // measured 0.25% off
  }
  {
    FlowConfig cfg;
    cfg.tau0 = 5e-7;
    cfg.conc_eps0 = INFINITY;
    FlowState st = make_flow_state(64, [](double x, double) { return 1e-3 * std::sin(4 * kPi * x); });
    for (int k = 0; k < 300; ++k) REQUIRE(flow_step(st, cfg));
    const double rate = std::log(1e-3 / sup_abs(st.u)) / st.t;
    CHECK(rate == doctest::Approx(half_rate(2)).epsilon(0.05));  // measured 0.94% off
  }
}

TEST_CASE("mode amplitude halves at the half-rate half-life") {
  const double t_half = std::log(2.0) / half_rate(1);
  FlowConfig cfg;
  cfg.tau0 = t_half / 200;
  cfg.t_end = t_half;
  cfg.conc_eps0 = INFINITY;
  FlowState st = make_flow_state(32, [](double x, double) { return 0.01 * std::sin(2 * kPi * x); });
  CHECK(flow_run(st, cfg) == FlowStatus::ReachedEnd);
  CHECK(sup_abs(st.u) == doctest::Approx(0.005).epsilon(0.1));  // measured 0.18% off
  CHECK(energy_monotone(st));
}

TEST_CASE("small data relaxes to a constant height") {
  FlowConfig cfg;
  cfg.tau0 = 1e-4;
  cfg.t_end = 0.5;
  cfg.conc_eps0 = INFINITY;
  FlowState st = make_flow_state(48, [](double x, double y) {
    return 0.01 * (std::sin(2 * kPi * x) * std::sin(2 * kPi * y) + 0.5 * std::cos(2 * kPi * y));
  });
  CHECK(flow_run(st, cfg) == FlowStatus::Converged);
  double mean = 0;
  for (double v : st.u) mean += v;
  mean /= static_cast<double>(st.u.size());
  double dev = 0;
  for (double v : st.u) dev = std::max(dev, std::abs(v - mean));
  CHECK(dev < 1e-6);  // measured 1.2e-11
  CHECK(energy_monotone(st));
  CHECK(st.history.back().W < 1e-12);
  // converged fixed points satisfy the stationarity bound by construction:
  // the convergence test is the sup of the Euler-Lagrange field itself
  Geometry geom = compute_geometry(st.grid);
  CHECK(sup_abs(willmore_velocity(geom)) <= 1e-6);
}

TEST_CASE("the flow conserves the height mean") {
  FlowConfig cfg;
  cfg.tau0 = 1e-5;
  cfg.t_end = 0.002;
  cfg.conc_eps0 = INFINITY;
  FlowState st = make_flow_state(48, [](double x, double y) {
    return 0.05 * (std::sin(2 * kPi * x) + std::sin(2 * kPi * y) * std::cos(2 * kPi * x));
  });
  double m0 = 0;
  for (double v : st.u) m0 += v;
  m0 /= static_cast<double>(st.u.size());
  flow_run(st, cfg);
  double m1 = 0;
  for (double v : st.u) m1 += v;
  m1 /= static_cast<double>(st.u.size());
  CHECK(st.t > 0);
  CHECK(std::abs(m1 - m0) / st.t < 1e-8);  // measured 4.8e-15
}

TEST_CASE("large data terminates with a flag and never raises the energy") {
  FlowConfig cfg;
  cfg.tau0 = 1e-6;
  cfg.t_end = 0.01;
  cfg.conc_eps0 = INFINITY;
  FlowState st = make_flow_state(64, [](double x, double y) {
    return 0.5 * (std::sin(2 * kPi * x) * std::cos(2 * kPi * y)) + 0.25 * std::sin(4 * kPi * (x + y));
  });
  const FlowStatus fs = flow_run(st, cfg);
  CHECK(fs == FlowStatus::StepCollapse);
  CHECK(st.status == FlowStatus::StepCollapse);
  CHECK(energy_monotone(st));
  CHECK(st.history.back().W < st.history.front().W);
  // the collapse was reached through genuine halving
  CHECK(st.history.back().tau < cfg.tau0);
}

TEST_CASE("random high-frequency data never silently gains energy") {
  Rng rng(77);
  double c[8], p[8];
  for (int i = 0; i < 8; ++i) {
    c[i] = rng.uniform(-1, 1);
    p[i] = rng.uniform(0, 2 * kPi);
  }
  FlowConfig cfg;
  cfg.tau0 = 1e-7;
  cfg.t_end = 2e-4;
  cfg.conc_eps0 = INFINITY;
  FlowState st = make_flow_state(64, [&](double x, double y) {
    double s = 0;
    int q = 0;
    for (int kx = 3; kx <= 4; ++kx) {
      for (int ky = 3; ky <= 4; ++ky) {
        s += c[q] * std::sin(2 * kPi * (kx * x + p[q])) * std::sin(2 * kPi * (ky * y + p[q + 4]));
        ++q;
      }
    }
    return 0.15 * s;
  });
  const FlowStatus fs = flow_run(st, cfg);
  CHECK(fs != FlowStatus::Running);
  CHECK(energy_monotone(st));
}

TEST_CASE("concentration probe: zero on flat, monotone and tame in the radius") {
  {
    FlowState st = make_flow_state(32, [](double, double) { return 0.0; });
    CHECK(concentration_probe(compute_geometry(st.grid), 0.1) < 1e-20);
  }
  FlowState st = make_flow_state(64, [](double x, double y) {
    return 0.1 * std::exp(-20 * (sq(x - 0.5) + sq(y - 0.5)));
  });
  Geometry geom = compute_geometry(st.grid);
  double prev = 0.0;
  for (double r : {0.05, 0.075, 0.1, 0.125, 0.2, 0.5}) {
    const double v = concentration_probe(geom, r);
    CHECK(v >= prev);  // shrinking balls carry less nonnegative energy
    prev = v;
  }
  const double c1 = concentration_probe(geom, 0.1);
  const double c2 = concentration_probe(geom, 0.1 + 1.0 / 64);
  CHECK(c1 == doctest::Approx(0.652220).epsilon(1e-3));
  CHECK((c2 - c1) / c1 < 0.35);  // one-spacing ring, measured 21%
}

TEST_CASE("forced singularity flags blowup after the probe crossed its threshold") {
  FlowConfig cfg;
  cfg.tau0 = 1e-7;
  cfg.t_end = 1e-3;
  cfg.conc_radius = 0.125;
  cfg.conc_eps0 = 0.5;
  cfg.blowup_threshold = 1.0;
  FlowState st = make_flow_state(64, [](double x, double y) {
    return 0.4 * std::exp(-30 * (sq(x - 0.5) + sq(y - 0.5))) + 0.1 * std::sin(2 * kPi * x);
  });
  CHECK(flow_run(st, cfg) == FlowStatus::BlowUp);
  // reported, not asserted as a law: in this run concentration preceded the flag
  CHECK(st.first_concentration_t == 0.0);
  CHECK(st.first_concentration_t <= st.t);
  MESSAGE("probe crossed eps0 at t=", st.first_concentration_t, ", blowup at t=", st.t);
}

TEST_CASE("trace CSV carries the exact header and round-trips the history") {
  FlowConfig cfg;
  cfg.tau0 = 1e-5;
  cfg.t_end = 1e-4;
  cfg.conc_eps0 = INFINITY;
  FlowState st = make_flow_state(32, [](double x, double) { return 0.01 * std::sin(2 * kPi * x); });
  const std::string path = "flow_trace_test.csv";
  flow_run(st, cfg, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "t,W,sup_u,sup_dn,tau");
  size_t rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string cellstr;
    std::vector<double> cells;
    while (std::getline(ss, cellstr, ',')) cells.push_back(std::strtod(cellstr.c_str(), nullptr));
    REQUIRE(cells.size() == 5);
    const FlowSample& h = st.history[rows];
    CHECK(cells[0] == h.t);  // %.17g round-trips doubles exactly
    CHECK(cells[1] == h.W);
    CHECK(cells[4] == h.tau);
    ++rows;
  }
  CHECK(rows == st.history.size());
  std::ifstream tmp(path + ".tmp");
  CHECK(!tmp.good());  // renamed, not left behind
  std::remove(path.c_str());
}

TEST_CASE("folded graphs and bad resolutions are refused") {
  FlowState st = make_flow_state(64, [](double x, double) { return 2.0 * std::sin(2 * kPi * x); });
  Geometry geom = compute_geometry(st.grid);
  CHECK_THROWS_WITH_AS(willmore_velocity(geom), doctest::Contains("GraphFold"), DomainError);
  CHECK_THROWS_AS(make_flow_state(4, [](double, double) { return 0.0; }), DomainError);
  FlowState ok = make_flow_state(16, [](double, double) { return 0.0; });
  CHECK_THROWS_AS(concentration_probe(compute_geometry(ok.grid), -0.1), DomainError);
}
