#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "wkit/algebra.hpp"

using namespace wkit;

namespace {

MetricAtPoint random_spd(int n, Rng& rng) {
  double a[16], g[16];
  for (int i = 0; i < n * n; ++i) a[i] = rng.normal();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += a[k * n + i] * a[k * n + j];
      g[i * n + j] = s + (i == j ? 0.3 : 0.0);
    }
  }
  return MetricAtPoint::make(n, g);
}

MV random_mv(int d, Rng& rng) {
  MV v(d);
  for (unsigned k = 0; k < v.size(); ++k) v.c[k] = rng.uniform(-1.0, 1.0);
  return v;
}

MV random_grade(int d, int k, Rng& rng) {
  MV v(d);
  for (unsigned m = 0; m < v.size(); ++m) {
    if (grade(m) == k) v.c[m] = rng.uniform(-1.0, 1.0);
  }
  return v;
}

double mv_dist(const MV& a, const MV& b) {
  double r = 0.0;
  for (unsigned k = 0; k < a.size(); ++k) r = std::max(r, std::abs(a.c[k] - b.c[k]));
  return r;
}

}  // namespace

TEST_CASE("wedge basics") {
  MV dx1(2), dx2(2);
  dx1.c[1] = 1.0;
  dx2.c[2] = 1.0;
  MV w12 = wedge(dx1, dx2);
  MV w21 = wedge(dx2, dx1);
  CHECK(w12.c[3] == doctest::Approx(1.0));
  CHECK(w21.c[3] == doctest::Approx(-1.0));
  CHECK(wedge(dx1, dx1).max_abs() == 0.0);
  // associativity, random draw in d = 5
  Rng rng(7);
  MV a = random_mv(5, rng), b = random_mv(5, rng), c = random_mv(5, rng);
  CHECK(mv_dist(wedge(wedge(a, b), c), wedge(a, wedge(b, c))) < 1e-12);
}

TEST_CASE("euclid interior hand cases") {
  MV e1(2), e2(2), e12(2);
  e1.c[1] = 1.0;
  e2.c[2] = 1.0;
  e12.c[3] = 1.0;
  MV r = euclid_interior(e12, e1);
  CHECK(r.c[2] == doctest::Approx(1.0));  // (e1^e2) -| e1 = e2
  r = euclid_interior(e12, e2);
  CHECK(r.c[1] == doctest::Approx(-1.0));  // (e1^e2) -| e2 = -e1
}

TEST_CASE("euclid interior vector rule d=5") {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    MV a = random_grade(5, 1, rng), b = random_grade(5, 1, rng), c = random_grade(5, 1, rng);
    MV lhs = euclid_interior(wedge(a, b), c);
    MV rhs = sub(scale(b, euclid_pair(a, c)), scale(a, euclid_pair(b, c)));
    CHECK(mv_dist(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("cross3") {
  double v1[3] = {1, 0, 0}, v2[3] = {0, 1, 0};
  MV e1 = MV::vec(3, v1), e2 = MV::vec(3, v2);
  MV r = cross3(e1, e2);
  CHECK(r.c[4] == doctest::Approx(1.0));
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    MV a = random_grade(3, 1, rng), b = random_grade(3, 1, rng);
    MV axb = cross3(a, b);
    CHECK(std::abs(euclid_pair(axb, a)) < 1e-12);
    CHECK(std::abs(euclid_pair(axb, b)) < 1e-12);
    // |a x b|^2 = |a|^2 |b|^2 - <a,b>^2
    double lhs = euclid_pair(axb, axb);
    double rhs = euclid_pair(a, a) * euclid_pair(b, b) - sq(euclid_pair(a, b));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("metric make rejects degenerate") {
  double bad[4] = {1, 2, 2, 1};
  CHECK_THROWS_AS(MetricAtPoint::make(2, bad), DomainError);
  double good[4] = {2, 0.5, 0.5, 1};
  MetricAtPoint M = MetricAtPoint::make(2, good);
  CHECK(M.sqrt_det == doctest::Approx(std::sqrt(1.75)));
  // ginv * g = I
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      double s = 0.0;
      for (int k = 0; k < 2; ++k) s += M.ginv[i * 2 + k] * M.g[k * 2 + j];
      CHECK(s == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("hodge hand cases") {
  double flat[4] = {1, 0, 0, 1};
  MetricAtPoint F = MetricAtPoint::make(2, flat);
  MV dx1(2), dx2(2), one(2), vol(2);
  dx1.c[1] = 1.0;
  dx2.c[2] = 1.0;
  one.c[0] = 1.0;
  vol.c[3] = 1.0;
  CHECK(mv_dist(hodge(F, dx1), dx2) < 1e-14);
  CHECK(mv_dist(hodge(F, dx2), scale(dx1, -1.0)) < 1e-14);
  CHECK(mv_dist(hodge(F, one), vol) < 1e-14);
  CHECK(mv_dist(hodge(F, vol), one) < 1e-14);

  double gd[4] = {4, 0, 0, 1};
  MetricAtPoint D = MetricAtPoint::make(2, gd);
  CHECK(mv_dist(hodge(D, dx1), scale(dx2, 0.5)) < 1e-14);
  CHECK(mv_dist(hodge(D, dx2), scale(dx1, -2.0)) < 1e-14);
  CHECK(mv_dist(hodge(D, one), scale(vol, 2.0)) < 1e-14);
  CHECK(mv_dist(hodge(D, vol), scale(one, 0.5)) < 1e-14);
}

TEST_CASE("double hodge sign per grade") {
  Rng rng(23);
  for (int n = 2; n <= 4; ++n) {
    for (int t = 0; t < 100; ++t) {
      MetricAtPoint M = random_spd(n, rng);
      for (int k = 0; k <= n; ++k) {
        MV a = random_grade(n, k, rng);
        MV ss = hodge(M, hodge(M, a));
        int sgn = ((k * (n - k)) & 1) ? -1 : 1;
        double scale_ref = std::max(1.0, a.max_abs());
        CHECK(mv_dist(ss, scale(a, sgn)) < 1e-10 * scale_ref);
      }
    }
  }
}

TEST_CASE("hodge_inv inverts hodge, mixed grades") {
  Rng rng(29);
  for (int n = 2; n <= 4; ++n) {
    for (int t = 0; t < 200; ++t) {
      MetricAtPoint M = random_spd(n, rng);
      MV a = random_mv(n, rng);
      MV back = hodge_inv(M, hodge(M, a));
      CHECK(mv_dist(back, a) < 1e-9 * std::max(1.0, a.max_abs()));
    }
  }
}

TEST_CASE("pairing against volume form: a ^ *b = <a,b>_g dvol") {
  Rng rng(31);
  for (int n = 2; n <= 4; ++n) {
    unsigned full = (1u << n) - 1;
    for (int t = 0; t < 200; ++t) {
      MetricAtPoint M = random_spd(n, rng);
      for (int k = 0; k <= n; ++k) {
        MV a = random_grade(n, k, rng), b = random_grade(n, k, rng);
        MV w = wedge(a, hodge(M, b));
        double lhs = w.c[full];
        double rhs = metric_pair(M, a, b) * M.sqrt_det;
        CHECK(std::abs(lhs - rhs) < 1e-9 * std::max(1.0, std::abs(rhs)));
        // pairing symmetry
        CHECK(std::abs(metric_pair(M, a, b) - metric_pair(M, b, a)) < 1e-10);
      }
    }
  }
}

TEST_CASE("metric interior adjunction, brute force over basis") {
  Rng rng(37);
  for (int n = 2; n <= 4; ++n) {
    for (int t = 0; t < 10; ++t) {
      MetricAtPoint M = random_spd(n, rng);
      unsigned sz = 1u << n;
      for (unsigned I = 0; I < sz; ++I) {
        for (unsigned J = 0; J < sz; ++J) {
          for (unsigned K = 0; K < sz; ++K) {
            MV a(n), b(n), tt(n);
            a.c[I] = 1.0;
            b.c[J] = 1.0;
            tt.c[K] = 1.0;
            double lhs = metric_pair(M, metric_interior(M, a, b), tt);
            double rhs = metric_pair(M, a, wedge(b, tt));
            CHECK(std::abs(lhs - rhs) < 1e-9 * (1.0 + std::abs(rhs)));
          }
        }
      }
    }
  }
}

TEST_CASE("star of wedge equals interior of star, 1-form second factor") {
  Rng rng(41);
  for (int n = 2; n <= 4; ++n) {
    for (int t = 0; t < 300; ++t) {
      MetricAtPoint M = random_spd(n, rng);
      for (int k = 0; k < n; ++k) {
        MV a = random_grade(n, k, rng);
        MV b = random_grade(n, 1, rng);
        MV lhs = hodge(M, wedge(a, b));
        MV rhs = metric_interior(M, hodge(M, a), b);
        CHECK(mv_dist(lhs, rhs) < 1e-9 * std::max(1.0, lhs.max_abs()));
      }
    }
  }
}

TEST_CASE("mixed product: ambient contraction of wedge, base scalars") {
  // ((n ^ u) -| u) with base 0-forms mirrors the pure ambient rule
  Rng rng(43);
  double flat[1] = {1.0};
  (void)flat;
  for (int t = 0; t < 100; ++t) {
    MV nv = random_grade(5, 1, rng), uv = random_grade(5, 1, rng);
    Mixed A(5, 2), B(5, 2);
    for (int i = 0; i < 5; ++i) {
      A.at(1u << i, 0) = nv.c[1u << i];
      B.at(1u << i, 0) = uv.c[1u << i];
    }
    double g2[4] = {1, 0, 0, 1};
    MetricAtPoint M2 = MetricAtPoint::make(2, g2);
    Mixed nu = mixed_product(AmbOp::Wedge, BaseOp::Wedge, A, B, nullptr);
    Mixed r = mixed_product(AmbOp::Interior, BaseOp::InteriorG, nu, B, &M2);
    // (n ^ u) -| u = <n,u>u - <u,u>n
    double nu_d = euclid_pair(nv, uv), uu = euclid_pair(uv, uv);
    for (int i = 0; i < 5; ++i) {
      double want = nu_d * uv.c[1u << i] - uu * nv.c[1u << i];
      CHECK(r.at(1u << i, 0) == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("mixed product: base interior uses metric") {
  // e_1 dx^1 dotted with e_1 dx^2 under ginv = [[A,B],[B,C]] gives B
  double g[4] = {2.0, -0.5, -0.5, 1.0};
  MetricAtPoint M = MetricAtPoint::make(2, g);
  Mixed A(3, 2), B(3, 2);
  A.at(1, 1) = 1.0;  // e_1 tensor dx^1
  B.at(1, 2) = 1.0;  // e_1 tensor dx^2
  Mixed r = mixed_product(AmbOp::Dot, BaseOp::InteriorG, A, B, &M);
  CHECK(r.at(0, 0) == doctest::Approx(M.ginv[0 * 2 + 1]).epsilon(1e-12));
}
