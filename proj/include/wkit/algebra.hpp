#pragma once

#include <array>
#include <vector>

#include "wkit/common.hpp"

namespace wkit {

// Values in the exterior algebra Lambda(R^d), d <= 5, stored densely over
// basis bitmasks: coefficient c[mask] multiplies dx^{i1} ^ ... ^ dx^{ik}
// with i1 < ... < ik the set bits of mask. grade = popcount(mask).
struct MV {
  int d = 0;
  std::array<double, 32> c{};

  MV() = default;
  explicit MV(int dim) : d(dim) {}
  static MV scalar(int dim, double v) {
    MV r(dim);
    r.c[0] = v;
    return r;
  }
  static MV vec(int dim, const double* v) {
    MV r(dim);
    for (int i = 0; i < dim; ++i) r.c[1u << i] = v[i];
    return r;
  }
  unsigned size() const { return 1u << d; }
  double& at(unsigned mask) { return c[mask]; }
  double at(unsigned mask) const { return c[mask]; }
  double max_abs() const {
    double m = 0.0;
    for (unsigned k = 0; k < size(); ++k) m = std::max(m, std::abs(c[k]));
    return m;
  }
};

int grade(unsigned mask);
// sign of reordering e_a ^ e_b into increasing order; 0 if masks overlap
int sign_wedge(unsigned a, unsigned b);

MV add(const MV& a, const MV& b);
MV sub(const MV& a, const MV& b);
MV scale(const MV& a, double s);
MV wedge(const MV& a, const MV& b);

// orthonormal-basis pairing, summed over all grades
double euclid_pair(const MV& a, const MV& b);
// adjoint of wedge: <a -| b, t> = <a, b ^ t>; zero when grade(b) > grade(a)
MV euclid_interior(const MV& a, const MV& b);
// d == 3, grade-1 inputs only
MV cross3(const MV& a, const MV& b);

// metric data at one node of an n-dimensional parameter domain
struct MetricAtPoint {
  int n = 0;
  double g[16]{};
  double ginv[16]{};
  double sqrt_det = 0.0;
  // throws DomainError("DegenerateMetric...") unless SPD within roundoff
  static MetricAtPoint make(int n, const double* gmat);
};

// <dx^I, dx^J>_g = det(ginv[I_a, J_b]); zero for mismatched grades
double basis_pair(const MetricAtPoint& M, unsigned I, unsigned J);
double metric_pair(const MetricAtPoint& M, const MV& a, const MV& b);
// raise all indices: out[K] = sum_J <dx^K, dx^J>_g b[J]
MV raise_indices(const MetricAtPoint& M, const MV& b);
// (*a)_K = sign(K^c, K) sqrt(det g) <dx^{K^c}, a>_g
MV hodge(const MetricAtPoint& M, const MV& a);
// inverse of hodge: per grade, *^{-1} = (-1)^{k(n-k)} * on the image of k-forms
MV hodge_inv(const MetricAtPoint& M, const MV& a);
// adjoint of wedge w.r.t. the metric pairing: <a -|_g b, t>_g = <a, b ^ t>_g
MV metric_interior(const MetricAtPoint& M, const MV& a, const MV& b);

// ambient (Lambda R^m, Euclidean) tensor base (Lambda R^n, metric g) values;
// coefficient at(A, B) multiplies e_A tensor dx^B
struct Mixed {
  int m = 0, n = 0;
  std::vector<double> c;
  Mixed() = default;
  Mixed(int mm, int nn) : m(mm), n(nn), c((size_t(1) << mm) * (size_t(1) << nn), 0.0) {}
  double& at(unsigned A, unsigned B) { return c[(size_t(A) << n) | B]; }
  double at(unsigned A, unsigned B) const { return c[(size_t(A) << n) | B]; }
  double max_abs() const {
    double r = 0.0;
    for (double v : c) r = std::max(r, std::abs(v));
    return r;
  }
};

enum class AmbOp { Dot, Cross, Wedge, Interior };
enum class BaseOp { Wedge, InteriorG };

// combines factor-wise: ambient parts by ao, base parts by bo. Dot pairs
// equal ambient grades; Cross requires m == 3 and grade-1 ambient parts.
// No sign is exchanged between the ambient and base factors.
Mixed mixed_product(AmbOp ao, BaseOp bo, const Mixed& A, const Mixed& B,
                    const MetricAtPoint* M);

// dense helpers for small determinants/inverses, n <= 4
double det_small(int n, const double* a);
// returns det; inv may alias nothing; throws nothing, caller checks det
double invert_small(int n, const double* a, double* inv);

}  // namespace wkit
