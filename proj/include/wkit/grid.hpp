#pragma once

#include <array>
#include <cstdint>

#include "wkit/common.hpp"

namespace wkit {

// Structured chart grid: n parameter axes (n <= 4), m ambient components per
// node, row-major with the last axis fastest. Periodic axes identify lo with
// hi (spacing h = (hi-lo)/dims, no duplicate node); non-periodic axes carry
// both endpoints (h = (hi-lo)/(dims-1)).
struct Grid {
  int n = 0, m = 0;
  std::array<int, 4> dims{1, 1, 1, 1};
  std::array<double, 4> lo{};
  std::array<double, 4> hi{};
  std::array<bool, 4> periodic{};
  std::vector<double> values;  // node_count() * m
  std::vector<double> pou;     // partition-of-unity weight, node_count() or empty
  // optional affine background A (entry [c*4 + axis]): the immersion is
  // A x + values, values periodic. Lets graphs over periodic domains keep
  // exact wraparound stencils.
  std::array<double, 20> affine{};

  size_t node_count() const {
    size_t N = 1;
    for (int a = 0; a < n; ++a) N *= dims[a];
    return N;
  }
  double h(int axis) const {
    int d = dims[axis];
    return periodic[axis] ? (hi[axis] - lo[axis]) / d : (hi[axis] - lo[axis]) / (d - 1);
  }
  double coord(int axis, int i) const { return lo[axis] + i * h(axis); }
  size_t stride(int axis) const {
    size_t s = 1;
    for (int a = axis + 1; a < n; ++a) s *= dims[a];
    return s;
  }
  size_t index(const std::array<int, 4>& iv) const {
    size_t idx = 0;
    for (int a = 0; a < n; ++a) idx = idx * dims[a] + iv[a];
    return idx;
  }
  void unindex(size_t idx, std::array<int, 4>& iv) const {
    for (int a = n - 1; a >= 0; --a) {
      iv[a] = static_cast<int>(idx % dims[a]);
      idx /= dims[a];
    }
    for (int a = n; a < 4; ++a) iv[a] = 0;
  }
  void alloc() { values.assign(node_count() * m, 0.0); }
  // full immersion value including the affine background
  void phi_at(size_t idx, double* out) const {
    std::array<int, 4> iv{};
    unindex(idx, iv);
    for (int c = 0; c < m; ++c) {
      double v = values[idx * m + c];
      for (int a = 0; a < n; ++a) v += affine[c * 4 + a] * coord(a, iv[a]);
      out[c] = v;
    }
  }
  bool has_affine() const {
    for (double a : affine) {
      if (a != 0.0) return true;
    }
    return false;
  }
};

// Chart collection covering one immersion. closed: the partition-of-unity
// weights tile the image, so integrals are weighted sums over charts. Open
// atlases are single patches with boundary.
struct Atlas {
  int n = 0, m = 0;
  bool closed = false;
  std::vector<Grid> charts;
};

// Fornberg weights: out[j][k] = weight of node xs[j] for the k-th derivative
// at x0, k = 0..mord
std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& xs,
                                            int mord);

// d^order/d(axis)^order applied to every component of src (layout N*comps).
// acc in {2,4}. Interior stencils are centered; non-periodic boundaries use
// one-sided windows of matching order.
std::vector<double> differentiate(const Grid& G, const std::vector<double>& src,
                                  int comps, int axis, int order, int acc);

// tensor-product quadrature weight per node; periodic axes trapezoid (= h),
// non-periodic composite Simpson (3/8 blend when the node count is even)
std::vector<double> quad_weights(const Grid& G);

// 1 where a node participates in sup-norms: `collar` nodes dropped at each
// non-periodic boundary.  with_pou also drops zero partition-of-unity nodes.
std::vector<uint8_t> interior_mask(const Grid& G, int collar, bool with_pou = true);

}  // namespace wkit
