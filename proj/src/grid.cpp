#include "wkit/grid.hpp"

#include <algorithm>

namespace wkit {

std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& xs,
                                            int mord) {
  int nn = static_cast<int>(xs.size());
  std::vector<std::vector<double>> c(nn, std::vector<double>(mord + 1, 0.0));
  double c1 = 1.0;
  double c4 = xs[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < nn; ++i) {
    int mn = std::min(i, mord);
    double c2 = 1.0;
    double c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) {
        c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  return c;
}

namespace {

struct StencilPlan {
  // interior: centered, offsets -r..r
  std::vector<double> wint;
  int r = 0;
  // boundary rows for non-periodic axes: per node index, window start + weights
  std::vector<int> bstart;
  std::vector<std::vector<double>> bw;
  int nboundary_lo = 0;  // rows 0..nboundary_lo-1 use bw[i]
  int nboundary_hi = 0;  // rows N-nboundary_hi..N-1 use bw
};

StencilPlan make_plan(const Grid& G, int axis, int order, int acc) {
  if (acc != 2 && acc != 4) throw DomainError("differentiate: acc must be 2 or 4");
  if (order != 1 && order != 2) throw DomainError("differentiate: order must be 1 or 2");
  int N = G.dims[axis];
  double h = G.h(axis);
  StencilPlan P;
  int w_int = acc + 1;  // odd, centered; acc exact for both orders
  P.r = (w_int - 1) / 2;
  {
    std::vector<double> xs(w_int);
    for (int j = 0; j < w_int; ++j) xs[j] = (j - P.r) * h;
    auto c = fd_weights(0.0, xs, order);
    P.wint.resize(w_int);
    for (int j = 0; j < w_int; ++j) P.wint[j] = c[j][order];
  }
  if (!G.periodic[axis]) {
    if (N < acc + order) throw DomainError("differentiate: axis too short for stencil");
    int sb = acc + order;  // one-sided window size keeping the requested order
    P.nboundary_lo = P.r;
    P.nboundary_hi = P.r;
    P.bstart.assign(N, -1);
    P.bw.assign(N, {});
    for (int i = 0; i < N; ++i) {
      if (i >= P.r && i < N - P.r) continue;
      int start = std::clamp(i - (sb - 1) / 2, 0, N - sb);
      std::vector<double> xs(sb);
      for (int j = 0; j < sb; ++j) xs[j] = G.coord(axis, start + j);
      auto c = fd_weights(G.coord(axis, i), xs, order);
      P.bstart[i] = start;
      P.bw[i].resize(sb);
      for (int j = 0; j < sb; ++j) P.bw[i][j] = c[j][order];
    }
  } else if (N < 2 * P.r + 1) {
    throw DomainError("differentiate: periodic axis too short for stencil");
  }
  return P;
}

}  // namespace

std::vector<double> differentiate(const Grid& G, const std::vector<double>& src,
                                  int comps, int axis, int order, int acc) {
  StencilPlan P = make_plan(G, axis, order, acc);
  size_t N = G.node_count();
  if (src.size() != N * comps) throw DomainError("differentiate: bad field size");
  std::vector<double> dst(N * comps, 0.0);
  int Na = G.dims[axis];
  size_t sa = G.stride(axis) * comps;
  bool per = G.periodic[axis];

  // enumerate lines along `axis`: loop all nodes, process those with iv[axis]=0
  std::array<int, 4> od{1, 1, 1, 1};
  for (int a = 0; a < G.n; ++a) od[a] = (a == axis) ? 1 : G.dims[a];
  size_t nlines = size_t(od[0]) * od[1] * od[2] * od[3];
  parallel_for(nlines, [&](size_t lb, size_t le) {
    for (size_t line = lb; line < le; ++line) {
      size_t rem = line;
      std::array<int, 4> iv{0, 0, 0, 0};
      for (int a = G.n - 1; a >= 0; --a) {
        iv[a] = static_cast<int>(rem % od[a]);
        rem /= od[a];
      }
      iv[axis] = 0;
      size_t base = G.index(iv) * comps;
      for (int i = 0; i < Na; ++i) {
        size_t out = base + size_t(i) * sa;
        if (per) {
          for (int c = 0; c < comps; ++c) {
            double s = 0.0;
            for (int j = -P.r; j <= P.r; ++j) {
              int k = i + j;
              if (k < 0) k += Na;
              if (k >= Na) k -= Na;
              s += P.wint[j + P.r] * src[base + size_t(k) * sa + c];
            }
            dst[out + c] = s;
          }
        } else if (P.bstart.empty() || P.bstart[i] < 0) {
          for (int c = 0; c < comps; ++c) {
            double s = 0.0;
            for (int j = -P.r; j <= P.r; ++j) {
              s += P.wint[j + P.r] * src[base + size_t(i + j) * sa + c];
            }
            dst[out + c] = s;
          }
        } else {
          const auto& w = P.bw[i];
          int start = P.bstart[i];
          for (int c = 0; c < comps; ++c) {
            double s = 0.0;
            for (size_t j = 0; j < w.size(); ++j) {
              s += w[j] * src[base + size_t(start + j) * sa + c];
            }
            dst[out + c] = s;
          }
        }
      }
    }
  });
  return dst;
}

namespace {

std::vector<double> axis_quad(const Grid& G, int axis) {
  int N = G.dims[axis];
  double h = G.h(axis);
  std::vector<double> w(N, h);
  if (G.periodic[axis]) return w;
  if (N < 4) {  // trapezoid fallback, unused by shipped shapes
    std::fill(w.begin(), w.end(), h);
    w[0] = w[N - 1] = h / 2;
    return w;
  }
  std::fill(w.begin(), w.end(), 0.0);
  auto simpson = [&](int a, int b) {  // odd count b-a+1
    for (int i = a; i <= b; ++i) {
      double f = (i == a || i == b) ? 1.0 : ((i - a) % 2 == 1 ? 4.0 : 2.0);
      w[i] += f * h / 3.0;
    }
  };
  if (N % 2 == 1) {
    simpson(0, N - 1);
  } else if (N == 4) {
    const double q[4] = {3.0 / 8, 9.0 / 8, 9.0 / 8, 3.0 / 8};
    for (int i = 0; i < 4; ++i) w[i] = q[i] * h;
  } else {
    simpson(0, N - 4);
    const double q[4] = {3.0 / 8, 9.0 / 8, 9.0 / 8, 3.0 / 8};
    for (int i = 0; i < 4; ++i) w[N - 4 + i] += q[i] * h;
  }
  return w;
}

}  // namespace

std::vector<double> quad_weights(const Grid& G) {
  std::array<std::vector<double>, 4> per_axis;
  for (int a = 0; a < G.n; ++a) per_axis[a] = axis_quad(G, a);
  size_t N = G.node_count();
  std::vector<double> w(N, 1.0);
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < N; ++idx) {
    G.unindex(idx, iv);
    double v = 1.0;
    for (int a = 0; a < G.n; ++a) v *= per_axis[a][iv[a]];
    w[idx] = v;
  }
  return w;
}

std::vector<uint8_t> interior_mask(const Grid& G, int collar, bool with_pou) {
  size_t N = G.node_count();
  std::vector<uint8_t> mask(N, 1);
  std::array<int, 4> iv{};
  for (size_t idx = 0; idx < N; ++idx) {
    G.unindex(idx, iv);
    bool ok = true;
    for (int a = 0; a < G.n && ok; ++a) {
      if (!G.periodic[a] && (iv[a] < collar || iv[a] >= G.dims[a] - collar)) ok = false;
    }
    if (ok && with_pou && !G.pou.empty() && G.pou[idx] <= 1e-14) ok = false;
    mask[idx] = ok ? 1 : 0;
  }
  return mask;
}

}  // namespace wkit
