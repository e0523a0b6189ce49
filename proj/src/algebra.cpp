#include "wkit/algebra.hpp"

#include <cstring>
#include <sstream>

namespace wkit {

int grade(unsigned mask) { return __builtin_popcount(mask); }

int sign_wedge(unsigned a, unsigned b) {
  if (a & b) return 0;
  int inv = 0;
  for (int j = 0; j < 5; ++j) {
    if (b & (1u << j)) inv += __builtin_popcount(a >> (j + 1));
  }
  return (inv & 1) ? -1 : 1;
}

MV add(const MV& a, const MV& b) {
  MV r(a.d);
  for (unsigned k = 0; k < r.size(); ++k) r.c[k] = a.c[k] + b.c[k];
  return r;
}

MV sub(const MV& a, const MV& b) {
  MV r(a.d);
  for (unsigned k = 0; k < r.size(); ++k) r.c[k] = a.c[k] - b.c[k];
  return r;
}

MV scale(const MV& a, double s) {
  MV r(a.d);
  for (unsigned k = 0; k < r.size(); ++k) r.c[k] = a.c[k] * s;
  return r;
}

MV wedge(const MV& a, const MV& b) {
  MV r(a.d);
  for (unsigned A = 0; A < a.size(); ++A) {
    if (a.c[A] == 0.0) continue;
    for (unsigned B = 0; B < b.size(); ++B) {
      if (b.c[B] == 0.0) continue;
      int s = sign_wedge(A, B);
      if (s) r.c[A | B] += s * a.c[A] * b.c[B];
    }
  }
  return r;
}

double euclid_pair(const MV& a, const MV& b) {
  double s = 0.0;
  for (unsigned k = 0; k < a.size(); ++k) s += a.c[k] * b.c[k];
  return s;
}

MV euclid_interior(const MV& a, const MV& b) {
  MV r(a.d);
  for (unsigned A = 0; A < a.size(); ++A) {
    double ca = a.c[A];
    if (ca == 0.0) continue;
    unsigned J = A;
    while (true) {
      double cb = b.c[J];
      if (cb != 0.0) {
        unsigned Mm = A & ~J;
        r.c[Mm] += cb * sign_wedge(J, Mm) * ca;
      }
      if (J == 0) break;
      J = (J - 1) & A;
    }
  }
  return r;
}

MV cross3(const MV& a, const MV& b) {
  if (a.d != 3 || b.d != 3) throw DomainError("cross3: requires d == 3");
  MV r(3);
  double a1 = a.c[1], a2 = a.c[2], a3 = a.c[4];
  double b1 = b.c[1], b2 = b.c[2], b3 = b.c[4];
  r.c[1] = a2 * b3 - a3 * b2;
  r.c[2] = a3 * b1 - a1 * b3;
  r.c[4] = a1 * b2 - a2 * b1;
  return r;
}

double det_small(int n, const double* a) {
  double m[16];
  std::memcpy(m, a, sizeof(double) * n * n);
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(m[r * n + col]) > std::abs(m[piv * n + col])) piv = r;
    }
    if (m[piv * n + col] == 0.0) return 0.0;
    if (piv != col) {
      for (int k = 0; k < n; ++k) std::swap(m[piv * n + k], m[col * n + k]);
      det = -det;
    }
    det *= m[col * n + col];
    for (int r = col + 1; r < n; ++r) {
      double f = m[r * n + col] / m[col * n + col];
      for (int k = col; k < n; ++k) m[r * n + k] -= f * m[col * n + k];
    }
  }
  return det;
}

double invert_small(int n, const double* a, double* inv) {
  double m[16];
  std::memcpy(m, a, sizeof(double) * n * n);
  double id[16] = {0};
  for (int i = 0; i < n; ++i) id[i * n + i] = 1.0;
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(m[r * n + col]) > std::abs(m[piv * n + col])) piv = r;
    }
    if (m[piv * n + col] == 0.0) return 0.0;
    if (piv != col) {
      for (int k = 0; k < n; ++k) {
        std::swap(m[piv * n + k], m[col * n + k]);
        std::swap(id[piv * n + k], id[col * n + k]);
      }
      det = -det;
    }
    double p = m[col * n + col];
    det *= p;
    for (int k = 0; k < n; ++k) {
      m[col * n + k] /= p;
      id[col * n + k] /= p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = m[r * n + col];
      if (f == 0.0) continue;
      for (int k = 0; k < n; ++k) {
        m[r * n + k] -= f * m[col * n + k];
        id[r * n + k] -= f * id[col * n + k];
      }
    }
  }
  std::memcpy(inv, id, sizeof(double) * n * n);
  return det;
}

MetricAtPoint MetricAtPoint::make(int n, const double* gmat) {
  MetricAtPoint M;
  M.n = n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      M.g[i * n + j] = 0.5 * (gmat[i * n + j] + gmat[j * n + i]);
    }
  }
  // Sylvester: all leading principal minors positive
  for (int k = 1; k <= n; ++k) {
    double sub[16];
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) sub[i * k + j] = M.g[i * n + j];
    }
    double mk = det_small(k, sub);
    if (!(mk > 0.0) || !std::isfinite(mk)) {
      std::ostringstream os;
      os << "DegenerateMetric: leading minor " << k << " = " << mk;
      throw DomainError(os.str());
    }
  }
  double det = invert_small(n, M.g, M.ginv);
  M.sqrt_det = std::sqrt(det);
  return M;
}

double basis_pair(const MetricAtPoint& M, unsigned I, unsigned J) {
  int k = grade(I);
  if (k != grade(J)) return 0.0;
  if (k == 0) return 1.0;
  int ii[4], jj[4], p = 0, q = 0;
  for (int b = 0; b < M.n; ++b) {
    if (I & (1u << b)) ii[p++] = b;
    if (J & (1u << b)) jj[q++] = b;
  }
  double sub[16];
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) sub[a * k + b] = M.ginv[ii[a] * M.n + jj[b]];
  }
  return det_small(k, sub);
}

double metric_pair(const MetricAtPoint& M, const MV& a, const MV& b) {
  double s = 0.0;
  for (unsigned I = 0; I < a.size(); ++I) {
    if (a.c[I] == 0.0) continue;
    for (unsigned J = 0; J < b.size(); ++J) {
      if (b.c[J] == 0.0) continue;
      double p = basis_pair(M, I, J);
      if (p != 0.0) s += a.c[I] * b.c[J] * p;
    }
  }
  return s;
}

MV raise_indices(const MetricAtPoint& M, const MV& b) {
  MV r(b.d);
  for (unsigned K = 0; K < b.size(); ++K) {
    double s = 0.0;
    for (unsigned J = 0; J < b.size(); ++J) {
      if (b.c[J] == 0.0) continue;
      double p = basis_pair(M, K, J);
      if (p != 0.0) s += p * b.c[J];
    }
    r.c[K] = s;
  }
  return r;
}

MV hodge(const MetricAtPoint& M, const MV& a) {
  unsigned full = (1u << M.n) - 1;
  MV r(M.n);
  for (unsigned K = 0; K <= full; ++K) {
    unsigned Kc = full & ~K;
    int sgn = sign_wedge(Kc, K);
    double s = 0.0;
    for (unsigned I = 0; I <= full; ++I) {
      if (a.c[I] == 0.0) continue;
      double p = basis_pair(M, Kc, I);
      if (p != 0.0) s += p * a.c[I];
    }
    r.c[K] = sgn * M.sqrt_det * s;
  }
  return r;
}

MV hodge_inv(const MetricAtPoint& M, const MV& a) {
  MV r(M.n);
  for (int j = 0; j <= M.n; ++j) {
    MV part(M.n);
    bool any = false;
    for (unsigned k = 0; k < a.size(); ++k) {
      if (grade(k) == j && a.c[k] != 0.0) {
        part.c[k] = a.c[k];
        any = true;
      }
    }
    if (!any) continue;
    int korig = M.n - j;
    int sgn = ((korig * j) & 1) ? -1 : 1;
    MV h = hodge(M, part);
    for (unsigned k = 0; k < a.size(); ++k) r.c[k] += sgn * h.c[k];
  }
  return r;
}

MV metric_interior(const MetricAtPoint& M, const MV& a, const MV& b) {
  return euclid_interior(a, raise_indices(M, b));
}

static void cross_basis(unsigned A, unsigned B, unsigned* out_mask, int* out_sign) {
  // e_i x e_j for d == 3, masks are single bits
  int i = __builtin_ctz(A), j = __builtin_ctz(B);
  if (i == j) {
    *out_mask = 0;
    *out_sign = 0;
    return;
  }
  *out_mask = 1u << (3 - i - j);
  *out_sign = ((j - i + 3) % 3 == 1) ? 1 : -1;
}

Mixed mixed_product(AmbOp ao, BaseOp bo, const Mixed& A, const Mixed& B,
                    const MetricAtPoint* M) {
  if (A.m != B.m || A.n != B.n) throw DomainError("mixed_product: shape mismatch");
  if (bo == BaseOp::InteriorG && !M) throw DomainError("mixed_product: metric required");
  Mixed out(A.m, A.n);
  unsigned am = 1u << A.m;
  auto slice = [&](const Mixed& X, unsigned MA) {
    MV v(X.n);
    for (unsigned b = 0; b < (1u << X.n); ++b) v.c[b] = X.at(MA, b);
    return v;
  };
  for (unsigned MA = 0; MA < am; ++MA) {
    MV fa = slice(A, MA);
    if (fa.max_abs() == 0.0) continue;
    for (unsigned MB = 0; MB < am; ++MB) {
      MV fb = slice(B, MB);
      if (fb.max_abs() == 0.0) continue;
      unsigned target = 0;
      int sgn = 0;
      switch (ao) {
        case AmbOp::Dot:
          if (MA == MB) {
            target = 0;
            sgn = 1;
          }
          break;
        case AmbOp::Cross: {
          if (A.m != 3) throw DomainError("mixed_product: cross needs m == 3");
          if (grade(MA) != 1 || grade(MB) != 1) {
            throw DomainError("mixed_product: cross needs vector-valued factors");
          }
          cross_basis(MA, MB, &target, &sgn);
          break;
        }
        case AmbOp::Wedge:
          sgn = sign_wedge(MA, MB);
          target = MA | MB;
          break;
        case AmbOp::Interior:
          if ((MB & ~MA) == 0) {
            target = MA & ~MB;
            sgn = sign_wedge(MB, target);
          }
          break;
      }
      if (sgn == 0) continue;
      MV f = (bo == BaseOp::Wedge) ? wedge(fa, fb) : metric_interior(*M, fa, fb);
      for (unsigned b = 0; b < (1u << A.n); ++b) {
        if (f.c[b] != 0.0) out.at(target, b) += sgn * f.c[b];
      }
    }
  }
  return out;
}

}  // namespace wkit
