#pragma once

// Small dense S x S Hermitian block arithmetic shared by the serial and the
// OpenMP kernels. Both kernel families call exactly these routines per
// frequency, which is what makes their outputs bit-identical.

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "csbs/execution.hpp"
#include "csbs/fft.hpp"

namespace csbs::kernels::detail {

// conj(a) * b
inline cd conj_mul(cd a, cd b) {
  return {a.real() * b.real() + a.imag() * b.imag(), a.real() * b.imag() - a.imag() * b.real()};
}

inline cd mul(cd a, cd b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

// Row-major S x S block: B <- (B + B^H) / 2.
inline void hermitize(cd* b, int S) {
  for (int i = 0; i < S; ++i) {
    b[i * S + i] = {b[i * S + i].real(), 0.0};
    for (int j = i + 1; j < S; ++j) {
      const cd upper = b[i * S + j];
      const cd lower = b[j * S + i];
      const cd avg{0.5 * (upper.real() + lower.real()), 0.5 * (upper.imag() - lower.imag())};
      b[i * S + j] = avg;
      b[j * S + i] = std::conj(avg);
    }
  }
}

// out = hermitize(gram - removed) + lambda * prior; `removed` may be null, in
// which case the gram block is taken as is.
inline void regularized_block(const cd* gram, const cd* removed, const cd* prior, double lambda,
                              int S, cd* out) {
  const int n = S * S;
  if (removed != nullptr) {
    for (int k = 0; k < n; ++k) out[k] = gram[k] - removed[k];
    hermitize(out, S);
  } else {
    for (int k = 0; k < n; ++k) out[k] = gram[k];
  }
  for (int k = 0; k < n; ++k) out[k] += lambda * prior[k];
}

// Lower Cholesky factor of a Hermitian block, reading the lower triangle.
// Returns false when a pivot is not strictly positive.
inline bool cholesky(const cd* b, int S, cd* l) {
  for (int k = 0; k < S * S; ++k) l[k] = 0.0;
  for (int j = 0; j < S; ++j) {
    double d = b[j * S + j].real();
    for (int k = 0; k < j; ++k) d -= std::norm(l[j * S + k]);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double djj = std::sqrt(d);
    l[j * S + j] = djj;
    for (int i = j + 1; i < S; ++i) {
      cd v = b[i * S + j];
      for (int k = 0; k < j; ++k) v -= conj_mul(l[j * S + k], l[i * S + k]);
      l[i * S + j] = v / djj;
    }
  }
  return true;
}

// tr(B^{-1}) = ||L^{-1}||_F^2 given B = L L^H.
inline double trace_inverse_from_cholesky(const cd* l, int S) {
  cd col[kMaxSources];
  double trace = 0.0;
  for (int c = 0; c < S; ++c) {
    // Solve L z = e_c; z is zero above row c.
    for (int i = 0; i < S; ++i) {
      if (i < c) {
        col[i] = 0.0;
        continue;
      }
      cd v = (i == c) ? cd{1.0, 0.0} : cd{0.0, 0.0};
      for (int k = c; k < i; ++k) v -= mul(l[i * S + k], col[k]);
      col[i] = v / l[i * S + i].real();
      trace += std::norm(col[i]);
    }
  }
  return trace;
}

// In-place solve of L L^H x = rhs.
inline void solve_cholesky(const cd* l, int S, cd* x) {
  for (int i = 0; i < S; ++i) {
    cd v = x[i];
    for (int k = 0; k < i; ++k) v -= mul(l[i * S + k], x[k]);
    x[i] = v / l[i * S + i].real();
  }
  for (int i = S - 1; i >= 0; --i) {
    cd v = x[i];
    for (int k = i + 1; k < S; ++k) v -= conj_mul(l[k * S + i], x[k]);
    x[i] = v / l[i * S + i].real();
  }
}

using SmallMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                                  kMaxSources, kMaxSources>;

inline SmallMatrix to_matrix(const cd* b, int S) {
  SmallMatrix m(S, S);
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) m(i, j) = b[i * S + j];
  return m;
}

// Symmetric-pivoting fallback for blocks the plain Cholesky rejected.
// Accepts the block only if every pivot of D is strictly positive.
inline bool ldlt_trace_inverse(const cd* b, int S, double& trace) {
  Eigen::LDLT<SmallMatrix> ldlt(to_matrix(b, S));
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array().real() > 0.0).all()) return false;
  const SmallMatrix inv = ldlt.solve(SmallMatrix::Identity(S, S));
  trace = inv.trace().real();
  return std::isfinite(trace);
}

inline bool ldlt_solve(const cd* b, int S, cd* x) {
  Eigen::LDLT<SmallMatrix> ldlt(to_matrix(b, S));
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array().real() > 0.0).all()) return false;
  Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, kMaxSources, 1> rhs(S);
  for (int i = 0; i < S; ++i) rhs(i) = x[i];
  const auto sol = ldlt.solve(rhs).eval();
  for (int i = 0; i < S; ++i) x[i] = sol(i);
  return true;
}

inline bool trace_inverse(const cd* b, int S, double& trace) {
  cd l[kMaxSources * kMaxSources];
  if (cholesky(b, S, l)) {
    trace = trace_inverse_from_cholesky(l, S);
    return true;
  }
  return ldlt_trace_inverse(b, S, trace);
}

inline bool solve(const cd* b, int S, cd* x) {
  cd l[kMaxSources * kMaxSources];
  if (cholesky(b, S, l)) {
    solve_cholesky(l, S, x);
    return true;
  }
  return ldlt_solve(b, S, x);
}

}  // namespace csbs::kernels::detail
