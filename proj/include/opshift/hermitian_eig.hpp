#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "opshift/complex_matrix.hpp"

namespace opshift {

struct HermitianEig {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // unitary, column k pairs with values[k]
  double off_residual = 0.0;   // sqrt(sum of squared off-diagonal moduli) at exit
  int sweeps = 0;
};

namespace detail {

inline double off_diagonal_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

}  // namespace detail

/// Cyclic Jacobi eigensolver for Hermitian matrices. Iterates plane rotations
/// until off(A) <= tol * ||A||_F or max_sweeps is reached. Input is symmetrized
/// internally; a materially non-Hermitian input is rejected.
inline HermitianEig hermitian_eigensystem(const ComplexMatrix& a_in, double tol = 1e-13,
                                          int max_sweeps = 100) {
  const int d = a_in.dim();
  const double scale = a_in.frobenius_norm();
  {
    const ComplexMatrix skew = a_in - a_in.adjoint();
    if (skew.frobenius_norm() > 1e-8 * std::max(1.0, scale))
      throw std::invalid_argument("hermitian_eigensystem: input is not Hermitian");
  }

  ComplexMatrix a = hermitian_part(a_in);
  ComplexMatrix v = ComplexMatrix::identity(d);

  HermitianEig out;
  const double target = tol * std::max(scale, 1e-300);
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (detail::off_diagonal_norm(a) <= target) break;
    for (int p = 0; p < d - 1; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const cplx beta = a(p, q);
        const double b = std::abs(beta);
        if (b <= 1e-300) continue;
        const double alpha = a(p, p).real();
        const double gamma = a(q, q).real();
        const cplx phase = beta / b;  // e^{i phi}

        // Real 2x2 rotation for [[alpha, b],[b, gamma]].
        const double theta = (gamma - alpha) / (2.0 * b);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        // Unitary G differs from I only in the (p,q) plane:
        //   G(p,p)=c, G(p,q)=s, G(q,p)=-s*conj(phase), G(q,q)=c*conj(phase).
        const cplx gqp = -s * std::conj(phase);
        const cplx gqq = c * std::conj(phase);

        // A <- G* A G: column pass then row pass.
        for (int i = 0; i < d; ++i) {
          const cplx aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip + gqp * aiq;
          a(i, q) = s * aip + gqq * aiq;
        }
        for (int j = 0; j < d; ++j) {
          const cplx apj = a(p, j), aqj = a(q, j);
          a(p, j) = c * apj + std::conj(gqp) * aqj;
          a(q, j) = s * apj + std::conj(gqq) * aqj;
        }
        // Keep the pivot pair exactly Hermitian against drift.
        a(p, q) = 0.5 * (a(p, q) + std::conj(a(q, p)));
        a(q, p) = std::conj(a(p, q));

        for (int i = 0; i < d; ++i) {
          const cplx vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip + gqp * viq;
          v(i, q) = s * vip + gqq * viq;
        }
      }
    }
  }

  out.off_residual = detail::off_diagonal_norm(a);
  out.sweeps = sweep;
  out.values.resize(static_cast<size_t>(d));
  std::vector<int> order(static_cast<size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i).real() < a(j, j).real(); });
  ComplexMatrix vs(d);
  for (int k = 0; k < d; ++k) {
    out.values[static_cast<size_t>(k)] = a(order[static_cast<size_t>(k)], order[static_cast<size_t>(k)]).real();
    for (int i = 0; i < d; ++i) vs(i, k) = v(i, order[static_cast<size_t>(k)]);
  }
  out.vectors = vs;
  return out;
}

/// V f(Lambda) V* for Hermitian input.
inline ComplexMatrix apply_hermitian_function(const ComplexMatrix& a,
                                              const std::function<double(double)>& fn,
                                              double tol = 1e-13) {
  const HermitianEig eig = hermitian_eigensystem(a, tol);
  const int d = a.dim();
  ComplexMatrix r(d);
  for (int k = 0; k < d; ++k) {
    const double fk = fn(eig.values[static_cast<size_t>(k)]);
    if (fk == 0.0) continue;
    for (int i = 0; i < d; ++i) {
      const cplx vik = eig.vectors(i, k);
      if (vik == cplx{}) continue;
      for (int j = 0; j < d; ++j) r(i, j) += fk * vik * std::conj(eig.vectors(j, k));
    }
  }
  return r;
}

/// Square root of a positive semidefinite Hermitian matrix; eigenvalues below
/// clamp_tol * max(1, |lambda|_max) are treated as zero.
inline ComplexMatrix sqrt_psd(const ComplexMatrix& a, double clamp_tol = 1e-13) {
  const HermitianEig eig = hermitian_eigensystem(a);
  double lmax = 0.0;
  for (double l : eig.values) lmax = std::max(lmax, std::abs(l));
  const double floor = clamp_tol * std::max(1.0, lmax);
  return apply_hermitian_function(
      a, [floor](double l) { return l <= floor ? 0.0 : std::sqrt(l); });
}

/// Sum of |eigenvalue| for Hermitian input, i.e. the trace of |A|.
inline double trace_abs_hermitian(const ComplexMatrix& a) {
  const HermitianEig eig = hermitian_eigensystem(a);
  double s = 0.0;
  for (double l : eig.values) s += std::abs(l);
  return s;
}

}  // namespace opshift
