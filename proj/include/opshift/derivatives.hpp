#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "opshift/analytic_function.hpp"
#include "opshift/complex_matrix.hpp"
#include "opshift/functional_calculus.hpp"
#include "opshift/path.hpp"
#include "opshift/quadrature.hpp"

namespace opshift {

/// (H0+V)^p - H0^p written as the split sum over p0 + p1 = p - 1 of
/// (H0+V)^{p0} V H0^{p1}.
inline ComplexMatrix monomial_difference(const ComplexMatrix& h0, const ComplexMatrix& v, int p) {
  if (h0.dim() != v.dim()) throw std::invalid_argument("monomial_difference: dimension mismatch");
  if (p < 1) throw std::invalid_argument("monomial_difference: exponent must be positive");
  const ComplexMatrix h1 = h0 + v;
  ComplexMatrix acc(h0.dim());
  // Running powers keep this O(p) matrix products per side.
  ComplexMatrix left = ComplexMatrix::identity(h0.dim());
  std::vector<ComplexMatrix> right(static_cast<size_t>(p));
  right[0] = ComplexMatrix::identity(h0.dim());
  for (int i = 1; i < p; ++i) right[static_cast<size_t>(i)] = right[static_cast<size_t>(i - 1)] * h0;
  for (int p0 = 0; p0 < p; ++p0) {
    acc = acc + left * v * right[static_cast<size_t>(p - 1 - p0)];
    if (p0 + 1 < p) left = left * h1;
  }
  return acc;
}

/// First or second s-derivative of (H0 + sV)^p at s = t. Order 2 with p < 2
/// returns the zero matrix rather than an error: the derivative genuinely
/// vanishes, there is just no split sum to form.
inline ComplexMatrix monomial_derivative(const ComplexMatrix& h0, const ComplexMatrix& v, int p,
                                         double t, int order) {
  if (h0.dim() != v.dim()) throw std::invalid_argument("monomial_derivative: dimension mismatch");
  if (p < 1) throw std::invalid_argument("monomial_derivative: exponent must be positive");
  if (order != 1 && order != 2) throw std::invalid_argument("monomial_derivative: order must be 1 or 2");
  const ComplexMatrix x = h0 + cplx(t, 0.0) * v;
  const int d = h0.dim();
  std::vector<ComplexMatrix> xp(static_cast<size_t>(p) + 1);
  xp[0] = ComplexMatrix::identity(d);
  for (int i = 1; i <= p; ++i) xp[static_cast<size_t>(i)] = xp[static_cast<size_t>(i - 1)] * x;

  ComplexMatrix acc(d);
  if (order == 1) {
    for (int p0 = 0; p0 <= p - 1; ++p0)
      acc = acc + xp[static_cast<size_t>(p0)] * v * xp[static_cast<size_t>(p - 1 - p0)];
    return acc;
  }
  if (p < 2) return acc;  // zero by convention
  for (int p0 = 0; p0 <= p - 2; ++p0)
    for (int p1 = 0; p1 <= p - 2 - p0; ++p1)
      acc = acc + xp[static_cast<size_t>(p0)] * v * xp[static_cast<size_t>(p1)] * v *
                      xp[static_cast<size_t>(p - 2 - p0 - p1)];
  return 2.0 * acc;
}

/// Gateaux derivative of f along a linear path, split into the per-coordinate
/// blocks of the derivative formula. For order 1 the blocks are D^j with
/// value = sum_j D^j; for order 2 they are D^{i,j} (i <= j) with
/// value = 2 sum_{i<j} D^{i,j} + sum_j D^{j,j}.
struct DerivativeReport {
  int order = 1;
  double t = 0.0;
  ComplexMatrix value;
  std::map<std::pair<int, int>, ComplexMatrix> per_term;  // order 1 keys (j,j)

  ComplexMatrix reassembled() const {
    ComplexMatrix acc(value.dim());
    for (const auto& [key, m] : per_term)
      acc = acc + (key.first == key.second ? m : 2.0 * m);
    return acc;
  }
};

namespace detail {

/// Prefix products T_{k_1..k_{j-1}} and suffix products T_{k_{j+1}..k_n}
/// assembled from per-coordinate power tables.
inline ComplexMatrix range_product(const std::vector<std::vector<ComplexMatrix>>& pw,
                                   const AnalyticFunction::Index& k, int from, int to, int d) {
  ComplexMatrix r = ComplexMatrix::identity(d);
  for (int j = from; j < to; ++j)
    r = r * pw[static_cast<size_t>(j)][static_cast<size_t>(k[static_cast<size_t>(j)])];
  return r;
}

}  // namespace detail

/// First derivative d/ds|_{s=t} f(X~(s)) via the termwise split. No
/// commutativity is required; the blocks are taken in the series order.
inline DerivativeReport first_derivative(const AnalyticFunction& f, const PathSpec& path,
                                         double t) {
  if (f.arity() != path.n()) throw std::invalid_argument("first_derivative: arity mismatch");
  const int n = path.n();
  const int d = path.dim();
  const OperatorTuple xt = path.at(t);

  std::vector<int> degs(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) degs[static_cast<size_t>(j)] = f.degree_in(j);
  const auto pw = detail::power_tables(xt.mats(), degs);

  DerivativeReport rep;
  rep.order = 1;
  rep.t = t;
  rep.value = ComplexMatrix(d);
  for (int j = 0; j < n; ++j) {
    ComplexMatrix dj(d);
    for (const auto& [k, c] : f.coeffs()) {
      const int kj = k[static_cast<size_t>(j)];
      if (kj == 0) continue;
      const ComplexMatrix pre = detail::range_product(pw, k, 0, j, d);
      const ComplexMatrix mid = monomial_derivative(path.a[j], path.v[static_cast<size_t>(j)], kj, t, 1);
      const ComplexMatrix post = detail::range_product(pw, k, j + 1, n, d);
      dj = dj + c * (pre * mid * post);
    }
    rep.per_term[{j, j}] = dj;
    rep.value = rep.value + dj;
  }
  return rep;
}

/// Second derivative d^2/ds^2|_{s=t} f(X~(s)) with the mixed and diagonal
/// blocks reported separately.
inline DerivativeReport second_derivative(const AnalyticFunction& f, const PathSpec& path,
                                          double t) {
  if (f.arity() != path.n()) throw std::invalid_argument("second_derivative: arity mismatch");
  const int n = path.n();
  const int d = path.dim();
  const OperatorTuple xt = path.at(t);

  std::vector<int> degs(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) degs[static_cast<size_t>(j)] = f.degree_in(j);
  const auto pw = detail::power_tables(xt.mats(), degs);

  DerivativeReport rep;
  rep.order = 2;
  rep.t = t;
  rep.value = ComplexMatrix(d);

  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      ComplexMatrix block(d);
      for (const auto& [k, c] : f.coeffs()) {
        const int ki = k[static_cast<size_t>(i)];
        const int kj = k[static_cast<size_t>(j)];
        if (i == j) {
          if (kj < 2) continue;
          const ComplexMatrix pre = detail::range_product(pw, k, 0, j, d);
          const ComplexMatrix mid =
              monomial_derivative(path.a[j], path.v[static_cast<size_t>(j)], kj, t, 2);
          const ComplexMatrix post = detail::range_product(pw, k, j + 1, n, d);
          block = block + c * (pre * mid * post);
        } else {
          if (ki == 0 || kj == 0) continue;
          const ComplexMatrix pre = detail::range_product(pw, k, 0, i, d);
          const ComplexMatrix di =
              monomial_derivative(path.a[i], path.v[static_cast<size_t>(i)], ki, t, 1);
          const ComplexMatrix mid = detail::range_product(pw, k, i + 1, j, d);
          const ComplexMatrix dj =
              monomial_derivative(path.a[j], path.v[static_cast<size_t>(j)], kj, t, 1);
          const ComplexMatrix post = detail::range_product(pw, k, j + 1, n, d);
          block = block + c * (pre * di * mid * dj * post);
        }
      }
      rep.per_term[{i, j}] = block;
      rep.value = rep.value + (i == j ? block : 2.0 * block);
    }
  }
  return rep;
}

struct TraceIdentityResult {
  cplx lhs = 0.0;
  cplx rhs = 0.0;
  double residual = 0.0;
  int nodes_used = 0;
  bool nodes_sufficient = true;
};

/// Fundamental-theorem-of-calculus identity:
///   trace(f(B~) - f(A~)) = integral_0^1 trace(d/ds|_{s=t} f(X~(s))) dt,
/// with the right side evaluated by Gauss-Legendre. Exact when the node count
/// covers the polynomial degree of the integrand; an insufficient count is
/// flagged, not rejected.
inline TraceIdentityResult ftc_trace(const AnalyticFunction& f, const PathSpec& path,
                                     const QuadratureSpec& quad) {
  TraceIdentityResult r;
  r.lhs = trace(eval_ordered(f, path.b.mats())) - trace(eval_ordered(f, path.a.mats()));
  const int deg = f.total_degree();
  const int m = quad.resolve(deg);
  r.nodes_used = m;
  r.nodes_sufficient = 2 * m - 1 >= (deg > 0 ? deg - 1 : 0);
  const QuadratureRule rule = gauss_legendre_01(m);
  cplx acc = 0.0;
  for (int q = 0; q < m; ++q)
    acc += rule.weights[static_cast<size_t>(q)] *
           trace(first_derivative(f, path, rule.nodes[static_cast<size_t>(q)]).value);
  r.rhs = acc;
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

/// Trace of the first-order Taylor remainder as a weighted integral of the
/// second derivative:
///   trace(f(B~) - f(A~) - d/ds|_0 f(X~(s)))
///     = integral_0^1 (1-t) trace(d^2/ds^2|_{s=t} f(X~(s))) dt.
inline TraceIdentityResult taylor_remainder_trace(const AnalyticFunction& f, const PathSpec& path,
                                                  const QuadratureSpec& quad) {
  TraceIdentityResult r;
  r.lhs = trace(eval_ordered(f, path.b.mats())) - trace(eval_ordered(f, path.a.mats())) -
          trace(first_derivative(f, path, 0.0).value);
  const int deg = f.total_degree();
  const int m = quad.resolve(deg);
  r.nodes_used = m;
  r.nodes_sufficient = 2 * m - 1 >= (deg > 0 ? deg - 1 : 0);
  const QuadratureRule rule = gauss_legendre_01(m);
  cplx acc = 0.0;
  for (int q = 0; q < m; ++q) {
    const double t = rule.nodes[static_cast<size_t>(q)];
    acc += rule.weights[static_cast<size_t>(q)] * (1.0 - t) *
           trace(second_derivative(f, path, t).value);
  }
  r.rhs = acc;
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

}  // namespace opshift
