#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "opshift/analytic_function.hpp"

namespace opshift {

/// Divided difference g[lambda_0, ..., lambda_r] of a univariate polynomial,
/// given by its coefficient vector. Repeated points take the derivative
/// branch of the recursive definition, with the derivative computed
/// symbolically from the coefficients. The value is a symmetric function of
/// the points, so equal points are grouped before building the table.
inline cplx divided_difference(std::span<const cplx> poly, std::span<const cplx> points) {
  if (points.empty()) throw std::invalid_argument("divided_difference: no points");
  const size_t r = points.size() - 1;

  // Group exactly equal points so confluent blocks are contiguous, keeping
  // first-appearance order of the distinct values.
  std::vector<cplx> pts;
  pts.reserve(points.size());
  for (const cplx& p : points) {
    if (std::find(pts.begin(), pts.end(), p) == pts.end()) {
      for (const cplx& q : points)
        if (q == p) pts.push_back(q);
    }
  }

  // Derivatives g, g', g'', ... up to order r, precomputed once.
  std::vector<std::vector<cplx>> derivs;
  derivs.emplace_back(poly.begin(), poly.end());
  for (size_t k = 1; k <= r; ++k) derivs.push_back(differentiate_poly(derivs.back()));
  std::vector<double> factorial(r + 1, 1.0);
  for (size_t k = 1; k <= r; ++k) factorial[k] = factorial[k - 1] * static_cast<double>(k);

  // Confluent Newton table over the grouped sequence.
  const size_t m = pts.size();
  std::vector<std::vector<cplx>> table(m, std::vector<cplx>(m));
  for (size_t i = 0; i < m; ++i) table[i][0] = eval_poly(derivs[0], pts[i]);
  for (size_t k = 1; k < m; ++k) {
    for (size_t i = 0; i + k < m; ++i) {
      if (pts[i + k] == pts[i]) {
        table[i][k] = eval_poly(derivs[k], pts[i]) / factorial[k];
      } else {
        table[i][k] = (table[i + 1][k - 1] - table[i][k - 1]) / (pts[i + k] - pts[i]);
      }
    }
  }
  return table[0][m - 1];
}

inline cplx divided_difference(const AnalyticFunction& g, std::span<const cplx> points) {
  if (g.arity() != 1) throw std::invalid_argument("divided_difference: expects a univariate function");
  std::vector<cplx> coeffs(static_cast<size_t>(g.degree_in(0)) + 1, cplx{});
  for (const auto& [k, c] : g.coeffs()) coeffs[static_cast<size_t>(k[0])] = c;
  return divided_difference(coeffs, points);
}

/// Divided difference of phi in coordinate j (0-based) at the given points,
/// with the remaining coordinates pinned: phi(..., [l_0,...,l_r], ...).
/// `fixed` supplies all n coordinates; slot j is ignored.
inline cplx partial_divided_difference(const AnalyticFunction& phi, int j,
                                       std::span<const cplx> points,
                                       std::span<const cplx> fixed) {
  const std::vector<cplx> slice = phi.slice_coeffs(j, fixed);
  return divided_difference(slice, points);
}

/// One multivariate difference step in a given coordinate:
/// (phi(z + h e_j) - phi(z)) / h, carried out on coefficients, so the result
/// is again a polynomial and the division by h is exact.
inline AnalyticFunction difference_step(const AnalyticFunction& phi, int j, cplx h) {
  if (h == cplx{}) throw std::invalid_argument("difference_step: zero step");
  const int n = phi.arity();
  if (j < 0 || j >= n) throw std::invalid_argument("difference_step: coordinate out of range");
  AnalyticFunction out(n, phi.domain_kind(), phi.radius());
  for (const auto& [k, c] : phi.coeffs()) {
    const int e = k[static_cast<size_t>(j)];
    // ((z_j + h)^e - z_j^e) / h = sum_{m<e} C(e,m) h^{e-1-m} z_j^m.
    cplx hpow = 1.0;
    cplx coef = static_cast<double>(e);  // C(e, e-1), updated down the walk
    for (int m = e - 1; m >= 0; --m) {
      AnalyticFunction::Index k2 = k;
      k2[static_cast<size_t>(j)] = m;
      out.add_term(std::move(k2), c * coef * hpow);
      hpow *= h;
      coef *= static_cast<double>(m) / static_cast<double>(e - m + 1);
    }
  }
  return out;
}

/// Iterated difference operator applied to phi at a point. Steps are pairs
/// (coordinate, h); coordinates may repeat, every h must be nonzero. The
/// value is invariant under permuting the steps.
inline cplx delta_operator(const AnalyticFunction& phi,
                           std::span<const std::pair<int, cplx>> steps,
                           std::span<const cplx> point) {
  AnalyticFunction acc = phi;
  for (const auto& [j, h] : steps) acc = difference_step(acc, j, h);
  return acc.eval(point);
}

/// Direct expansion of the confluent second-order divided difference
/// phi(..., [z_j + h, z_j + h, z_j], ...) as the double sum over exponent
/// splits p0 + p1 + p2 = k_j - 2, with (z_j + h)^{p0 + p2} z_j^{p1}.
inline cplx confluent_pair_expansion(const AnalyticFunction& phi, int j,
                                     std::span<const cplx> z, cplx h) {
  if (j < 0 || j >= phi.arity())
    throw std::invalid_argument("confluent_pair_expansion: coordinate out of range");
  const cplx zj = z[static_cast<size_t>(j)];
  cplx acc = 0.0;
  for (const auto& [k, c] : phi.coeffs()) {
    const int kj = k[static_cast<size_t>(j)];
    if (kj < 2) continue;
    cplx rest = c;
    for (int i = 0; i < phi.arity(); ++i)
      if (i != j) rest *= AnalyticFunction::pow_int(z[static_cast<size_t>(i)], k[static_cast<size_t>(i)]);
    cplx inner = 0.0;
    for (int p0 = 0; p0 <= kj - 2; ++p0)
      for (int p1 = 0; p1 <= kj - 2 - p0; ++p1) {
        const int p2 = kj - 2 - p0 - p1;
        inner += AnalyticFunction::pow_int(zj + h, p0 + p2) * AnalyticFunction::pow_int(zj, p1);
      }
    acc += rest * inner;
  }
  return acc;
}

/// Direct expansion of the mixed two-coordinate difference
/// Delta_{h_i e_i, h_j e_j} phi(z) as the double sum over exponent splits
/// q0 + q1 = k_i - 1 and p0 + p1 = k_j - 1.
inline cplx mixed_difference_expansion(const AnalyticFunction& phi, int i, int j,
                                       std::span<const cplx> z, cplx hi, cplx hj) {
  if (i == j) throw std::invalid_argument("mixed_difference_expansion: coordinates must differ");
  if (i < 0 || i >= phi.arity() || j < 0 || j >= phi.arity())
    throw std::invalid_argument("mixed_difference_expansion: coordinate out of range");
  const cplx zi = z[static_cast<size_t>(i)];
  const cplx zj = z[static_cast<size_t>(j)];
  cplx acc = 0.0;
  for (const auto& [k, c] : phi.coeffs()) {
    const int ki = k[static_cast<size_t>(i)];
    const int kj = k[static_cast<size_t>(j)];
    if (ki < 1 || kj < 1) continue;
    cplx rest = c;
    for (int m = 0; m < phi.arity(); ++m)
      if (m != i && m != j)
        rest *= AnalyticFunction::pow_int(z[static_cast<size_t>(m)], k[static_cast<size_t>(m)]);
    cplx sum_i = 0.0;
    for (int q0 = 0; q0 <= ki - 1; ++q0)
      sum_i += AnalyticFunction::pow_int(zi + hi, q0) * AnalyticFunction::pow_int(zi, ki - 1 - q0);
    cplx sum_j = 0.0;
    for (int p0 = 0; p0 <= kj - 1; ++p0)
      sum_j += AnalyticFunction::pow_int(zj + hj, p0) * AnalyticFunction::pow_int(zj, kj - 1 - p0);
    acc += rest * sum_i * sum_j;
  }
  return acc;
}

}  // namespace opshift
