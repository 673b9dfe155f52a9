#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "opshift/analytic_function.hpp"
#include "opshift/complex_matrix.hpp"
#include "opshift/operator_tuple.hpp"

namespace opshift {

namespace detail {

/// Power tables X_j^0 .. X_j^{deg_j} for each coordinate.
inline std::vector<std::vector<ComplexMatrix>> power_tables(const std::vector<ComplexMatrix>& mats,
                                                            std::span<const int> degrees) {
  std::vector<std::vector<ComplexMatrix>> pw(mats.size());
  for (size_t j = 0; j < mats.size(); ++j) {
    pw[j].reserve(static_cast<size_t>(degrees[j]) + 1);
    pw[j].push_back(ComplexMatrix::identity(mats[j].dim()));
    for (int e = 1; e <= degrees[j]; ++e) pw[j].push_back(pw[j].back() * mats[j]);
  }
  return pw;
}

}  // namespace detail

/// X_1^{k_1} ... X_n^{k_n} in ascending coordinate order.
inline ComplexMatrix monomial_compress(const OperatorTuple& x, std::span<const int> k) {
  if (static_cast<int>(k.size()) != x.n())
    throw std::invalid_argument("monomial_compress: multi-index arity mismatch");
  ComplexMatrix r = ComplexMatrix::identity(x.dim());
  for (int j = 0; j < x.n(); ++j) {
    if (k[static_cast<size_t>(j)] < 0)
      throw std::invalid_argument("monomial_compress: negative exponent");
    r = r * x[j].pow(k[static_cast<size_t>(j)]);
  }
  return r;
}

inline ComplexMatrix monomial_compress(const OperatorTuple& x, const std::vector<int>& k) {
  return monomial_compress(x, std::span<const int>(k));
}

/// Suffix form X_m^{k_m} ... X_n^{k_n} (0-based m, exponents k[m..n-1]).
inline ComplexMatrix monomial_compress_suffix(const OperatorTuple& x, std::span<const int> k,
                                              int m) {
  if (static_cast<int>(k.size()) != x.n())
    throw std::invalid_argument("monomial_compress_suffix: multi-index arity mismatch");
  if (m < 0 || m > x.n())
    throw std::invalid_argument("monomial_compress_suffix: bad start coordinate");
  ComplexMatrix r = ComplexMatrix::identity(x.dim());
  for (int j = m; j < x.n(); ++j) r = r * x[j].pow(k[static_cast<size_t>(j)]);
  return r;
}

/// Power-series evaluation f(X_1, ..., X_n) with the fixed coordinate order of
/// the series: X_1 powers leftmost. No commutativity is assumed; callers that
/// need an order-independent value must certify the tuple first (eval_function).
inline ComplexMatrix eval_ordered(const AnalyticFunction& f, const std::vector<ComplexMatrix>& mats) {
  if (static_cast<int>(mats.size()) != f.arity())
    throw std::invalid_argument("eval_ordered: arity mismatch");
  const int n = f.arity();
  const int d = mats.front().dim();
  std::vector<int> degs(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) degs[static_cast<size_t>(j)] = f.degree_in(j);
  const auto pw = detail::power_tables(mats, degs);

  // Nested evaluation over the coordinates: ascending coordinate outermost,
  // the last coordinate innermost. Terms arrive lexicographically sorted from
  // the map, so each level groups contiguous runs of equal exponent.
  struct Rec {
    const std::vector<std::vector<ComplexMatrix>>& pw;
    int n, d;

    ComplexMatrix run(std::map<AnalyticFunction::Index, cplx>::const_iterator begin,
                      std::map<AnalyticFunction::Index, cplx>::const_iterator end,
                      int level) const {
      ComplexMatrix acc(d);
      if (level == n) {
        // All exponents fixed; at most one coefficient remains.
        for (auto it = begin; it != end; ++it)
          for (int i = 0; i < d; ++i) acc(i, i) += it->second;
        return acc;
      }
      auto it = begin;
      while (it != end) {
        const int e = it->first[static_cast<size_t>(level)];
        auto stop = it;
        while (stop != end && stop->first[static_cast<size_t>(level)] == e) ++stop;
        const ComplexMatrix inner = run(it, stop, level + 1);
        acc = acc + pw[static_cast<size_t>(level)][static_cast<size_t>(e)] * inner;
        it = stop;
      }
      return acc;
    }
  };

  Rec rec{pw, n, d};
  return rec.run(f.coeffs().begin(), f.coeffs().end(), 0);
}

/// Functional calculus f(X) through the coefficient series on a certified
/// commuting tuple. Rejects uncertified commutativity, where the value would
/// depend on the chosen coordinate order.
inline ComplexMatrix eval_function(const AnalyticFunction& f, const OperatorTuple& x) {
  if (f.arity() != x.n()) throw std::invalid_argument("eval_function: arity mismatch");
  if (x.n() > 1 && !x.flags().commuting)
    throw std::invalid_argument("eval_function: tuple is not certified commuting");
  return eval_ordered(f, x.mats());
}

}  // namespace opshift
