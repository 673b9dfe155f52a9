#pragma once

// Shared generators and small oracles for the test suites. Everything here is
// deliberately independent of the library's own decompositions where it backs
// an oracle.

#include <complex>
#include <vector>

#include "opshift/analytic_function.hpp"
#include "opshift/complex_matrix.hpp"
#include "opshift/rng.hpp"

namespace testsup {

using opshift::cplx;
using opshift::ComplexMatrix;

inline ComplexMatrix random_matrix(int d, uint64_t seed, double scale = 1.0) {
  opshift::SplitMix64 rng(seed);
  ComplexMatrix m(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      m(i, j) = scale * cplx(rng.next_gaussian(), rng.next_gaussian());
  return m;
}

inline ComplexMatrix random_hermitian(int d, uint64_t seed, double scale = 1.0) {
  const ComplexMatrix g = random_matrix(d, seed, scale);
  return opshift::hermitian_part(g);
}

/// QR of a Gaussian matrix by modified Gram-Schmidt, with the R diagonal
/// phase absorbed so the distribution is Haar-like.
inline ComplexMatrix random_unitary(int d, uint64_t seed) {
  const ComplexMatrix g = random_matrix(d, seed);
  std::vector<std::vector<cplx>> cols(static_cast<size_t>(d),
                                      std::vector<cplx>(static_cast<size_t>(d)));
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) cols[static_cast<size_t>(j)][static_cast<size_t>(i)] = g(i, j);
  for (int j = 0; j < d; ++j) {
    auto& cj = cols[static_cast<size_t>(j)];
    for (int k = 0; k < j; ++k) {
      const auto& ck = cols[static_cast<size_t>(k)];
      cplx proj = 0.0;
      for (int i = 0; i < d; ++i) proj += std::conj(ck[static_cast<size_t>(i)]) * cj[static_cast<size_t>(i)];
      for (int i = 0; i < d; ++i) cj[static_cast<size_t>(i)] -= proj * ck[static_cast<size_t>(i)];
    }
    double nrm = 0.0;
    for (const cplx& v : cj) nrm += std::norm(v);
    nrm = std::sqrt(nrm);
    for (cplx& v : cj) v /= nrm;
  }
  ComplexMatrix q(d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) q(i, j) = cols[static_cast<size_t>(j)][static_cast<size_t>(i)];
  return q;
}

/// Random polynomial of the given arity with total degree <= max_degree.
inline opshift::AnalyticFunction random_polynomial(int arity, int max_degree, uint64_t seed,
                                                   int terms = 8,
                                                   opshift::DomainKind domain =
                                                       opshift::DomainKind::polydisc) {
  opshift::SplitMix64 rng(seed);
  opshift::AnalyticFunction f(arity, domain);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> k(static_cast<size_t>(arity));
    int budget = max_degree;
    for (int j = 0; j < arity; ++j) {
      const int e = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(budget + 1));
      k[static_cast<size_t>(j)] = e;
      budget -= e;
    }
    f.add_term(std::move(k), cplx(rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)));
  }
  return f;
}

/// Real-coefficient variant for self-adjoint instances.
inline opshift::AnalyticFunction random_real_polynomial(int arity, int max_degree, uint64_t seed,
                                                        int terms = 8) {
  opshift::SplitMix64 rng(seed);
  opshift::AnalyticFunction f(arity, opshift::DomainKind::real_cube);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> k(static_cast<size_t>(arity));
    int budget = max_degree;
    for (int j = 0; j < arity; ++j) {
      const int e = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(budget + 1));
      k[static_cast<size_t>(j)] = e;
      budget -= e;
    }
    f.add_term(std::move(k), cplx(rng.next_in(-1.0, 1.0), 0.0));
  }
  return f;
}

}  // namespace testsup
