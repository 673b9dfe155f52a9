#pragma once

#include <numbers>
#include <vector>

#include "opshift/config.hpp"
#include "opshift/hermitian_eig.hpp"
#include "opshift/path.hpp"
#include "opshift/rng.hpp"

namespace opshift {

namespace detail {

inline ComplexMatrix haar_like_unitary(int d, SplitMix64& rng) {
  ComplexMatrix g(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = cplx(rng.next_gaussian(), rng.next_gaussian());
  // Modified Gram-Schmidt; the normalisation absorbs the R phases.
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < j; ++k) {
      cplx proj = 0.0;
      for (int i = 0; i < d; ++i) proj += std::conj(g(i, k)) * g(i, j);
      for (int i = 0; i < d; ++i) g(i, j) -= proj * g(i, k);
    }
    double nrm = 0.0;
    for (int i = 0; i < d; ++i) nrm += std::norm(g(i, j));
    nrm = std::sqrt(nrm);
    for (int i = 0; i < d; ++i) g(i, j) /= nrm;
  }
  return g;
}

inline cplx disc_point(SplitMix64& rng) {
  const double r = std::sqrt(rng.next_double());
  const double th = rng.next_in(0.0, 2.0 * std::numbers::pi);
  return cplx(r * std::cos(th), r * std::sin(th));
}

/// Random contraction via singular value clamping: G = W S T* with S capped
/// at one.
inline ComplexMatrix random_contraction_svd(int d, SplitMix64& rng) {
  ComplexMatrix g(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = cplx(rng.next_gaussian(), rng.next_gaussian());
  const HermitianEig eig = hermitian_eigensystem(g.adjoint() * g);
  // Columns of T are eig.vectors; W = G T S^{-1}; rebuild with clamped S.
  const int dd = d;
  ComplexMatrix gt = g * eig.vectors;
  ComplexMatrix out(dd);
  for (int k = 0; k < dd; ++k) {
    const double s = std::sqrt(std::max(eig.values[static_cast<size_t>(k)], 1e-300));
    const double clamped = std::min(s, 1.0);
    const double ratio = clamped / s;
    // out += ratio * (G T e_k) (T e_k)^*
    for (int i = 0; i < dd; ++i)
      for (int j = 0; j < dd; ++j)
        out(i, j) += ratio * gt(i, k) * std::conj(eig.vectors(j, k));
  }
  return out;
}

}  // namespace detail

/// Reproducible problem instance for one trial.
struct Instance {
  PathSpec path;
  InstanceMode mode;
  std::vector<AnalyticFunction> functions;
};

/// Per-trial random functions when the config does not pin them: real
/// coefficients on self-adjoint instances so the real-cube statements apply.
inline std::vector<AnalyticFunction> instance_functions(const ExperimentConfig& cfg,
                                                        uint64_t fseed) {
  if (cfg.mode == InstanceMode::counterexample)
    return {AnalyticFunction::monomial(2, {3, 1}, 1.0)};
  if (!cfg.functions.empty()) return cfg.functions;

  SplitMix64 rng(fseed);
  const bool real = cfg.mode == InstanceMode::selfadjoint_shared_basis;
  std::vector<AnalyticFunction> out;
  for (int i = 0; i < cfg.random_function_count; ++i) {
    AnalyticFunction f(cfg.n, real ? DomainKind::real_cube : DomainKind::polydisc);
    for (int t = 0; t < 8; ++t) {
      std::vector<int> k(static_cast<size_t>(cfg.n));
      int budget = cfg.random_function_degree;
      for (int j = 0; j < cfg.n; ++j) {
        const int e = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(budget + 1));
        k[static_cast<size_t>(j)] = e;
        budget -= e;
      }
      f.add_term(std::move(k),
                 cplx(rng.next_in(-1.0, 1.0), real ? 0.0 : rng.next_in(-1.0, 1.0)));
    }
    if (f.is_zero()) f.add_term(std::vector<int>(static_cast<size_t>(cfg.n), 0), 1.0);
    out.push_back(std::move(f));
  }
  return out;
}

/// Draws the trial instance. Shared-basis modes conjugate random diagonals by
/// one Haar-like unitary, so every path point is a commuting normal (resp.
/// self-adjoint) contraction by construction. In the self-adjoint mode with
/// n = 2, the two diagonals are drawn jointly inside the closed unit disc so
/// that A_1 + iA_2 is a contraction and the normal-pair statements apply.
inline Instance generate_instance(const ExperimentConfig& cfg, int trial) {
  const uint64_t iseed = derive_seed(cfg.seed, static_cast<uint64_t>(trial) * 2);
  const uint64_t fseed = derive_seed(cfg.seed, static_cast<uint64_t>(trial) * 2 + 1);
  SplitMix64 rng(iseed);

  Instance inst;
  inst.mode = cfg.mode;

  switch (cfg.mode) {
    case InstanceMode::normal_shared_basis:
    case InstanceMode::selfadjoint_shared_basis: {
      const bool sa = cfg.mode == InstanceMode::selfadjoint_shared_basis;
      const ComplexMatrix q = detail::haar_like_unitary(cfg.dim, rng);
      auto draw_diag = [&](std::vector<std::vector<cplx>>& diags) {
        diags.assign(static_cast<size_t>(cfg.n),
                     std::vector<cplx>(static_cast<size_t>(cfg.dim)));
        for (int k = 0; k < cfg.dim; ++k) {
          if (sa && cfg.n == 2) {
            const cplx z = detail::disc_point(rng);
            diags[0][static_cast<size_t>(k)] = cplx(z.real(), 0.0);
            diags[1][static_cast<size_t>(k)] = cplx(z.imag(), 0.0);
          } else {
            for (int i = 0; i < cfg.n; ++i)
              diags[static_cast<size_t>(i)][static_cast<size_t>(k)] =
                  sa ? cplx(rng.next_in(-1.0, 1.0), 0.0) : detail::disc_point(rng);
          }
        }
      };
      std::vector<std::vector<cplx>> da, db;
      draw_diag(da);
      draw_diag(db);
      std::vector<ComplexMatrix> a, b;
      for (int i = 0; i < cfg.n; ++i) {
        a.push_back(q * ComplexMatrix::diagonal(da[static_cast<size_t>(i)]) * q.adjoint());
        b.push_back(q * ComplexMatrix::diagonal(db[static_cast<size_t>(i)]) * q.adjoint());
      }
      inst.path = PathSpec::make(OperatorTuple::certify(std::move(a)),
                                 OperatorTuple::certify(std::move(b)));
      break;
    }
    case InstanceMode::single_contraction: {
      const ComplexMatrix a = detail::random_contraction_svd(cfg.dim, rng);
      const ComplexMatrix b = detail::random_contraction_svd(cfg.dim, rng);
      inst.path = PathSpec::make(OperatorTuple::certify({a}), OperatorTuple::certify({b}));
      break;
    }
    case InstanceMode::counterexample: {
      const ComplexMatrix a = ComplexMatrix::diagonal({1.0, 0.0});
      const ComplexMatrix v = ComplexMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}});
      inst.path = PathSpec::make(OperatorTuple::certify({a, a}),
                                 OperatorTuple::certify({a + v, a}));
      break;
    }
    case InstanceMode::custom: {
      inst.path = PathSpec::make(OperatorTuple::certify(cfg.custom_a),
                                 OperatorTuple::certify(cfg.custom_b));
      break;
    }
  }
  inst.functions = instance_functions(cfg, fseed);
  return inst;
}

}  // namespace opshift
