#pragma once

#include <stdexcept>
#include <vector>

#include "opshift/complex_matrix.hpp"
#include "opshift/hermitian_eig.hpp"
#include "opshift/norms.hpp"
#include "opshift/operator_tuple.hpp"
#include "opshift/rng.hpp"

namespace opshift {

/// Joint spectral decomposition of a commuting normal tuple: orthogonal
/// projections P_k onto the joint eigenspaces together with the joint
/// eigenvalue tuples. Realises the product spectral measure in finite
/// dimension.
struct JointSpectrum {
  std::vector<std::vector<cplx>> points;   // points[k][i] = i-th coordinate of eigenvalue k
  std::vector<ComplexMatrix> projections;  // orthogonal, summing to I
  double residual = 0.0;                   // max over i,k of ||A_i P_k - lambda P_k||

  int count() const { return static_cast<int>(points.size()); }
};

/// Simultaneous diagonalisation by the generic-combination trick: diagonalise
/// a random real combination of the Hermitian and skew parts of all tuple
/// members and reuse its eigenbasis. A combination whose eigenbasis fails to
/// diagonalise every member (a degeneracy collision) is detected through the
/// off-diagonal mass and retried with fresh coefficients, up to 8 times.
/// Joint eigenvalues within cluster_tol (relative) collapse into one
/// projection.
inline JointSpectrum joint_diagonalize(const OperatorTuple& x, double cluster_tol = 1e-8,
                                       uint64_t seed = 0x1234abcdULL) {
  if (!x.flags().commuting)
    throw std::invalid_argument("joint_diagonalize: tuple is not certified commuting");
  if (!x.flags().normal)
    throw std::invalid_argument("joint_diagonalize: tuple is not certified normal");

  const int n = x.n();
  const int d = x.dim();

  double scale = 1.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, x[i].frobenius_norm());

  SplitMix64 rng(seed);
  for (int attempt = 0; attempt < 8; ++attempt) {
    ComplexMatrix m(d);
    for (int i = 0; i < n; ++i) {
      const double ai = rng.next_in(-1.0, 1.0);
      const double bi = rng.next_in(-1.0, 1.0);
      m = m + cplx(ai, 0.0) * hermitian_part(x[i]) + cplx(bi, 0.0) * antihermitian_part(x[i]);
    }
    const HermitianEig eig = hermitian_eigensystem(m);
    const ComplexMatrix& q = eig.vectors;
    const ComplexMatrix qa = q.adjoint();

    // Transform every member and insist on negligible off-diagonal mass.
    std::vector<ComplexMatrix> diags;
    diags.reserve(static_cast<size_t>(n));
    double off = 0.0;
    for (int i = 0; i < n; ++i) {
      diags.push_back(qa * x[i] * q);
      off = std::max(off, detail::off_diagonal_norm(diags.back()));
    }
    if (off > 1e-9 * scale) continue;  // collision; retry with a fresh combination

    // Cluster joint eigenvalue tuples (union-find over near-equal tuples).
    std::vector<std::vector<cplx>> lam(static_cast<size_t>(d), std::vector<cplx>(static_cast<size_t>(n)));
    for (int k = 0; k < d; ++k)
      for (int i = 0; i < n; ++i) lam[static_cast<size_t>(k)][static_cast<size_t>(i)] =
          diags[static_cast<size_t>(i)](k, k);

    const double ctol = cluster_tol * scale;
    std::vector<int> parent(static_cast<size_t>(d));
    for (int k = 0; k < d; ++k) parent[static_cast<size_t>(k)] = k;
    auto find = [&](int k) {
      while (parent[static_cast<size_t>(k)] != k) k = parent[static_cast<size_t>(k)] =
          parent[static_cast<size_t>(parent[static_cast<size_t>(k)])];
      return k;
    };
    for (int k = 0; k < d; ++k) {
      for (int l = k + 1; l < d; ++l) {
        double dist = 0.0;
        for (int i = 0; i < n; ++i)
          dist = std::max(dist, std::abs(lam[static_cast<size_t>(k)][static_cast<size_t>(i)] -
                                         lam[static_cast<size_t>(l)][static_cast<size_t>(i)]));
        if (dist <= ctol) parent[static_cast<size_t>(find(l))] = find(k);
      }
    }

    JointSpectrum js;
    std::vector<int> root_of(static_cast<size_t>(d), -1);
    for (int k = 0; k < d; ++k) {
      const int r = find(k);
      if (root_of[static_cast<size_t>(r)] < 0) {
        root_of[static_cast<size_t>(r)] = js.count();
        js.points.emplace_back(static_cast<size_t>(n), cplx{});
        js.projections.emplace_back(d);
      }
      const int c = root_of[static_cast<size_t>(r)];
      // Accumulate the rank-one projector of column k.
      ComplexMatrix& p = js.projections[static_cast<size_t>(c)];
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) p(i, j) += q(i, k) * std::conj(q(j, k));
      for (int i = 0; i < n; ++i)
        js.points[static_cast<size_t>(c)][static_cast<size_t>(i)] +=
            lam[static_cast<size_t>(k)][static_cast<size_t>(i)];
    }
    // Cluster representative: mean of merged diagonal entries.
    for (int c = 0; c < js.count(); ++c) {
      const double sz = trace(js.projections[static_cast<size_t>(c)]).real();
      for (auto& v : js.points[static_cast<size_t>(c)]) v /= sz;
    }

    double res = 0.0;
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < js.count(); ++c)
        res = std::max(res, op_norm(x[i] * js.projections[static_cast<size_t>(c)] -
                                    js.points[static_cast<size_t>(c)][static_cast<size_t>(i)] *
                                        js.projections[static_cast<size_t>(c)]));
    js.residual = res;
    if (res <= std::max(1e-10, 4.0 * cluster_tol) * scale) return js;
  }
  throw std::runtime_error("joint_diagonalize: failed to reach target residual after 8 retries");
}

}  // namespace opshift
