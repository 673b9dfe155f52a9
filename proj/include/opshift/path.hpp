#pragma once

#include <stdexcept>
#include <vector>

#include "opshift/complex_matrix.hpp"
#include "opshift/norms.hpp"
#include "opshift/operator_tuple.hpp"
#include "opshift/rng.hpp"

namespace opshift {

/// Linear path X_j(t) = A_j + t V_j between two tuples, with V_j = B_j - A_j
/// held exactly. path_commuting certifies that every point of the path is a
/// commuting tuple, which for a linear path reduces to commuting endpoints
/// plus [V_i, V_j] = 0.
struct PathSpec {
  OperatorTuple a;
  OperatorTuple b;
  std::vector<ComplexMatrix> v;
  bool path_commuting = false;
  double path_residual = 0.0;
  bool endpoints_admissible = false;  // both endpoints commuting contractions

  int n() const { return a.n(); }
  int dim() const { return a.dim(); }

  static PathSpec make(OperatorTuple a_in, OperatorTuple b_in) {
    if (a_in.n() != b_in.n() || a_in.dim() != b_in.dim())
      throw std::invalid_argument("PathSpec: endpoint shape mismatch");
    PathSpec p;
    p.a = std::move(a_in);
    p.b = std::move(b_in);
    p.v.reserve(static_cast<size_t>(p.a.n()));
    for (int j = 0; j < p.a.n(); ++j) p.v.push_back(p.b[j] - p.a[j]);

    double res = std::max(p.a.flags().commuting_residual, p.b.flags().commuting_residual);
    double scale = 1.0;
    for (int i = 0; i < p.n(); ++i) {
      for (int j = i + 1; j < p.n(); ++j) {
        res = std::max(res, op_norm(commutator(p.v[static_cast<size_t>(i)],
                                               p.v[static_cast<size_t>(j)])));
        scale = std::max(scale, op_norm(p.v[static_cast<size_t>(i)]) *
                                    op_norm(p.v[static_cast<size_t>(j)]));
      }
    }
    p.path_residual = res;
    p.path_commuting = p.a.flags().commuting && p.b.flags().commuting &&
                       res <= p.a.certification_tol() * scale;
    p.endpoints_admissible = p.a.flags().commuting && p.b.flags().commuting &&
                             p.a.flags().contractive && p.b.flags().contractive;
    return p;
  }

  /// X~(t), certified at the path's tolerance.
  OperatorTuple at(double t) const {
    std::vector<ComplexMatrix> mats;
    mats.reserve(v.size());
    for (int j = 0; j < n(); ++j) mats.push_back(a[j] + cplx(t, 0.0) * v[static_cast<size_t>(j)]);
    return OperatorTuple::certify(std::move(mats), a.certification_tol());
  }
};

struct PathCommutativityReport {
  bool equiv_i = false;      // every grid point is a commuting contractive tuple
  bool equiv_ii = false;     // endpoints in C_n and [V_i, V_j] = 0
  double max_residual = 0.0;
  double hij_identity_residual = 0.0;  // four-term expansion vs direct h_ij(t)
};

/// Checks the two equivalent characterisations of a commuting linear path,
/// and verifies the quadratic expansion
///   h_ij(t) = (1-t)^2 [A_i,A_j] + t^2 [B_i,B_j] + t(1-t)([A_i,B_j]+[B_i,A_j])
/// pointwise at random t.
inline PathCommutativityReport path_commutativity(const OperatorTuple& a, const OperatorTuple& b,
                                                  int t_grid = 5, double tol = 1e-10,
                                                  uint64_t seed = 0x5eedULL) {
  if (a.n() != b.n() || a.dim() != b.dim())
    throw std::invalid_argument("path_commutativity: shape mismatch");
  const int n = a.n();
  PathCommutativityReport rep;
  if (t_grid < 3) throw std::invalid_argument("path_commutativity: need at least 3 grid points");

  std::vector<ComplexMatrix> v;
  v.reserve(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) v.push_back(b[j] - a[j]);

  double scale = 1.0;
  for (int j = 0; j < n; ++j)
    scale = std::max(scale, std::max(op_norm(a[j]), op_norm(b[j])));
  const double thresh = tol * scale * scale;

  // (i): h_ij = 0 on the grid and each grid tuple is contractive. h_ij is
  // quadratic in t, so vanishing on >= 3 points forces the whole path.
  double grid_res = 0.0;
  bool contractive_path = true;
  for (int g = 0; g < t_grid; ++g) {
    const double t = static_cast<double>(g) / static_cast<double>(t_grid - 1);
    std::vector<ComplexMatrix> xt;
    xt.reserve(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) xt.push_back(a[j] + cplx(t, 0.0) * v[static_cast<size_t>(j)]);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j)
        grid_res = std::max(grid_res, op_norm(commutator(xt[static_cast<size_t>(i)],
                                                         xt[static_cast<size_t>(j)])));
      if (op_norm(xt[static_cast<size_t>(i)]) > 1.0 + tol) contractive_path = false;
    }
    if (n == 1 && op_norm(xt[0]) > 1.0 + tol) contractive_path = false;
  }
  rep.max_residual = grid_res;
  rep.equiv_i = grid_res <= thresh && contractive_path;

  // (ii): endpoints in C_n plus commuting perturbations.
  double vres = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      vres = std::max(vres, op_norm(commutator(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)])));
  rep.equiv_ii = a.flags().commuting && b.flags().commuting && a.flags().contractive &&
                 b.flags().contractive && vres <= thresh;

  // Pointwise verification of the four-term expansion at random t.
  SplitMix64 rng(seed);
  for (int trial = 0; trial < 4; ++trial) {
    const double t = rng.next_double();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const ComplexMatrix xi = a[i] + cplx(t, 0.0) * v[static_cast<size_t>(i)];
        const ComplexMatrix xj = a[j] + cplx(t, 0.0) * v[static_cast<size_t>(j)];
        const ComplexMatrix direct = commutator(xi, xj);
        const ComplexMatrix expanded =
            cplx((1.0 - t) * (1.0 - t), 0.0) * commutator(a[i], a[j]) +
            cplx(t * t, 0.0) * commutator(b[i], b[j]) +
            cplx(t * (1.0 - t), 0.0) * (commutator(a[i], b[j]) + commutator(b[i], a[j]));
        rep.hij_identity_residual =
            std::max(rep.hij_identity_residual, op_norm(direct - expanded));
      }
    }
  }
  return rep;
}

}  // namespace opshift
