#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "opshift/analytic_function.hpp"
#include "opshift/complex_matrix.hpp"
#include "opshift/functional_calculus.hpp"
#include "opshift/hermitian_eig.hpp"
#include "opshift/norms.hpp"
#include "opshift/operator_tuple.hpp"

namespace opshift {

struct DilationCertificate {
  int base_dim = 0;
  int dilated_dim = 0;
  int degree = 0;                    // powers / word lengths certified
  double unitarity_residual = 0.0;   // ||U*U - I||
  double compression_residual = 0.0; // max over certified words
  bool valid(double tol = 1e-12) const {
    return unitarity_residual <= tol && compression_residual <= tol;
  }
};

/// N-step unitary power dilation of a single contraction on (N+1) copies of
/// the base space. With defect operators D_X = (I - X*X)^{1/2} and
/// D_{X*} = (I - XX*)^{1/2}, the block map
///   (h_0, ..., h_N) -> (X h_0 + D_{X*} h_N, D_X h_0 - X* h_N, h_1, ..., h_{N-1})
/// is unitary (the 2x2 corner is a Halmos block, the rest a shift) and
/// compresses to X^k on the first block for 1 <= k <= N.
inline std::pair<ComplexMatrix, DilationCertificate> schaffer_dilation(const ComplexMatrix& x,
                                                                       int degree) {
  if (degree < 1) throw std::invalid_argument("schaffer_dilation: degree must be >= 1");
  if (!is_contraction(x, 1e-10))
    throw std::invalid_argument("schaffer_dilation: input is not a contraction");
  const int d = x.dim();
  const int blocks = degree + 1;
  const int dd = blocks * d;

  // Defect eigenvalues at rounding-noise level must clamp to exactly zero in
  // both defects, or their square roots (~1e-7 from ~1e-14 noise) land
  // inconsistently and wreck the intertwining that unitarity rests on.
  const double defect_clamp = 1e-11;
  const ComplexMatrix id = ComplexMatrix::identity(d);
  const ComplexMatrix dx = sqrt_psd(id - x.adjoint() * x, defect_clamp);
  const ComplexMatrix dxs = sqrt_psd(id - x * x.adjoint(), defect_clamp);
  const ComplexMatrix xs = x.adjoint();

  ComplexMatrix u(dd);
  auto put = [&](int bi, int bj, const ComplexMatrix& m, double sign = 1.0) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) u(bi * d + i, bj * d + j) = sign * m(i, j);
  };
  put(0, 0, x);
  put(0, degree, dxs);
  put(1, 0, dx);
  put(1, degree, xs, -1.0);
  for (int b = 2; b <= degree; ++b) put(b, b - 1, id);

  DilationCertificate cert;
  cert.base_dim = d;
  cert.dilated_dim = dd;
  cert.degree = degree;
  cert.unitarity_residual = op_norm(u.adjoint() * u - ComplexMatrix::identity(dd));

  // Compression P_H U^k |_H against X^k for k = 1..N.
  ComplexMatrix uk = ComplexMatrix::identity(dd);
  ComplexMatrix xk = id;
  for (int k = 1; k <= degree; ++k) {
    uk = uk * u;
    xk = xk * x;
    ComplexMatrix corner(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) corner(i, j) = uk(i, j);
    cert.compression_residual =
        std::max(cert.compression_residual, op_norm(corner - xk));
  }
  return {u, cert};
}

/// Canonical embedding of the base space as the first block of a stacked
/// space of dimension dd = blocks * d: the isometry columns are the first d
/// coordinate vectors.
inline std::vector<std::vector<cplx>> first_block_embedding(int d, int dd) {
  std::vector<std::vector<cplx>> cols(static_cast<size_t>(d),
                                      std::vector<cplx>(static_cast<size_t>(dd), cplx{}));
  for (int j = 0; j < d; ++j) cols[static_cast<size_t>(j)][static_cast<size_t>(j)] = 1.0;
  return cols;
}

/// Verifies a supplied dilation: U should be a commuting normal contractive
/// tuple on the larger space and embed an isometry (given by its columns);
/// every word of length <= degree in the U's must compress to the matching
/// word in the X's. Words are enumerated in graded lexicographic order,
/// capped at 2000. Mild hypothesis violations (a slightly perturbed U) are
/// recorded in the certificate rather than thrown, so corruption shows up as
/// a failed certificate; gross violations are rejected.
inline DilationCertificate verify_dilation(const OperatorTuple& x, const OperatorTuple& u,
                                           const std::vector<std::vector<cplx>>& embed,
                                           int degree) {
  if (x.n() != u.n()) throw std::invalid_argument("verify_dilation: arity mismatch");
  const int d = x.dim();
  const int dd = u.dim();
  if (static_cast<int>(embed.size()) != d)
    throw std::invalid_argument("verify_dilation: embed must have one column per base dimension");
  for (const auto& col : embed)
    if (static_cast<int>(col.size()) != dd)
      throw std::invalid_argument("verify_dilation: embed columns must live on the dilated space");

  double hyp = std::max(u.flags().commuting_residual, u.flags().normal_residual);
  hyp = std::max(hyp, u.flags().contractive_excess);
  double uscale = 1.0;
  for (int i = 0; i < u.n(); ++i) uscale = std::max(uscale, op_norm(u[i]));
  if (hyp > 0.1 * uscale * uscale)
    throw std::invalid_argument("verify_dilation: tuple is far from a commuting normal contraction");

  {
    ComplexMatrix gram(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        cplx s = 0.0;
        for (int r = 0; r < dd; ++r)
          s += std::conj(embed[static_cast<size_t>(i)][static_cast<size_t>(r)]) *
               embed[static_cast<size_t>(j)][static_cast<size_t>(r)];
        gram(i, j) = s;
      }
    if (op_norm(gram - ComplexMatrix::identity(d)) > 1e-10)
      throw std::invalid_argument("verify_dilation: embed is not an isometry");
  }

  DilationCertificate cert;
  cert.base_dim = d;
  cert.dilated_dim = dd;
  cert.degree = degree;
  cert.unitarity_residual = hyp;  // distance from the commuting-normal hypothesis

  auto compress = [&](const ComplexMatrix& big) {
    ComplexMatrix c(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        cplx s = 0.0;
        for (int r = 0; r < dd; ++r)
          for (int q = 0; q < dd; ++q)
            s += std::conj(embed[static_cast<size_t>(i)][static_cast<size_t>(r)]) * big(r, q) *
                 embed[static_cast<size_t>(j)][static_cast<size_t>(q)];
        c(i, j) = s;
      }
    return c;
  };

  // Graded enumeration of words j_1..j_l, l <= degree.
  int words = 0;
  std::vector<int> word;
  for (int len = 1; len <= degree && words < 2000; ++len) {
    word.assign(static_cast<size_t>(len), 0);
    while (words < 2000) {
      ComplexMatrix uw = ComplexMatrix::identity(dd);
      ComplexMatrix xw = ComplexMatrix::identity(d);
      for (int p = 0; p < len; ++p) {
        uw = uw * u[word[static_cast<size_t>(p)]];
        xw = xw * x[word[static_cast<size_t>(p)]];
      }
      cert.compression_residual =
          std::max(cert.compression_residual, op_norm(compress(uw) - xw));
      ++words;
      int pos = len - 1;
      while (pos >= 0 && word[static_cast<size_t>(pos)] == x.n() - 1) {
        word[static_cast<size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
      ++word[static_cast<size_t>(pos)];
    }
  }
  return cert;
}

/// Operator norm of f(X) against the padded grid sup over the distinguished
/// boundary. Sound for tuples with a certified normal dilation; normal tuples
/// self-certify.
struct VonNeumannResult {
  double op_value = 0.0;
  double sup_value = 0.0;
  double margin = 0.0;
  bool certified = false;  // hypothesis verified (normal tuple or valid certificate)
};

inline VonNeumannResult von_neumann_check(const OperatorTuple& x, const AnalyticFunction& f,
                                          int grid,
                                          const std::optional<DilationCertificate>& cert = {}) {
  if (f.arity() != x.n()) throw std::invalid_argument("von_neumann_check: arity mismatch");
  VonNeumannResult r;
  r.op_value = op_norm(eval_ordered(f, x.mats()));
  const auto sup = f.sup_norm_estimate(grid);
  r.sup_value = sup.upper();
  r.margin = r.sup_value - r.op_value;
  r.certified = (x.flags().normal && (x.n() == 1 || x.flags().commuting) && x.flags().contractive) ||
                (cert.has_value() && cert->valid(1e-10));
  return r;
}

}  // namespace opshift
