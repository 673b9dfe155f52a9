#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "opshift/complex_matrix.hpp"
#include "opshift/hermitian_eig.hpp"

namespace opshift {

/// Singular values in descending order, computed as clamped square roots of
/// the eigenvalues of A*A.
inline std::vector<double> singular_values(const ComplexMatrix& a) {
  if (!a.all_finite()) throw std::invalid_argument("singular_values: non-finite entry");
  const HermitianEig eig = hermitian_eigensystem(a.adjoint() * a);
  std::vector<double> s;
  s.reserve(eig.values.size());
  for (auto it = eig.values.rbegin(); it != eig.values.rend(); ++it)
    s.push_back(std::sqrt(std::max(*it, 0.0)));
  return s;
}

/// Largest singular value.
inline double op_norm(const ComplexMatrix& a) {
  if (a.dim() == 0) return 0.0;
  return singular_values(a).front();
}

/// Schatten p-norm (sum sigma_i^p)^(1/p); p = 1 is the trace norm.
inline double schatten_norm(const ComplexMatrix& a, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("schatten_norm: requires p >= 1");
  const std::vector<double> s = singular_values(a);
  if (s.empty()) return 0.0;
  // Factor out the leading singular value: sharper than the raw power sum
  // when the values spread over many orders of magnitude.
  const double smax = s.front();
  if (smax == 0.0) return 0.0;
  double acc = 0.0;
  for (double v : s) acc += std::pow(v / smax, p);
  return smax * std::pow(acc, 1.0 / p);
}

inline double frobenius_norm(const ComplexMatrix& a) { return a.frobenius_norm(); }

inline bool is_contraction(const ComplexMatrix& a, double tol = 1e-10) {
  if (tol < 0.0) throw std::invalid_argument("is_contraction: negative tolerance");
  return op_norm(a) <= 1.0 + tol;
}

/// trace|Re V| + trace|Im V|, the partition-sum bound used throughout the
/// first-order estimates.
inline double trace_abs_re_im(const ComplexMatrix& v) {
  return trace_abs_hermitian(hermitian_part(v)) + trace_abs_hermitian(antihermitian_part(v));
}

/// Norm selector: operator norm, Schatten p, or Frobenius.
struct NormKind {
  enum class Tag { operator_norm, schatten, frobenius };
  Tag tag = Tag::operator_norm;
  double p = 0.0;

  static NormKind operator_norm_kind() { return {Tag::operator_norm, 0.0}; }
  static NormKind schatten_kind(double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("NormKind: schatten requires p >= 1");
    return {Tag::schatten, p};
  }
  static NormKind frobenius_kind() { return {Tag::frobenius, 2.0}; }

  double operator()(const ComplexMatrix& a) const {
    switch (tag) {
      case Tag::operator_norm: return op_norm(a);
      case Tag::schatten: return schatten_norm(a, p);
      case Tag::frobenius: return frobenius_norm(a);
    }
    throw std::logic_error("NormKind: bad tag");
  }

  std::string name() const {
    switch (tag) {
      case Tag::operator_norm: return "operator";
      case Tag::schatten: return "schatten(" + std::to_string(p) + ")";
      case Tag::frobenius: return "frobenius";
    }
    return "?";
  }
};

}  // namespace opshift
