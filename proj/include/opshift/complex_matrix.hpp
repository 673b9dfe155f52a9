#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace opshift {

using cplx = std::complex<double>;

/// Dense square complex matrix with value semantics. All arithmetic returns
/// fresh matrices; nothing here mutates shared state, so any operation can be
/// called concurrently.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;

  explicit ComplexMatrix(int dim) : dim_(check_dim(dim)), a_(static_cast<size_t>(dim) * dim) {}

  static ComplexMatrix identity(int dim) {
    ComplexMatrix m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  static ComplexMatrix diagonal(std::span<const cplx> entries) {
    ComplexMatrix m(static_cast<int>(entries.size()));
    for (int i = 0; i < m.dim_; ++i) m(i, i) = entries[static_cast<size_t>(i)];
    return m;
  }

  static ComplexMatrix diagonal(std::initializer_list<cplx> entries) {
    return diagonal(std::span<const cplx>(entries.begin(), entries.size()));
  }

  /// Builds from a row-major list of rows; rejects non-square shapes and
  /// non-finite entries.
  static ComplexMatrix from_rows(const std::vector<std::vector<cplx>>& rows) {
    const int d = static_cast<int>(rows.size());
    ComplexMatrix m(d);
    for (int i = 0; i < d; ++i) {
      if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != d)
        throw std::invalid_argument("ComplexMatrix::from_rows: ragged or non-square input");
      for (int j = 0; j < d; ++j) {
        const cplx v = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
          throw std::invalid_argument("ComplexMatrix::from_rows: non-finite entry");
        m(i, j) = v;
      }
    }
    return m;
  }

  int dim() const { return dim_; }
  bool empty() const { return dim_ == 0; }

  const cplx& operator()(int i, int j) const { return a_[idx(i, j)]; }
  cplx& operator()(int i, int j) { return a_[idx(i, j)]; }

  bool all_finite() const {
    return std::all_of(a_.begin(), a_.end(), [](const cplx& v) {
      return std::isfinite(v.real()) && std::isfinite(v.imag());
    });
  }

  ComplexMatrix adjoint() const {
    ComplexMatrix r(dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
  }

  ComplexMatrix operator+(const ComplexMatrix& o) const {
    require_same_dim(o, "operator+");
    ComplexMatrix r(dim_);
    for (size_t k = 0; k < a_.size(); ++k) r.a_[k] = a_[k] + o.a_[k];
    return r;
  }

  ComplexMatrix operator-(const ComplexMatrix& o) const {
    require_same_dim(o, "operator-");
    ComplexMatrix r(dim_);
    for (size_t k = 0; k < a_.size(); ++k) r.a_[k] = a_[k] - o.a_[k];
    return r;
  }

  ComplexMatrix operator-() const {
    ComplexMatrix r(dim_);
    for (size_t k = 0; k < a_.size(); ++k) r.a_[k] = -a_[k];
    return r;
  }

  ComplexMatrix operator*(const ComplexMatrix& o) const {
    require_same_dim(o, "operator*");
    ComplexMatrix r(dim_);
    for (int i = 0; i < dim_; ++i) {
      for (int k = 0; k < dim_; ++k) {
        const cplx aik = (*this)(i, k);
        if (aik == cplx{}) continue;
        for (int j = 0; j < dim_; ++j) r(i, j) += aik * o(k, j);
      }
    }
    return r;
  }

  friend ComplexMatrix operator*(const cplx& s, const ComplexMatrix& m) {
    ComplexMatrix r(m.dim_);
    for (size_t k = 0; k < m.a_.size(); ++k) r.a_[k] = s * m.a_[k];
    return r;
  }

  ComplexMatrix operator*(const cplx& s) const { return s * (*this); }

  /// k-th power by repeated squaring; pow(0) is the identity.
  ComplexMatrix pow(int k) const {
    if (k < 0) throw std::invalid_argument("ComplexMatrix::pow: negative exponent");
    ComplexMatrix result = identity(dim_);
    ComplexMatrix base = *this;
    while (k > 0) {
      if (k & 1) result = result * base;
      base = (k >>= 1) ? base * base : base;
    }
    return result;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const cplx& v : a_) s += std::norm(v);
    return std::sqrt(s);
  }

  double max_abs() const {
    double s = 0.0;
    for (const cplx& v : a_) s = std::max(s, std::abs(v));
    return s;
  }

  bool operator==(const ComplexMatrix& o) const { return dim_ == o.dim_ && a_ == o.a_; }

 private:
  static int check_dim(int dim) {
    if (dim < 0) throw std::invalid_argument("ComplexMatrix: negative dimension");
    return dim;
  }
  size_t idx(int i, int j) const {
    return static_cast<size_t>(i) * static_cast<size_t>(dim_) + static_cast<size_t>(j);
  }
  void require_same_dim(const ComplexMatrix& o, const char* what) const {
    if (dim_ != o.dim_)
      throw std::invalid_argument(std::string("ComplexMatrix::") + what + ": dimension mismatch");
  }

  int dim_ = 0;
  std::vector<cplx> a_;
};

inline cplx trace(const ComplexMatrix& m) {
  cplx t = 0.0;
  for (int i = 0; i < m.dim(); ++i) t += m(i, i);
  return t;
}

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a * b - b * a;
}

/// Hermitian part (A + A*)/2.
inline ComplexMatrix hermitian_part(const ComplexMatrix& a) {
  ComplexMatrix r(a.dim());
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) r(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
  return r;
}

/// Skew part mapped to a Hermitian matrix: (A - A*)/(2i).
inline ComplexMatrix antihermitian_part(const ComplexMatrix& a) {
  ComplexMatrix r(a.dim());
  const cplx half_over_i(0.0, -0.5);
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) r(i, j) = half_over_i * (a(i, j) - std::conj(a(j, i)));
  return r;
}

}  // namespace opshift
