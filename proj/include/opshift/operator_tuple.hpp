#pragma once

#include <stdexcept>
#include <vector>

#include "opshift/complex_matrix.hpp"
#include "opshift/norms.hpp"

namespace opshift {

/// Certified structure flags of a tuple. Each flag carries the residual that
/// was measured when certifying it, so downstream checks can report how far
/// from exact the hypothesis was.
struct TupleFlags {
  bool commuting = false;
  bool contractive = false;
  bool normal = false;
  bool selfadjoint = false;
  double commuting_residual = 0.0;
  double contractive_excess = 0.0;  // max(0, max_i ||A_i|| - 1)
  double normal_residual = 0.0;
  double selfadjoint_residual = 0.0;
};

/// An n-tuple of same-dimension matrices with certified flags.
class OperatorTuple {
 public:
  OperatorTuple() = default;

  /// Certifies all four structure flags. The commutativity and normality
  /// tolerances scale with the operator norms involved.
  static OperatorTuple certify(std::vector<ComplexMatrix> mats, double tol = 1e-10) {
    if (mats.empty()) throw std::invalid_argument("OperatorTuple: empty tuple");
    const int d = mats.front().dim();
    for (const ComplexMatrix& m : mats) {
      if (m.dim() != d) throw std::invalid_argument("OperatorTuple: mixed dimensions");
      if (!m.all_finite()) throw std::invalid_argument("OperatorTuple: non-finite entry");
    }

    OperatorTuple t;
    t.mats_ = std::move(mats);
    const int n = t.n();

    std::vector<double> norms(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) norms[static_cast<size_t>(i)] = op_norm(t.mats_[static_cast<size_t>(i)]);

    TupleFlags f;
    double comm_scale = 1.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        f.commuting_residual = std::max(
            f.commuting_residual,
            op_norm(commutator(t.mats_[static_cast<size_t>(i)], t.mats_[static_cast<size_t>(j)])));
        comm_scale = std::max(comm_scale, norms[static_cast<size_t>(i)] * norms[static_cast<size_t>(j)]);
      }
    }
    f.commuting = f.commuting_residual <= tol * comm_scale;

    for (int i = 0; i < n; ++i) {
      const ComplexMatrix& a = t.mats_[static_cast<size_t>(i)];
      const double ni = norms[static_cast<size_t>(i)];
      f.normal_residual =
          std::max(f.normal_residual, op_norm(commutator(a, a.adjoint())));
      f.selfadjoint_residual = std::max(f.selfadjoint_residual, op_norm(a - a.adjoint()));
      f.contractive_excess = std::max(f.contractive_excess, ni - 1.0);
    }
    f.normal = f.normal_residual <= tol * std::max(1.0, comm_scale);
    f.selfadjoint = f.selfadjoint_residual <= tol;
    f.contractive = f.contractive_excess <= tol;

    t.flags_ = f;
    t.tol_ = tol;
    return t;
  }

  int n() const { return static_cast<int>(mats_.size()); }
  int dim() const { return mats_.empty() ? 0 : mats_.front().dim(); }
  const ComplexMatrix& operator[](int i) const { return mats_.at(static_cast<size_t>(i)); }
  const std::vector<ComplexMatrix>& mats() const { return mats_; }
  const TupleFlags& flags() const { return flags_; }
  double certification_tol() const { return tol_; }

 private:
  std::vector<ComplexMatrix> mats_;
  TupleFlags flags_;
  double tol_ = 1e-10;
};

}  // namespace opshift
