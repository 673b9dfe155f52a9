#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "opshift/analytic_function.hpp"

namespace opshift {

/// One atom of a finite atomic measure on C^n. The quadrature node it came
/// from is kept for the CSV dumps and for cross-checking against independent
/// single-coordinate runs.
struct MeasureAtom {
  double t_node = 0.0;
  std::vector<cplx> point;
  cplx weight;
};

/// Finite atomic complex measure on C^n.
struct DiscreteMeasure {
  int arity = 0;
  std::string label;  // "mu(j)" or "nu(i,j)", 1-based
  std::vector<MeasureAtom> atoms;

  cplx total_mass() const {
    cplx s = 0.0;
    for (const MeasureAtom& a : atoms) s += a.weight;
    return s;
  }

  double total_variation() const {
    double s = 0.0;
    for (const MeasureAtom& a : atoms) s += std::abs(a.weight);
    return s;
  }

  double max_imag_weight() const {
    double s = 0.0;
    for (const MeasureAtom& a : atoms) s = std::max(s, std::abs(a.weight.imag()));
    return s;
  }

  /// Largest coordinate modulus over the support.
  double support_radius() const {
    double s = 0.0;
    for (const MeasureAtom& a : atoms)
      for (const cplx& z : a.point) s = std::max(s, std::abs(z));
    return s;
  }

  cplx integrate(const AnalyticFunction& g) const {
    if (g.arity() != arity) throw std::invalid_argument("DiscreteMeasure::integrate: arity mismatch");
    cplx s = 0.0;
    for (const MeasureAtom& a : atoms) s += a.weight * g.eval(a.point);
    return s;
  }

  /// Integral of a univariate g read off coordinate j of the support.
  cplx integrate_coordinate(const AnalyticFunction& g, int j) const {
    if (g.arity() != 1)
      throw std::invalid_argument("integrate_coordinate: expects univariate g");
    if (j < 0 || j >= arity) throw std::invalid_argument("integrate_coordinate: bad coordinate");
    cplx s = 0.0;
    for (const MeasureAtom& a : atoms) {
      const std::vector<cplx> z = {a.point[static_cast<size_t>(j)]};
      s += a.weight * g.eval(z);
    }
    return s;
  }
};

/// Projection of the atoms to coordinate j (weights preserved).
inline DiscreteMeasure marginal(const DiscreteMeasure& m, int j) {
  if (j < 0 || j >= m.arity) throw std::invalid_argument("marginal: coordinate out of range");
  DiscreteMeasure out;
  out.arity = 1;
  out.label = m.label + ":marginal(" + std::to_string(j + 1) + ")";
  out.atoms.reserve(m.atoms.size());
  for (const MeasureAtom& a : m.atoms)
    out.atoms.push_back({a.t_node, {a.point[static_cast<size_t>(j)]}, a.weight});
  return out;
}

}  // namespace opshift
