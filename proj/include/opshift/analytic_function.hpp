#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "opshift/complex_matrix.hpp"

namespace opshift {

enum class DomainKind { polydisc, real_cube };

/// Multivariate polynomial with complex coefficients, stored as a finitely
/// supported multi-index map. This is the working representation for the
/// holomorphic functions the trace formulas quantify over: every identity in
/// the suite is exact on polynomials, and transcendental inputs enter as
/// truncated series whose tail lives in the growth certificate.
class AnalyticFunction {
 public:
  using Index = std::vector<int>;  // one exponent per coordinate

  AnalyticFunction(int arity, DomainKind domain = DomainKind::polydisc, double radius = 1.25)
      : arity_(arity), domain_(domain), radius_(radius) {
    if (arity < 1) throw std::invalid_argument("AnalyticFunction: arity must be >= 1");
    if (!(radius > 1.0)) throw std::invalid_argument("AnalyticFunction: radius must exceed 1");
  }

  static AnalyticFunction monomial(int arity, Index k, cplx coeff,
                                   DomainKind domain = DomainKind::polydisc) {
    AnalyticFunction f(arity, domain);
    f.add_term(std::move(k), coeff);
    return f;
  }

  static AnalyticFunction constant(int arity, cplx value,
                                   DomainKind domain = DomainKind::polydisc) {
    return monomial(arity, Index(static_cast<size_t>(arity), 0), value, domain);
  }

  /// Coordinate function z_j (0-based j).
  static AnalyticFunction coordinate(int arity, int j, DomainKind domain = DomainKind::polydisc) {
    Index k(static_cast<size_t>(arity), 0);
    k.at(static_cast<size_t>(j)) = 1;
    return monomial(arity, std::move(k), 1.0, domain);
  }

  /// Univariate polynomial sum_m coeffs[m] z^m.
  static AnalyticFunction univariate(std::span<const cplx> coeffs,
                                     DomainKind domain = DomainKind::polydisc) {
    AnalyticFunction f(1, domain);
    for (size_t m = 0; m < coeffs.size(); ++m)
      f.add_term(Index{static_cast<int>(m)}, coeffs[m]);
    return f;
  }

  int arity() const { return arity_; }
  DomainKind domain_kind() const { return domain_; }
  double radius() const { return radius_; }
  const std::map<Index, cplx>& coeffs() const { return coeffs_; }
  bool is_zero() const { return coeffs_.empty(); }

  void add_term(Index k, cplx coeff) {
    if (static_cast<int>(k.size()) != arity_)
      throw std::invalid_argument("AnalyticFunction: multi-index arity mismatch");
    for (int e : k)
      if (e < 0) throw std::invalid_argument("AnalyticFunction: negative exponent");
    if (coeff == cplx{}) return;
    auto [it, inserted] = coeffs_.try_emplace(std::move(k), coeff);
    if (!inserted) {
      it->second += coeff;
      if (it->second == cplx{}) coeffs_.erase(it);
    }
  }

  int total_degree() const {
    int deg = 0;
    for (const auto& [k, c] : coeffs_) {
      int s = 0;
      for (int e : k) s += e;
      deg = std::max(deg, s);
    }
    return deg;
  }

  int degree_in(int j) const {
    int deg = 0;
    for (const auto& [k, c] : coeffs_) deg = std::max(deg, k[static_cast<size_t>(j)]);
    return deg;
  }

  /// sum |c_k| radius^{|k|}; finite by construction, recorded as the
  /// convergence certificate of the truncation.
  double growth_certificate() const {
    double s = 0.0;
    for (const auto& [k, c] : coeffs_) {
      int deg = 0;
      for (int e : k) deg += e;
      s += std::abs(c) * std::pow(radius_, deg);
    }
    return s;
  }

  cplx eval(std::span<const cplx> z) const {
    if (static_cast<int>(z.size()) != arity_)
      throw std::invalid_argument("AnalyticFunction::eval: point arity mismatch");
    cplx acc = 0.0;
    for (const auto& [k, c] : coeffs_) {
      cplx term = c;
      for (int j = 0; j < arity_; ++j) term *= pow_int(z[static_cast<size_t>(j)], k[static_cast<size_t>(j)]);
      acc += term;
    }
    return acc;
  }

  cplx eval(const std::vector<cplx>& z) const { return eval(std::span<const cplx>(z)); }

  /// Termwise d/dz_j (0-based j).
  AnalyticFunction partial_derivative(int j) const {
    check_coord(j);
    AnalyticFunction out(arity_, domain_, radius_);
    for (const auto& [k, c] : coeffs_) {
      const int e = k[static_cast<size_t>(j)];
      if (e == 0) continue;
      Index k2 = k;
      k2[static_cast<size_t>(j)] = e - 1;
      out.add_term(std::move(k2), c * static_cast<double>(e));
    }
    return out;
  }

  AnalyticFunction operator+(const AnalyticFunction& o) const {
    require_compatible(o);
    AnalyticFunction out = *this;
    for (const auto& [k, c] : o.coeffs_) out.add_term(k, c);
    return out;
  }

  AnalyticFunction operator-(const AnalyticFunction& o) const {
    require_compatible(o);
    AnalyticFunction out = *this;
    for (const auto& [k, c] : o.coeffs_) out.add_term(k, -c);
    return out;
  }

  AnalyticFunction operator*(const AnalyticFunction& o) const {
    require_compatible(o);
    AnalyticFunction out(arity_, domain_, std::min(radius_, o.radius_));
    for (const auto& [ka, ca] : coeffs_) {
      for (const auto& [kb, cb] : o.coeffs_) {
        Index k(static_cast<size_t>(arity_));
        for (int j = 0; j < arity_; ++j)
          k[static_cast<size_t>(j)] = ka[static_cast<size_t>(j)] + kb[static_cast<size_t>(j)];
        out.add_term(std::move(k), ca * cb);
      }
    }
    return out;
  }

  AnalyticFunction scaled(cplx s) const {
    AnalyticFunction out(arity_, domain_, radius_);
    for (const auto& [k, c] : coeffs_) out.add_term(k, s * c);
    return out;
  }

  /// Univariate slice in coordinate j with the remaining coordinates pinned:
  /// lambda -> f(fixed_0, ..., lambda, ..., fixed_{n-1}). Returned as a dense
  /// coefficient vector of the slice polynomial.
  std::vector<cplx> slice_coeffs(int j, std::span<const cplx> fixed) const {
    check_coord(j);
    if (static_cast<int>(fixed.size()) != arity_)
      throw std::invalid_argument("AnalyticFunction::slice_coeffs: fixed-point arity mismatch");
    std::vector<cplx> out(static_cast<size_t>(degree_in(j)) + 1, cplx{});
    for (const auto& [k, c] : coeffs_) {
      cplx w = c;
      for (int i = 0; i < arity_; ++i)
        if (i != j) w *= pow_int(fixed[static_cast<size_t>(i)], k[static_cast<size_t>(i)]);
      out[static_cast<size_t>(k[static_cast<size_t>(j)])] += w;
    }
    return out;
  }

  /// Bound for |df/dz_j| on the closed unit polydisc / cube: sum |c_k| k_j.
  double lipschitz_in(int j) const {
    check_coord(j);
    double s = 0.0;
    for (const auto& [k, c] : coeffs_) s += std::abs(c) * k[static_cast<size_t>(j)];
    return s;
  }

  struct SupEstimate {
    double grid_max = 0.0;  // certified lower bound of the true sup
    double pad = 0.0;       // Lipschitz slack: grid_max + pad >= true sup
    double upper() const { return grid_max + pad; }
  };

  /// Max of |f| over a tensor grid on T^n (polydisc) or [-1,1]^n (real_cube),
  /// with a Lipschitz pad so that grid_max + pad dominates the true sup.
  SupEstimate sup_norm_estimate(int grid_per_dim) const {
    if (grid_per_dim < 8)
      throw std::invalid_argument("sup_norm_estimate: need at least 8 grid points per dim");
    const size_t g = static_cast<size_t>(grid_per_dim);
    std::vector<cplx> samples(g);
    double mesh = 0.0;  // max distance from any domain point to the grid
    if (domain_ == DomainKind::polydisc) {
      for (size_t m = 0; m < g; ++m) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(g);
        samples[m] = cplx(std::cos(th), std::sin(th));
      }
      mesh = std::numbers::pi / static_cast<double>(g);  // half arc >= half chord
    } else {
      for (size_t m = 0; m < g; ++m)
        samples[m] = cplx(-1.0 + 2.0 * static_cast<double>(m) / static_cast<double>(g - 1), 0.0);
      mesh = 1.0 / static_cast<double>(g - 1);
    }

    // Per-coordinate power tables: pw[j][m][e] = samples[m]^e.
    std::vector<std::vector<std::vector<cplx>>> pw(static_cast<size_t>(arity_));
    for (int j = 0; j < arity_; ++j) {
      const int dj = degree_in(j);
      pw[static_cast<size_t>(j)].assign(g, std::vector<cplx>(static_cast<size_t>(dj) + 1));
      for (size_t m = 0; m < g; ++m) {
        pw[static_cast<size_t>(j)][m][0] = 1.0;
        for (int e = 1; e <= dj; ++e)
          pw[static_cast<size_t>(j)][m][static_cast<size_t>(e)] =
              pw[static_cast<size_t>(j)][m][static_cast<size_t>(e - 1)] * samples[m];
      }
    }

    SupEstimate est;
    std::vector<size_t> idx(static_cast<size_t>(arity_), 0);
    while (true) {
      cplx acc = 0.0;
      for (const auto& [k, c] : coeffs_) {
        cplx term = c;
        for (int j = 0; j < arity_; ++j)
          term *= pw[static_cast<size_t>(j)][idx[static_cast<size_t>(j)]]
                    [static_cast<size_t>(k[static_cast<size_t>(j)])];
        acc += term;
      }
      est.grid_max = std::max(est.grid_max, std::abs(acc));
      int j = 0;
      for (; j < arity_; ++j) {
        if (++idx[static_cast<size_t>(j)] < g) break;
        idx[static_cast<size_t>(j)] = 0;
      }
      if (j == arity_) break;
    }

    double lip = 0.0;
    for (int j = 0; j < arity_; ++j) lip += lipschitz_in(j);
    est.pad = lip * mesh;
    return est;
  }

  /// For univariate f, the bivariate function (z_1, z_2) -> f(z_1 + i z_2).
  /// Used to read a pair of commuting self-adjoints as one normal operator.
  AnalyticFunction complexified() const {
    if (arity_ != 1)
      throw std::invalid_argument("complexified: expects a univariate function");
    AnalyticFunction out(2, domain_, radius_);
    for (const auto& [k, c] : coeffs_) {
      const int m = k[0];
      // (z1 + i z2)^m expanded binomially.
      cplx binom = 1.0;
      for (int a = 0; a <= m; ++a) {
        const cplx ipow = pow_int(cplx(0.0, 1.0), m - a);
        out.add_term(Index{a, m - a}, c * binom * ipow);
        binom *= static_cast<double>(m - a) / static_cast<double>(a + 1);
      }
    }
    return out;
  }

  static cplx pow_int(cplx z, int e) {
    cplx r = 1.0;
    while (e > 0) {
      if (e & 1) r *= z;
      z *= z;
      e >>= 1;
    }
    return r;
  }

 private:
  void check_coord(int j) const {
    if (j < 0 || j >= arity_) throw std::invalid_argument("AnalyticFunction: coordinate out of range");
  }
  void require_compatible(const AnalyticFunction& o) const {
    if (arity_ != o.arity_ || domain_ != o.domain_)
      throw std::invalid_argument("AnalyticFunction: arity/domain mismatch");
  }

  int arity_;
  DomainKind domain_;
  double radius_;
  std::map<Index, cplx> coeffs_;
};

/// Horner evaluation of a univariate coefficient vector.
inline cplx eval_poly(std::span<const cplx> coeffs, cplx z) {
  cplx acc = 0.0;
  for (size_t m = coeffs.size(); m > 0; --m) acc = acc * z + coeffs[m - 1];
  return acc;
}

inline std::vector<cplx> differentiate_poly(std::span<const cplx> coeffs) {
  if (coeffs.size() <= 1) return {};
  std::vector<cplx> out(coeffs.size() - 1);
  for (size_t m = 1; m < coeffs.size(); ++m)
    out[m - 1] = coeffs[m] * static_cast<double>(m);
  return out;
}

}  // namespace opshift
