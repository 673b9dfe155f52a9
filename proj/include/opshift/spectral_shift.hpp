#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "opshift/derivatives.hpp"
#include "opshift/discrete_measure.hpp"
#include "opshift/functional_calculus.hpp"
#include "opshift/joint_spectrum.hpp"
#include "opshift/path.hpp"
#include "opshift/quadrature.hpp"

namespace opshift {

/// Trace of the path derivative split into the chain-rule pieces
/// trace(V_j df/dz_j(X~(t))). The identity needs only cyclicity of the trace
/// and pairwise commutativity at the evaluation point.
struct ChainRuleResult {
  cplx lhs = 0.0;                // trace of the derivative
  std::vector<cplx> per_coordinate;  // trace(V_j df/dz_j(X~(t)))
  double residual = 0.0;
};

inline ChainRuleResult chain_rule_trace(const AnalyticFunction& f, const PathSpec& path,
                                        double t) {
  if (f.arity() != path.n()) throw std::invalid_argument("chain_rule_trace: arity mismatch");
  const OperatorTuple xt = path.at(t);
  if (xt.n() > 1 && !xt.flags().commuting)
    throw std::invalid_argument("chain_rule_trace: path point is not certified commuting");

  ChainRuleResult r;
  r.lhs = trace(first_derivative(f, path, t).value);
  cplx sum = 0.0;
  for (int j = 0; j < path.n(); ++j) {
    const ComplexMatrix dfj = eval_function(f.partial_derivative(j), xt);
    const cplx term = trace(path.v[static_cast<size_t>(j)] * dfj);
    r.per_coordinate.push_back(term);
    sum += term;
  }
  r.residual = std::abs(r.lhs - sum);
  return r;
}

namespace detail {

struct NodeSpectrum {
  double t = 0.0;
  double w = 0.0;
  JointSpectrum js;
};

/// Joint spectra at the quadrature nodes; every node must be a commuting
/// normal tuple (guaranteed on shared-eigenbasis paths, refused otherwise).
inline std::vector<NodeSpectrum> path_spectra(const PathSpec& path, int nodes, uint64_t seed) {
  const QuadratureRule rule = gauss_legendre_01(nodes);
  std::vector<NodeSpectrum> out;
  out.reserve(static_cast<size_t>(nodes));
  for (int q = 0; q < nodes; ++q) {
    NodeSpectrum ns;
    ns.t = rule.nodes[static_cast<size_t>(q)];
    ns.w = rule.weights[static_cast<size_t>(q)];
    const OperatorTuple xt = path.at(ns.t);
    if (xt.n() > 1 && !xt.flags().commuting)
      throw std::domain_error("measure construction: non-commuting path point");
    if (!xt.flags().normal)
      throw std::domain_error("measure construction: non-normal path point");
    ns.js = joint_diagonalize(xt, 1e-8, derive_seed(seed, static_cast<uint64_t>(q)));
    out.push_back(std::move(ns));
  }
  return out;
}

}  // namespace detail

/// First-order spectral shift measures mu_1..mu_n for a commuting path of
/// normal contractions: atoms sit at the joint eigenvalues of X~(t_q) with
/// weights w_q trace(P_k V_j), so that
///   trace(f(B~) - f(A~)) = sum_j integral df/dz_j dmu_j
/// holds exactly for polynomials within quadrature exactness.
inline std::vector<DiscreteMeasure> first_order_measures(const PathSpec& path,
                                                         const QuadratureSpec& quad,
                                                         int max_degree,
                                                         uint64_t seed = 0xf005ba11ULL) {
  if (!path.path_commuting)
    throw std::domain_error("first_order_measures: path is not certified commuting");
  if (!path.endpoints_admissible)
    throw std::domain_error("first_order_measures: endpoints are not commuting contractions");
  const int n = path.n();
  const int m = quad.resolve(max_degree);
  const auto spectra = detail::path_spectra(path, m, seed);

  std::vector<DiscreteMeasure> out;
  out.reserve(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    DiscreteMeasure mu;
    mu.arity = n;
    mu.label = "mu(" + std::to_string(j + 1) + ")";
    for (const auto& ns : spectra) {
      for (int k = 0; k < ns.js.count(); ++k) {
        const cplx w = ns.w * trace(ns.js.projections[static_cast<size_t>(k)] *
                                    path.v[static_cast<size_t>(j)]);
        mu.atoms.push_back({ns.t, ns.js.points[static_cast<size_t>(k)], w});
      }
    }
    out.push_back(std::move(mu));
  }
  return out;
}

struct MeasureCheckResult {
  cplx lhs = 0.0;
  cplx rhs = 0.0;
  double residual = 0.0;
};

/// trace(f(B~) - f(A~)) against sum_j integral df/dz_j dmu_j.
inline MeasureCheckResult verify_first_order(const AnalyticFunction& f, const PathSpec& path,
                                             const std::vector<DiscreteMeasure>& measures) {
  if (f.arity() != path.n()) throw std::invalid_argument("verify_first_order: arity mismatch");
  if (static_cast<int>(measures.size()) != path.n())
    throw std::invalid_argument("verify_first_order: expected one measure per coordinate");
  MeasureCheckResult r;
  r.lhs = trace(eval_function(f, path.b)) - trace(eval_function(f, path.a));
  for (int j = 0; j < path.n(); ++j)
    r.rhs += measures[static_cast<size_t>(j)].integrate(f.partial_derivative(j));
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

/// Second-order spectral shift measures nu_ij (i <= j). The diagonal measure
/// nu_jj collapses the confluent divided-difference representation of
/// trace(D^{j,j}) onto segment atoms between joint eigenvalues; the mixed
/// measure nu_ij collapses the two-coordinate difference representation of
/// trace(D^{i,j}) onto box atoms. Both collapses use Gauss-Legendre rules
/// sized by the same node count as the path integral, so the trace formula
///   trace(f(B~) - f(A~) - d/ds|_0 f(X~(s)))
///     = sum_j integral d2f/dz_j^2 dnu_jj + 2 sum_{i<j} integral d2f/dz_i dz_j dnu_ij
/// is exact for polynomials within quadrature exactness.
inline std::map<std::pair<int, int>, DiscreteMeasure> second_order_measures(
    const PathSpec& path, const QuadratureSpec& quad, int max_degree,
    uint64_t seed = 0xf005ba12ULL) {
  if (!path.path_commuting)
    throw std::domain_error("second_order_measures: path is not certified commuting");
  if (!path.endpoints_admissible)
    throw std::domain_error("second_order_measures: endpoints are not commuting contractions");
  const int n = path.n();
  const int m = quad.resolve(max_degree);
  const auto spectra = detail::path_spectra(path, m, seed);
  const QuadratureRule inner = gauss_legendre_01(m);

  std::map<std::pair<int, int>, DiscreteMeasure> out;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      DiscreteMeasure nu;
      nu.arity = n;
      nu.label = "nu(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";

      for (const auto& ns : spectra) {
        const double tw = ns.w * (1.0 - ns.t);
        const int kk = ns.js.count();
        for (int k = 0; k < kk; ++k) {
          for (int l = 0; l < kk; ++l) {
            const ComplexMatrix pkvi = ns.js.projections[static_cast<size_t>(k)] *
                                       path.v[static_cast<size_t>(i)];
            const ComplexMatrix plvj = ns.js.projections[static_cast<size_t>(l)] *
                                       path.v[static_cast<size_t>(j)];
            const cplx base_w = tw * trace(pkvi * plvj);
            if (std::abs(base_w) < 1e-300) continue;
            const auto& lk = ns.js.points[static_cast<size_t>(k)];
            const auto& ll = ns.js.points[static_cast<size_t>(l)];

            if (i == j) {
              // Confluent segment atoms: the divided difference
              // f(..., [lk_j, lk_j, ll_j], ...) equals
              // integral_0^1 s f_jj''(ll_j + (lk_j - ll_j) s) ds.
              for (int a = 0; a < m; ++a) {
                const double s = inner.nodes[static_cast<size_t>(a)];
                std::vector<cplx> pt = lk;
                pt[static_cast<size_t>(j)] =
                    ll[static_cast<size_t>(j)] +
                    (lk[static_cast<size_t>(j)] - ll[static_cast<size_t>(j)]) * s;
                nu.atoms.push_back(
                    {ns.t, std::move(pt),
                     2.0 * base_w * inner.weights[static_cast<size_t>(a)] * s});
              }
            } else {
              // Box atoms: the two-coordinate difference with base point
              // taking the l-values on coordinates i..j and the k-values
              // elsewhere, integrated over the step box.
              std::vector<cplx> base = lk;
              for (int g = i; g <= j; ++g)
                base[static_cast<size_t>(g)] = ll[static_cast<size_t>(g)];
              const cplx hi = lk[static_cast<size_t>(i)] - ll[static_cast<size_t>(i)];
              const cplx hj = lk[static_cast<size_t>(j)] - ll[static_cast<size_t>(j)];
              for (int a = 0; a < m; ++a) {
                for (int b = 0; b < m; ++b) {
                  std::vector<cplx> pt = base;
                  pt[static_cast<size_t>(i)] += inner.nodes[static_cast<size_t>(a)] * hi;
                  pt[static_cast<size_t>(j)] += inner.nodes[static_cast<size_t>(b)] * hj;
                  nu.atoms.push_back({ns.t, std::move(pt),
                                      base_w * inner.weights[static_cast<size_t>(a)] *
                                          inner.weights[static_cast<size_t>(b)]});
                }
              }
            }
          }
        }
      }
      out.emplace(std::make_pair(i, j), std::move(nu));
    }
  }
  return out;
}

/// Taylor-remainder trace against the second-order measures.
inline MeasureCheckResult verify_second_order(
    const AnalyticFunction& f, const PathSpec& path,
    const std::map<std::pair<int, int>, DiscreteMeasure>& measures) {
  if (f.arity() != path.n()) throw std::invalid_argument("verify_second_order: arity mismatch");
  MeasureCheckResult r;
  r.lhs = trace(eval_function(f, path.b)) - trace(eval_function(f, path.a)) -
          trace(first_derivative(f, path, 0.0).value);
  for (const auto& [key, nu] : measures) {
    const auto& [i, j] = key;
    const AnalyticFunction d2 = f.partial_derivative(i).partial_derivative(j);
    const cplx integral = nu.integrate(d2);
    r.rhs += (i == j) ? integral : 2.0 * integral;
  }
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

struct PartitionBoundResult {
  double sum = 0.0;
  double bound = 0.0;
  double slack() const { return bound - sum; }
};

/// Partition trace bounds: (i) sum_k |trace(P_k V)| against
/// trace|Re V| + trace|Im V|; (ii) with a second perturbation,
/// sum_{k,l} |trace(P_k V P_l V2 P_k)| against ||V||_{S2} ||V2||_{S2}.
inline PartitionBoundResult partition_trace_bound(const JointSpectrum& js, const ComplexMatrix& v,
                                                  const std::optional<ComplexMatrix>& v2 = {}) {
  PartitionBoundResult r;
  if (!v2.has_value()) {
    for (const ComplexMatrix& p : js.projections) r.sum += std::abs(trace(p * v));
    r.bound = trace_abs_re_im(v);
    return r;
  }
  for (const ComplexMatrix& p : js.projections)
    for (const ComplexMatrix& p2 : js.projections)
      r.sum += std::abs(trace(p * v * p2 * (*v2) * p));
  r.bound = schatten_norm(v, 2.0) * schatten_norm(*v2, 2.0);
  return r;
}

/// Trace formulas for a pair of commuting self-adjoint tuples read as single
/// normal operators M = A_1 + i A_2. Order 1 checks
///   trace(f(M_B) - f(M_A)) = integral f' d(mu_1 + i mu_2);
/// order 2 checks the Taylor remainder against f'' and nu_11 - nu_22 + 2i nu_12.
struct NormalPairResult {
  cplx lhs = 0.0;
  cplx rhs = 0.0;
  double residual = 0.0;
};

inline NormalPairResult normal_pair_formula(const PathSpec& path, const AnalyticFunction& f,
                                            int order, const QuadratureSpec& quad,
                                            uint64_t seed = 0xf005ba13ULL) {
  if (path.n() != 2) throw std::invalid_argument("normal_pair_formula: expects a pair");
  if (f.arity() != 1) throw std::invalid_argument("normal_pair_formula: expects univariate f");
  if (!path.a.flags().selfadjoint || !path.b.flags().selfadjoint)
    throw std::invalid_argument("normal_pair_formula: endpoints must be self-adjoint");
  if (!path.path_commuting)
    throw std::invalid_argument("normal_pair_formula: path is not certified commuting");
  const ComplexMatrix ma = path.a[0] + cplx(0.0, 1.0) * path.a[1];
  const ComplexMatrix mb = path.b[0] + cplx(0.0, 1.0) * path.b[1];
  if (!is_contraction(ma, 1e-8) || !is_contraction(mb, 1e-8))
    throw std::invalid_argument("normal_pair_formula: A_1 + iA_2 must be a contraction");

  std::vector<cplx> coeffs(static_cast<size_t>(f.degree_in(0)) + 1, cplx{});
  for (const auto& [k, c] : f.coeffs()) coeffs[static_cast<size_t>(k[0])] = c;
  auto eval_single = [&](const ComplexMatrix& mmat) {
    ComplexMatrix acc(mmat.dim());
    for (size_t p = 0; p < coeffs.size(); ++p)
      acc = acc + coeffs[p] * mmat.pow(static_cast<int>(p));
    return acc;
  };

  NormalPairResult r;
  const int deg = f.total_degree();
  if (order == 1) {
    r.lhs = trace(eval_single(mb)) - trace(eval_single(ma));
    const auto mus = first_order_measures(path, quad, deg, seed);
    const AnalyticFunction fp = f.partial_derivative(0);
    for (const MeasureAtom& a : mus[0].atoms) {
      const std::vector<cplx> z = {a.point[0] + cplx(0.0, 1.0) * a.point[1]};
      r.rhs += a.weight * fp.eval(z);
    }
    for (const MeasureAtom& a : mus[1].atoms) {
      const std::vector<cplx> z = {a.point[0] + cplx(0.0, 1.0) * a.point[1]};
      r.rhs += cplx(0.0, 1.0) * a.weight * fp.eval(z);
    }
  } else if (order == 2) {
    const ComplexMatrix w = path.v[0] + cplx(0.0, 1.0) * path.v[1];
    ComplexMatrix der(ma.dim());
    for (size_t p = 1; p < coeffs.size(); ++p)
      der = der + coeffs[p] * monomial_derivative(ma, w, static_cast<int>(p), 0.0, 1);
    r.lhs = trace(eval_single(mb)) - trace(eval_single(ma)) - trace(der);

    const auto nus = second_order_measures(path, quad, deg, seed);
    const AnalyticFunction fpp = f.partial_derivative(0).partial_derivative(0);
    auto integrate_c = [&](const DiscreteMeasure& nu) {
      cplx s = 0.0;
      for (const MeasureAtom& a : nu.atoms) {
        const std::vector<cplx> z = {a.point[0] + cplx(0.0, 1.0) * a.point[1]};
        s += a.weight * fpp.eval(z);
      }
      return s;
    };
    r.rhs = integrate_c(nus.at({0, 0})) - integrate_c(nus.at({1, 1})) +
            2.0 * cplx(0.0, 1.0) * integrate_c(nus.at({0, 1}));
  } else {
    throw std::invalid_argument("normal_pair_formula: order must be 1 or 2");
  }
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

/// Pinned-coordinate identity at first order: with V_i = 0,
///   integral g(x_i) dmu_j = trace(g(A_i) V_j).
inline MeasureCheckResult pinned_first_order(const DiscreteMeasure& mu_j,
                                             const AnalyticFunction& g, int i,
                                             const ComplexMatrix& a_i, const ComplexMatrix& v_j) {
  MeasureCheckResult r;
  r.lhs = mu_j.integrate_coordinate(g, i);
  std::vector<cplx> coeffs(static_cast<size_t>(g.degree_in(0)) + 1, cplx{});
  for (const auto& [k, c] : g.coeffs()) coeffs[static_cast<size_t>(k[0])] = c;
  ComplexMatrix gm(a_i.dim());
  for (size_t p = 0; p < coeffs.size(); ++p)
    gm = gm + coeffs[p] * a_i.pow(static_cast<int>(p));
  r.rhs = trace(gm * v_j);
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

/// Pinned-coordinate identity at second order: with V_i = 0,
///   integral g(x_i) dnu_jj = (1/2) trace(g(A_i) V_j^2).
inline MeasureCheckResult pinned_second_order(const DiscreteMeasure& nu_jj,
                                              const AnalyticFunction& g, int i,
                                              const ComplexMatrix& a_i, const ComplexMatrix& v_j) {
  MeasureCheckResult r;
  r.lhs = nu_jj.integrate_coordinate(g, i);
  std::vector<cplx> coeffs(static_cast<size_t>(g.degree_in(0)) + 1, cplx{});
  for (const auto& [k, c] : g.coeffs()) coeffs[static_cast<size_t>(k[0])] = c;
  ComplexMatrix gm(a_i.dim());
  for (size_t p = 0; p < coeffs.size(); ++p)
    gm = gm + coeffs[p] * a_i.pow(static_cast<int>(p));
  r.rhs = 0.5 * trace(gm * (v_j * v_j));
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

}  // namespace opshift
