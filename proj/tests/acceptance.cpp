// Acceptance suite: every criterion the build must meet, one line of output
// per criterion, nonzero exit on any failure. All tolerances are pinned here,
// in code; nothing is calibrated at runtime.

#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "opshift/dilation.hpp"
#include "opshift/generators.hpp"
#include "opshift/report.hpp"
#include "opshift/spectral_shift.hpp"
#include "opshift/suite.hpp"

using namespace opshift;

namespace {

struct Outcome {
  bool pass = true;
  double worst = 0.0;     // worst residual or slack seen
  int checked = 0;        // how many comparisons ran
  std::string note;

  void fold(bool ok, double value) {
    pass = pass && ok;
    worst = std::max(worst, value);
    ++checked;
  }
};

ComplexMatrix random_matrix(SplitMix64& rng, int d, double scale = 1.0) {
  ComplexMatrix m(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      m(i, j) = scale * cplx(rng.next_gaussian(), rng.next_gaussian());
  return m;
}

ComplexMatrix random_hermitian_contraction(SplitMix64& rng, int d, double shrink = 0.9) {
  ComplexMatrix g = random_matrix(rng, d);
  ComplexMatrix h = hermitian_part(g);
  return cplx(shrink / std::max(1.0, op_norm(h)), 0.0) * h;
}

/// Shared-eigenbasis commuting path, normal or self-adjoint entries.
PathSpec shared_basis_path(SplitMix64& rng, int n, int d, bool selfadjoint) {
  ComplexMatrix g = random_matrix(rng, d);
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
  auto draw = [&]() {
    std::vector<cplx> diag(static_cast<size_t>(d));
    for (auto& v : diag) {
      if (selfadjoint) {
        v = cplx(rng.next_in(-1.0, 1.0), 0.0);
      } else {
        const double r = std::sqrt(rng.next_double());
        const double th = rng.next_in(0.0, 2.0 * std::numbers::pi);
        v = cplx(r * std::cos(th), r * std::sin(th));
      }
    }
    return g * ComplexMatrix::diagonal(diag) * g.adjoint();
  };
  std::vector<ComplexMatrix> a, b;
  for (int i = 0; i < n; ++i) {
    a.push_back(draw());
    b.push_back(draw());
  }
  return PathSpec::make(OperatorTuple::certify(std::move(a)), OperatorTuple::certify(std::move(b)));
}

AnalyticFunction random_poly(SplitMix64& rng, int arity, int maxdeg, bool real, int terms = 8) {
  AnalyticFunction f(arity, real ? DomainKind::real_cube : DomainKind::polydisc);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> k(static_cast<size_t>(arity));
    int budget = maxdeg;
    for (int j = 0; j < arity; ++j) {
      const int e = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(budget + 1));
      k[static_cast<size_t>(j)] = e;
      budget -= e;
    }
    f.add_term(std::move(k), cplx(rng.next_in(-1.0, 1.0), real ? 0.0 : rng.next_in(-1.0, 1.0)));
  }
  if (f.is_zero()) f.add_term(std::vector<int>(static_cast<size_t>(arity), 0), 1.0);
  return f;
}

double rel_scale(cplx lhs, cplx rhs) { return std::max({1.0, std::abs(lhs), std::abs(rhs)}); }

// --- criteria -------------------------------------------------------------

Outcome criterion_counterexample() {
  Outcome o;
  const ComplexMatrix a = ComplexMatrix::diagonal({1.0, 0.0});
  const ComplexMatrix v = ComplexMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}});
  const PathSpec path =
      PathSpec::make(OperatorTuple::certify({a, a}), OperatorTuple::certify({a + v, a}));
  const AnalyticFunction f = AnalyticFunction::monomial(2, {3, 1}, 1.0);

  const cplx second = trace(second_derivative(f, path, 0.0).value);
  const cplx naive = trace(first_derivative(f.partial_derivative(0), path, 0.0).value * path.v[0]);
  o.fold(std::abs(second - cplx(4.0)) <= 1e-10, std::abs(second - cplx(4.0)));
  o.fold(std::abs(naive - cplx(3.0)) <= 1e-10, std::abs(naive - cplx(3.0)));
  o.fold(std::abs((second - naive) - cplx(1.0)) <= 1e-10, std::abs((second - naive) - cplx(1.0)));
  o.note = "second=4, naive=3, gap=1";
  return o;
}

Outcome criterion_chain_rule() {
  Outcome o;
  SplitMix64 rng(1001);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 3);
    const int d = 3 + static_cast<int>(rng.next_u64() % 4);  // up to 6
    const bool sa = (trial % 2) == 0;
    PathSpec path;
    if (n == 1 && trial % 4 == 1) {
      // Free self-adjoint pair: commuting hypotheses hold vacuously.
      ComplexMatrix x = random_hermitian_contraction(rng, d);
      ComplexMatrix y = random_hermitian_contraction(rng, d);
      path = PathSpec::make(OperatorTuple::certify({x}), OperatorTuple::certify({y}));
    } else {
      path = shared_basis_path(rng, n, d, sa);
    }
    const AnalyticFunction f = random_poly(rng, n, 5, sa);
    const double t = rng.next_double();
    const auto r = chain_rule_trace(f, path, t);
    const double tol = 1e-10 * std::max(1.0, std::abs(r.lhs));
    o.fold(r.residual <= tol, r.residual);
  }
  o.note = "200 instances, n <= 3, d <= 6, degree <= 5";
  return o;
}

Outcome criterion_first_order() {
  Outcome o;
  SplitMix64 rng(1002);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 3);
    const int d = 3 + static_cast<int>(rng.next_u64() % 3);
    const bool sa = (trial % 2) == 0;
    PathSpec path;
    if (n == 1 && trial % 5 == 2) {
      ComplexMatrix x = random_hermitian_contraction(rng, d);
      ComplexMatrix y = random_hermitian_contraction(rng, d);
      path = PathSpec::make(OperatorTuple::certify({x}), OperatorTuple::certify({y}));
    } else {
      path = shared_basis_path(rng, n, d, sa);
    }
    const int maxdeg = 4;
    const auto mus = first_order_measures(path, QuadratureSpec{}, maxdeg, rng.next_u64());
    for (int rep = 0; rep < 3; ++rep) {
      const AnalyticFunction f = random_poly(rng, n, maxdeg, sa);
      const auto r = verify_first_order(f, path, mus);
      o.fold(r.residual <= 1e-9 * rel_scale(r.lhs, r.rhs), r.residual);
    }
    for (int j = 0; j < n; ++j) {
      const auto& mu = mus[static_cast<size_t>(j)];
      const cplx tv = trace(path.v[static_cast<size_t>(j)]);
      o.fold(std::abs(mu.total_mass() - tv) <= 1e-10 * std::max(1.0, std::abs(tv)),
             std::abs(mu.total_mass() - tv));
      const double bound = std::min(schatten_norm(path.v[static_cast<size_t>(j)], 1.0),
                                    trace_abs_re_im(path.v[static_cast<size_t>(j)]));
      o.fold(mu.total_variation() <= bound + 1e-8, mu.total_variation() - bound);
    }
  }
  o.note = "100 instances: trace formula, mass identity, variation bound";
  return o;
}

Outcome criterion_second_order() {
  Outcome o;
  SplitMix64 rng(1003);
  int mixed_exercised = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng.next_u64() % 2);
    const int d = 3 + static_cast<int>(rng.next_u64() % 2);
    bool sa = (trial % 2) == 0;
    PathSpec path;
    if (n == 1 && trial % 5 == 2) {
      ComplexMatrix x = random_hermitian_contraction(rng, d);
      ComplexMatrix y = random_hermitian_contraction(rng, d);
      path = PathSpec::make(OperatorTuple::certify({x}), OperatorTuple::certify({y}));
    } else if (trial % 10 == 4) {
      // Affinely coupled triple: rotating eigenbasis with nonzero cross
      // weights on every pair, the hardest shape for the mixed atoms.
      ComplexMatrix x = random_hermitian_contraction(rng, d, 0.45);
      ComplexMatrix y = random_hermitian_contraction(rng, d, 0.45);
      const ComplexMatrix id = ComplexMatrix::identity(d);
      const double b2 = rng.next_in(-0.4, 0.4), c2 = rng.next_in(-0.4, 0.4);
      const double b3 = rng.next_in(-0.4, 0.4), c3 = rng.next_in(-0.4, 0.4);
      path = PathSpec::make(
          OperatorTuple::certify({x, cplx(0.8, 0.0) * x + cplx(b2, 0.0) * id,
                                  cplx(-0.6, 0.0) * x + cplx(b3, 0.0) * id}),
          OperatorTuple::certify({y, cplx(0.8, 0.0) * y + cplx(c2, 0.0) * id,
                                  cplx(-0.6, 0.0) * y + cplx(c3, 0.0) * id}));
      n = 3;
      sa = true;
    } else {
      path = shared_basis_path(rng, n, d, sa);
    }
    const int maxdeg = 5;
    const auto nus = second_order_measures(path, QuadratureSpec{}, maxdeg, rng.next_u64());
    for (int rep = 0; rep < 3; ++rep) {
      const AnalyticFunction f = random_poly(rng, n, maxdeg, sa);
      const auto r = verify_second_order(f, path, nus);
      o.fold(r.residual <= 1e-8 * rel_scale(r.lhs, r.rhs), r.residual);
    }
    for (const auto& [key, nu] : nus) {
      const auto& [i, j] = key;
      const cplx mass = 0.5 * trace(path.v[static_cast<size_t>(i)] * path.v[static_cast<size_t>(j)]);
      o.fold(std::abs(nu.total_mass() - mass) <= 1e-10 * std::max(1.0, std::abs(mass)),
             std::abs(nu.total_mass() - mass));
      const double bound = 0.5 * schatten_norm(path.v[static_cast<size_t>(i)], 2.0) *
                           schatten_norm(path.v[static_cast<size_t>(j)], 2.0);
      o.fold(nu.total_variation() <= bound + 1e-8, nu.total_variation() - bound);
      if (i != j && nu.total_variation() > 1e-6 &&
          op_norm(path.v[static_cast<size_t>(i)]) > 1e-3 &&
          op_norm(path.v[static_cast<size_t>(j)]) > 1e-3)
        ++mixed_exercised;
    }
  }
  if (mixed_exercised < 10) {
    o.pass = false;
    o.note = "mixed-derivative terms under-exercised";
  } else {
    o.note = "100 instances incl. " + std::to_string(mixed_exercised) +
             " nontrivial mixed measures";
  }
  return o;
}

Outcome criterion_marginals() {
  Outcome o;
  SplitMix64 rng(1004);
  for (int trial = 0; trial < 10; ++trial) {
    const bool sa = (trial % 2) == 0;
    const int n = 2;
    PathSpec path = shared_basis_path(rng, n, 5, sa);
    const int maxdeg = 5;
    const int nodes = QuadratureSpec{}.resolve(maxdeg);
    const auto mus = first_order_measures(path, QuadratureSpec{nodes}, maxdeg, rng.next_u64());
    const auto nus = second_order_measures(path, QuadratureSpec{nodes}, maxdeg, rng.next_u64());
    for (int j = 0; j < n; ++j) {
      const PathSpec pj = PathSpec::make(OperatorTuple::certify({path.a[j]}),
                                         OperatorTuple::certify({path.b[j]}));
      const auto mu1 = first_order_measures(pj, QuadratureSpec{nodes}, maxdeg, rng.next_u64());
      const auto nu1 = second_order_measures(pj, QuadratureSpec{nodes}, maxdeg, rng.next_u64());
      for (int rep = 0; rep < 20; ++rep) {
        std::vector<cplx> gc(5);
        for (auto& c : gc)
          c = cplx(rng.next_in(-1.0, 1.0), sa ? 0.0 : rng.next_in(-1.0, 1.0));
        const AnalyticFunction g = AnalyticFunction::univariate(gc);
        const cplx l1 = mus[static_cast<size_t>(j)].integrate_coordinate(g, j);
        const cplx r1 = mu1[0].integrate(g);
        o.fold(std::abs(l1 - r1) <= 1e-9 * rel_scale(l1, r1), std::abs(l1 - r1));
        const cplx l2 = nus.at({j, j}).integrate_coordinate(g, j);
        const cplx r2 = nu1.at({0, 0}).integrate(g);
        o.fold(std::abs(l2 - r2) <= 1e-9 * rel_scale(l2, r2), std::abs(l2 - r2));
      }
    }
  }
  o.note = "10 instances x 2 coordinates x 20 test polynomials, both orders";
  return o;
}

Outcome criterion_derivative_fd() {
  Outcome o;
  SplitMix64 rng(1005);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 2);
    const bool sa = (trial % 2) == 0;
    const PathSpec path = shared_basis_path(rng, n, 4, sa);
    const AnalyticFunction f = random_poly(rng, n, 5, sa);
    const double t = 0.5;
    const DerivativeReport d1 = first_derivative(f, path, t);
    const DerivativeReport d2 = second_derivative(f, path, t);
    auto along = [&](double s) { return detail::eval_along_path(f, path, s); };

    // First order: halving h twice divides the error by about 4 each time.
    const double s1 = std::max({1.0, d1.value.frobenius_norm(),
                                detail::path_derivative_bound(f, path, 3) / 300.0});
    auto e1 = [&](double h) {
      return (cplx(0.5 / h, 0.0) * (along(t + h) - along(t - h)) - d1.value).frobenius_norm();
    };
    const double e1a = e1(1e-3), e1b = e1(5e-4), e1c = e1(2.5e-4);
    if (e1b > 1e-11 * s1) {
      const double ratio = e1a / std::max(e1b, 1e-300);
      o.fold(ratio >= 2.0 && ratio <= 6.0, std::abs(ratio - 4.0));
    }
    if (e1c > 1e-11 * s1) {
      const double ratio = e1b / std::max(e1c, 1e-300);
      o.fold(ratio >= 2.0 && ratio <= 6.0, std::abs(ratio - 4.0));
    }

    // Second order: two halvings and the absolute bound at h = 1e-3.
    const double s2 = std::max({1.0, d2.value.frobenius_norm(),
                                detail::path_derivative_bound(f, path, 4) / 90.0});
    auto e2 = [&](double h) {
      return (cplx(1.0 / (h * h), 0.0) * (along(t + h) - 2.0 * along(t) + along(t - h)) - d2.value)
          .frobenius_norm();
    };
    const double e2a = e2(4e-3), e2b = e2(2e-3), e2c = e2(1e-3);
    if (e2b > 1e-9 * s2) {
      const double ratio = e2a / std::max(e2b, 1e-300);
      o.fold(ratio >= 2.0 && ratio <= 6.0, std::abs(ratio - 4.0));
    }
    if (e2c > 1e-9 * s2) {
      const double ratio = e2b / std::max(e2c, 1e-300);
      o.fold(ratio >= 2.0 && ratio <= 6.0, std::abs(ratio - 4.0));
    }
    o.fold(e2c <= 1e-5 * s2, e2c / s2);
  }
  o.note = "order-2 ratios in [2,6]; second-order error <= 1e-5*scale at h=1e-3";
  return o;
}

Outcome criterion_ftc_remainder() {
  Outcome o;
  SplitMix64 rng(1006);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 3);
    const bool sa = (trial % 2) == 0;
    const PathSpec path = shared_basis_path(rng, n, 4, sa);
    const AnalyticFunction f = random_poly(rng, n, 5, sa);
    const auto r1 = ftc_trace(f, path, QuadratureSpec{});
    o.fold(r1.nodes_sufficient && r1.residual <= 1e-10 * rel_scale(r1.lhs, r1.rhs), r1.residual);
    const auto r2 = taylor_remainder_trace(f, path, QuadratureSpec{});
    o.fold(r2.nodes_sufficient && r2.residual <= 1e-10 * rel_scale(r2.lhs, r2.rhs), r2.residual);
  }
  o.note = "60 instances at auto-exact node counts";
  return o;
}

Outcome criterion_path_equivalence() {
  Outcome o;
  SplitMix64 rng(1007);
  int adversarial = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 3 + static_cast<int>(rng.next_u64() % 3);
    const int n = 2 + static_cast<int>(rng.next_u64() % 2);
    OperatorTuple a, b;
    if (trial % 4 == 3) {
      // Adversarial: random non-commuting draws.
      std::vector<ComplexMatrix> ma, mb;
      for (int i = 0; i < n; ++i) {
        ma.push_back(random_matrix(rng, d, 0.3));
        mb.push_back(random_matrix(rng, d, 0.3));
      }
      a = OperatorTuple::certify(std::move(ma));
      b = OperatorTuple::certify(std::move(mb));
      ++adversarial;
    } else if (trial % 8 == 1) {
      // Adversarial: commuting perturbations but a non-commuting endpoint.
      const ComplexMatrix a1 = ComplexMatrix::diagonal({1.0, 0.0});
      const ComplexMatrix a2 = ComplexMatrix::diagonal({0.0, 1.0});
      ComplexMatrix bump(2);
      bump(0, 1) = cplx(0.2 + 0.5 * rng.next_double(), 0.0);
      std::vector<ComplexMatrix> ma = {a1, a2};
      std::vector<ComplexMatrix> mb = {a1 + bump, a2};
      while (static_cast<int>(ma.size()) < n) {
        ma.push_back(ComplexMatrix::identity(2));
        mb.push_back(ComplexMatrix::identity(2));
      }
      a = OperatorTuple::certify(std::move(ma));
      b = OperatorTuple::certify(std::move(mb));
      ++adversarial;
    } else {
      const PathSpec p = shared_basis_path(rng, n, d, trial % 2 == 0);
      a = p.a;
      b = p.b;
    }
    const auto rep = path_commutativity(a, b, 5, 1e-10, rng.next_u64());
    o.fold(rep.equiv_i == rep.equiv_ii, rep.equiv_i == rep.equiv_ii ? 0.0 : 1.0);
    o.fold(rep.hij_identity_residual <= 1e-11, rep.hij_identity_residual);
  }
  o.note = "200 instances, " + std::to_string(adversarial) + " adversarial";
  return o;
}

Outcome criterion_divided_difference_stack() {
  Outcome o;
  SplitMix64 rng(1008);
  const QuadratureRule gl32 = gauss_legendre_01(32);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 2);
    const AnalyticFunction f = random_poly(rng, n, 5, false);
    std::vector<cplx> z(static_cast<size_t>(n));
    for (auto& v : z) v = cplx(rng.next_in(-0.5, 0.5), rng.next_in(-0.35, 0.35));
    const cplx h1(rng.next_in(0.05, 0.2), rng.next_in(-0.1, 0.1));
    const cplx h2(rng.next_in(0.05, 0.2), rng.next_in(-0.1, 0.1));
    const int j = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(n));
    const int i2 = (j + 1) % n;
    const int lo = std::min(j, i2), hi = std::max(j, i2);

    // Exact expansion identities.
    {
      const std::vector<cplx> pts = {z[static_cast<size_t>(j)] + h1, z[static_cast<size_t>(j)] + h1,
                                     z[static_cast<size_t>(j)]};
      const cplx lhs = confluent_pair_expansion(f, j, z, h1);
      const cplx rhs = partial_divided_difference(f, j, pts, z);
      o.fold(std::abs(lhs - rhs) <= 1e-11 * rel_scale(lhs, rhs), std::abs(lhs - rhs));
    }
    {
      const std::vector<std::pair<int, cplx>> steps = {{lo, h1}, {hi, h2}};
      const cplx lhs = mixed_difference_expansion(f, lo, hi, z, h1, h2);
      const cplx rhs = delta_operator(f, steps, z);
      o.fold(std::abs(lhs - rhs) <= 1e-11 * rel_scale(lhs, rhs), std::abs(lhs - rhs));
    }

    // Iterated-integral representation of the second-order divided
    // difference via nested Gauss-Legendre over the simplex.
    {
      const std::vector<cplx> pts = {z[static_cast<size_t>(j)] + h1, z[static_cast<size_t>(j)] + h2,
                                     z[static_cast<size_t>(j)]};
      const std::vector<cplx> slice = f.slice_coeffs(j, z);
      const std::vector<cplx> slice2 = differentiate_poly(differentiate_poly(slice));
      cplx integral = 0.0;
      for (int aq = 0; aq < 32; ++aq) {
        const double t1 = gl32.nodes[static_cast<size_t>(aq)];
        cplx inner = 0.0;
        for (int bq = 0; bq < 32; ++bq) {
          const double t2 = t1 * gl32.nodes[static_cast<size_t>(bq)];
          const cplx arg = pts[2] + (pts[1] - pts[2]) * t1 + (pts[0] - pts[1]) * t2;
          inner += gl32.weights[static_cast<size_t>(bq)] * eval_poly(slice2, arg);
        }
        integral += gl32.weights[static_cast<size_t>(aq)] * t1 * inner;
      }
      const cplx dd = partial_divided_difference(f, j, pts, z);
      o.fold(std::abs(dd - integral) <= 1e-9 * rel_scale(dd, integral), std::abs(dd - integral));
    }

    // Box integral representation of the mixed difference.
    {
      const std::vector<std::pair<int, cplx>> steps = {{lo, h1}, {hi, h2}};
      const AnalyticFunction mixed = f.partial_derivative(lo).partial_derivative(hi);
      cplx rhs = 0.0;
      const int m = QuadratureSpec{}.resolve(f.total_degree());
      const QuadratureRule rule = gauss_legendre_01(m);
      for (int aq = 0; aq < m; ++aq)
        for (int bq = 0; bq < m; ++bq) {
          std::vector<cplx> arg = z;
          arg[static_cast<size_t>(lo)] += rule.nodes[static_cast<size_t>(aq)] * h1;
          arg[static_cast<size_t>(hi)] += rule.nodes[static_cast<size_t>(bq)] * h2;
          rhs += rule.weights[static_cast<size_t>(aq)] * rule.weights[static_cast<size_t>(bq)] *
                 mixed.eval(arg);
        }
      const cplx lhs = delta_operator(f, steps, z);
      o.fold(std::abs(lhs - rhs) <= 1e-9 * rel_scale(lhs, rhs), std::abs(lhs - rhs));

      // Box bound with grid pad.
      const auto sup = mixed.sup_norm_estimate(64);
      o.fold(std::abs(lhs) <= sup.upper() + 1e-9, std::abs(lhs) - sup.upper());
    }

    // 1/r! bound for orders r <= 3 on the slice.
    for (int r = 1; r <= 3; ++r) {
      std::vector<cplx> pts(static_cast<size_t>(r) + 1);
      for (auto& p : pts) p = cplx(rng.next_in(-0.5, 0.5), rng.next_in(-0.35, 0.35));
      AnalyticFunction der = f;
      double rfact = 1.0;
      for (int kk = 1; kk <= r; ++kk) {
        der = der.partial_derivative(j);
        rfact *= kk;
      }
      const auto sup = der.sup_norm_estimate(64);
      const cplx dd = partial_divided_difference(f, j, pts, z);
      o.fold(std::abs(dd) <= sup.upper() / rfact + 1e-9, std::abs(dd) - sup.upper() / rfact);
    }
  }
  o.note = "expansions exact to 1e-11; integral representations to 1e-9; bounds padded";
  return o;
}

Outcome criterion_partition_bounds() {
  Outcome o;
  SplitMix64 rng(1009);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 4 + static_cast<int>(rng.next_u64() % 3);
    const PathSpec p = shared_basis_path(rng, 2, d, trial % 2 == 0);
    const JointSpectrum js = joint_diagonalize(p.a, 1e-8, rng.next_u64());
    const ComplexMatrix v = random_matrix(rng, d);
    const ComplexMatrix v2 = random_matrix(rng, d);
    const auto r1 = partition_trace_bound(js, v);
    o.fold(r1.sum <= r1.bound + 1e-9, r1.sum - r1.bound);
    const auto r2 = partition_trace_bound(js, v, v2);
    o.fold(r2.sum <= r2.bound + 1e-9, r2.sum - r2.bound);

    if (trial % 20 == 0) {
      // Equality cases: V a projection from the partition itself.
      const auto e1 = partition_trace_bound(js, js.projections[0]);
      o.fold(std::abs(e1.sum - e1.bound) <= 1e-8 * std::max(1.0, e1.bound),
             std::abs(e1.sum - e1.bound));
      const auto e2 = partition_trace_bound(js, js.projections[0], js.projections[0]);
      o.fold(std::abs(e2.sum - e2.bound) <= 1e-8 * std::max(1.0, e2.bound),
             std::abs(e2.sum - e2.bound));
    }
  }
  o.note = "200 draws, both forms, equality cases attained";
  return o;
}

Outcome criterion_dilation() {
  Outcome o;
  SplitMix64 rng(1010);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 2 + static_cast<int>(rng.next_u64() % 7);  // up to 8
    const int deg = 1 + static_cast<int>(rng.next_u64() % 6);
    ComplexMatrix g = random_matrix(rng, d);
    const double shrink = trial % 3 == 0 ? 1.0 : rng.next_in(0.3, 1.0);
    ComplexMatrix x = cplx(shrink / std::max(1.0, op_norm(g)), 0.0) * g;
    const auto [u, cert] = schaffer_dilation(x, deg);
    o.fold(cert.unitarity_residual <= 1e-12, cert.unitarity_residual);
    o.fold(cert.compression_residual <= 1e-12, cert.compression_residual);

    if (trial % 25 == 0) {
      ComplexMatrix bad = u;
      bad(1, 0) += cplx(1e-3, 0.0);
      const auto vcert = verify_dilation(OperatorTuple::certify({x}), OperatorTuple::certify({bad}),
                                         first_block_embedding(d, bad.dim()), deg);
      const bool detected = vcert.compression_residual >= 1e-4;
      o.fold(detected, detected ? 0.0 : 1e-4 - vcert.compression_residual);
    }
  }
  o.note = "200 contractions, d <= 8, N <= 6; corrupted dilations detected";
  return o;
}

Outcome criterion_von_neumann_and_bounds() {
  Outcome o;
  // Battery of suite runs; every von Neumann margin and every per-node
  // first/second order trace bound must hold.
  const std::tuple<InstanceMode, int, int> runs[] = {
      {InstanceMode::normal_shared_basis, 2, 5},
      {InstanceMode::selfadjoint_shared_basis, 2, 5},
      {InstanceMode::normal_shared_basis, 3, 4},
      {InstanceMode::single_contraction, 1, 5},
  };
  for (const auto& [mode, n, d] : runs) {
    ExperimentConfig cfg;
    cfg.seed = 2024;
    cfg.mode = mode;
    cfg.n = n;
    cfg.dim = d;
    cfg.trials = 4;
    const SuiteResult r = run_suite(cfg);
    int vn = 0, bounds = 0;
    for (const auto& c : r.checks) {
      if (c.anchor == "vNineq") {
        o.fold(c.pass, c.residual);
        ++vn;
      } else if (c.anchor == "pdest" || c.anchor == "pd2est") {
        o.fold(c.pass, c.residual);
        ++bounds;
      }
    }
    if (vn == 0 || bounds == 0) {
      o.pass = false;
      o.note = "missing von Neumann or bound checks in " + mode_name(mode);
    }
  }
  if (o.note.empty())
    o.note = std::to_string(o.checked) + " margins and per-node bounds across 4 suite runs";
  return o;
}

Outcome criterion_determinism() {
  Outcome o;
  ExperimentConfig cfg;
  cfg.seed = 31337;
  cfg.mode = InstanceMode::selfadjoint_shared_basis;
  cfg.n = 2;
  cfg.dim = 4;
  cfg.trials = 3;
  const SuiteResult r1 = run_suite(cfg);
  const SuiteResult r2 = run_suite(cfg);
  const std::string s1 = report_json(r1, true).dump();
  const std::string s2 = report_json(r2, true).dump();
  o.fold(s1 == s2, s1 == s2 ? 0.0 : 1.0);
  o.fold(determinism_hash(r1) == determinism_hash(r2), 0.0);
  o.fold(r1.all_pass(), 0.0);
  o.note = "two runs, byte-identical reports modulo timing fields";
  return o;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> criteria = {
      {1, "counterexample traces", criterion_counterexample},
      {2, "chain rule identity", criterion_chain_rule},
      {3, "first-order trace formula, mass, variation", criterion_first_order},
      {4, "second-order trace formula, mass, variation", criterion_second_order},
      {5, "marginal connections", criterion_marginals},
      {6, "derivative formulas vs finite differences", criterion_derivative_fd},
      {7, "calculus and remainder trace identities", criterion_ftc_remainder},
      {8, "path commutativity equivalence", criterion_path_equivalence},
      {9, "divided-difference stack", criterion_divided_difference_stack},
      {10, "partition trace bounds", criterion_partition_bounds},
      {11, "dilation certificates", criterion_dilation},
      {12, "von Neumann margins and per-node bounds", criterion_von_neumann_and_bounds},
      {13, "determinism", criterion_determinism},
  };

  int failures = 0;
  for (const auto& e : criteria) {
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.note = std::string("exception: ") + ex.what();
    }
    std::printf("%s  %2d  %-48s checks=%-5d worst=%.3e  %s\n", o.pass ? "PASS" : "FAIL", e.id,
                e.name, o.checked, o.worst, o.note.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
