#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <future>
#include <thread>

#include "opshift/dilation.hpp"
#include "opshift/divided_differences.hpp"
#include "opshift/generators.hpp"
#include "opshift/report.hpp"
#include "opshift/spectral_shift.hpp"

namespace opshift {

/// Which slices of the battery to run; `suite` runs everything applicable to
/// the instance mode.
enum class CheckSet : unsigned {
  first_order = 1u,
  second_order = 2u,
  dilation = 4u,
  counterexample = 8u,
  all = 15u,
};

inline bool has(CheckSet set, CheckSet bit) {
  return (static_cast<unsigned>(set) & static_cast<unsigned>(bit)) != 0;
}

namespace detail {

template <typename Fn>
void add_check(std::vector<CheckReport>& out, std::string name, std::string anchor, int trial,
               Fn&& fn) {
  CheckReport c;
  c.check_name = std::move(name);
  c.anchor = std::move(anchor);
  c.trial = trial;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    fn(c);
  } catch (const std::exception& e) {
    c.pass = false;
    c.detail = e.what();
  }
  c.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  out.push_back(std::move(c));
}

inline void identity_check(CheckReport& c, cplx lhs, cplx rhs, double rel_tol) {
  c.lhs = lhs;
  c.rhs = rhs;
  c.residual = std::abs(lhs - rhs);
  c.tolerance = rel_tol * std::max({1.0, std::abs(lhs), std::abs(rhs)});
  c.pass = c.residual <= c.tolerance;
}

inline void bound_check(CheckReport& c, double sum, double bound, double pad) {
  c.lhs = sum;
  c.rhs = bound;
  c.bound = bound;
  c.residual = std::max(0.0, sum - bound);
  c.tolerance = pad;
  c.pass = c.residual <= c.tolerance;
}

inline ComplexMatrix eval_along_path(const AnalyticFunction& f, const PathSpec& path, double t) {
  std::vector<ComplexMatrix> mats;
  for (int j = 0; j < path.n(); ++j)
    mats.push_back(path.a[j] + cplx(t, 0.0) * path.v[static_cast<size_t>(j)]);
  return eval_ordered(f, mats);
}

struct TrialOutput {
  std::vector<CheckReport> checks;
  std::vector<DiscreteMeasure> measures;
  std::optional<nlohmann::json> dilation_cert;
};

inline int partials_grid(int n) { return n <= 2 ? 128 : 24; }

/// A-priori bound on the r-th s-derivative of s -> f(X~(s)):
/// sum_k |c_k| (|k|)_r Vmax^r Xmax^{|k|-r}. The finite-difference truncation
/// term is controlled by this quantity, so folding it into the tolerance
/// scale makes the accuracy checks sound even when the lower derivative
/// happens to nearly cancel.
inline double path_derivative_bound(const AnalyticFunction& f, const PathSpec& path, int r) {
  double vmax = 0.0, xmax = 1.0;
  for (int j = 0; j < path.n(); ++j) {
    vmax = std::max(vmax, op_norm(path.v[static_cast<size_t>(j)]));
    xmax = std::max({xmax, op_norm(path.a[j]), op_norm(path.b[j])});
  }
  double s = 0.0;
  for (const auto& [k, c] : f.coeffs()) {
    int deg = 0;
    for (int e : k) deg += e;
    double falling = 1.0;
    for (int i = 0; i < r; ++i) falling *= std::max(0, deg - i);
    s += std::abs(c) * falling * std::pow(vmax, r) * std::pow(xmax, std::max(0, deg - r));
  }
  return s;
}

/// Finite-difference order and accuracy checks for the derivative formulas.
inline void derivative_fd_checks(std::vector<CheckReport>& out, const ExperimentConfig& cfg,
                                 const PathSpec& path, const AnalyticFunction& f, int trial) {
  const double t = 0.5;
  const DerivativeReport d1 = first_derivative(f, path, t);
  const DerivativeReport d2 = second_derivative(f, path, t);
  // Central-difference truncation at step h is h^2/6 (first order) resp.
  // h^2/12 (second order) times the next-but-one derivative; the bounds give
  // the checks guaranteed slack of at least 2x.
  const double s1 = std::max({1.0, d1.value.frobenius_norm(),
                              path_derivative_bound(f, path, 3) / 300.0});
  const double s2 = std::max({1.0, d2.value.frobenius_norm(),
                              path_derivative_bound(f, path, 4) / 90.0});

  auto fd1_err = [&](double h) {
    const ComplexMatrix fd = cplx(1.0 / (2.0 * h), 0.0) *
                             (eval_along_path(f, path, t + h) - eval_along_path(f, path, t - h));
    return (fd - d1.value).frobenius_norm();
  };
  auto fd2_err = [&](double h) {
    const ComplexMatrix fd =
        cplx(1.0 / (h * h), 0.0) * (eval_along_path(f, path, t + h) -
                                    2.0 * eval_along_path(f, path, t) +
                                    eval_along_path(f, path, t - h));
    return (fd - d2.value).frobenius_norm();
  };

  add_check(out, "derivative_fd_first_abs", "dfla", trial, [&](CheckReport& c) {
    c.residual = fd1_err(1e-4);
    c.tolerance = cfg.tol("fd_first") * s1;
    c.pass = c.residual <= c.tolerance;
  });
  add_check(out, "derivative_fd_first_order", "dfla", trial, [&](CheckReport& c) {
    const double e1 = fd1_err(1e-3), e2 = fd1_err(5e-4);
    // Ratio approximately 4 under halving; skip when already at the rounding
    // floor, where the order test is meaningless.
    if (e1 <= 1e-11 * s1) {
      c.residual = 0.0;
      c.detail = "error at rounding floor";
    } else {
      const double ratio = e1 / std::max(e2, 1e-300);
      c.lhs = ratio;
      c.rhs = 4.0;
      c.residual = std::max(0.0, std::max(2.0 - ratio, ratio - 6.0));
    }
    c.tolerance = 0.0;
    c.pass = c.residual <= c.tolerance;
  });
  add_check(out, "derivative_fd_second_abs", "d2fla", trial, [&](CheckReport& c) {
    c.residual = fd2_err(1e-3);
    c.tolerance = cfg.tol("fd_second") * s2;
    c.pass = c.residual <= c.tolerance;
  });
  add_check(out, "derivative_fd_second_order", "d2fla", trial, [&](CheckReport& c) {
    const double e1 = fd2_err(2e-3), e2 = fd2_err(1e-3);
    if (e1 <= 1e-9 * s2) {
      c.residual = 0.0;
      c.detail = "error at rounding floor";
    } else {
      const double ratio = e1 / std::max(e2, 1e-300);
      c.lhs = ratio;
      c.rhs = 4.0;
      c.residual = std::max(0.0, std::max(2.0 - ratio, ratio - 6.0));
    }
    c.tolerance = 0.0;
    c.pass = c.residual <= c.tolerance;
  });
}

/// Monomial split/derivative identities on the first path coordinate.
inline void monomial_checks(std::vector<CheckReport>& out, const ExperimentConfig& cfg,
                            const PathSpec& path, int trial, SplitMix64& rng) {
  const ComplexMatrix& h0 = path.a[0];
  const ComplexMatrix& v = path.v[0];

  add_check(out, "monomial_difference_split", "mondif", trial, [&](CheckReport& c) {
    // Exact split identity; exercised up to high powers.
    const int ps = 4 + static_cast<int>(rng.next_u64() % 9);  // 4..12
    const ComplexMatrix direct = (h0 + v).pow(ps) - h0.pow(ps);
    const ComplexMatrix split = monomial_difference(h0, v, ps);
    const double scale = std::max(1.0, op_norm(direct));
    c.residual = op_norm(direct - split);
    c.tolerance = cfg.tol("mondif") * scale;
    c.pass = c.residual <= c.tolerance;
    c.detail = "p=" + std::to_string(ps);
  });

  // Finite-difference comparisons stay at moderate powers where the h^2
  // truncation term is well inside the pinned tolerances.
  const int p = 4 + static_cast<int>(rng.next_u64() % 3);  // 4..6

  const double t = rng.next_double();
  const double vmax = op_norm(v);
  const double xmax = std::max({1.0, op_norm(h0), op_norm(h0 + v)});
  auto dbound = [&](int r) {
    double falling = 1.0;
    for (int i = 0; i < r; ++i) falling *= std::max(0, p - i);
    return falling * std::pow(vmax, r) * std::pow(xmax, std::max(0, p - r));
  };
  add_check(out, "monomial_derivative_fd", "monder", trial, [&](CheckReport& c) {
    const double h = 1e-4;
    const ComplexMatrix ex = monomial_derivative(h0, v, p, t, 1);
    const ComplexMatrix fd = cplx(1.0 / (2.0 * h), 0.0) *
                             ((h0 + cplx(t + h, 0.0) * v).pow(p) - (h0 + cplx(t - h, 0.0) * v).pow(p));
    c.residual = op_norm(fd - ex);
    c.tolerance = cfg.tol("fd_first") * std::max({1.0, op_norm(ex), dbound(3) / 300.0});
    c.pass = c.residual <= c.tolerance;
  });
  add_check(out, "monomial_second_derivative_fd", "monder2", trial, [&](CheckReport& c) {
    const double h = 5e-4;
    const ComplexMatrix ex = monomial_derivative(h0, v, p, t, 2);
    const ComplexMatrix fd =
        cplx(1.0 / (h * h), 0.0) *
        ((h0 + cplx(t + h, 0.0) * v).pow(p) - 2.0 * (h0 + cplx(t, 0.0) * v).pow(p) +
         (h0 + cplx(t - h, 0.0) * v).pow(p));
    c.residual = op_norm(fd - ex);
    c.tolerance = cfg.tol("fd_second") * std::max({1.0, op_norm(ex), dbound(4) / 360.0});
    c.pass = c.residual <= c.tolerance;
  });
}

/// Divided-difference layer checks on scalar data drawn from the instance.
inline void divided_difference_checks(std::vector<CheckReport>& out, const ExperimentConfig& cfg,
                                      const AnalyticFunction& f, int trial, SplitMix64& rng) {
  // All base points and shifted points must stay inside the closed unit disc
  // (resp. [-1,1]); the sup bounds quantify over the domain only.
  const int n = f.arity();
  std::vector<cplx> z(static_cast<size_t>(n));
  const bool real = f.domain_kind() == DomainKind::real_cube;
  for (auto& v : z) v = cplx(rng.next_in(-0.5, 0.5), real ? 0.0 : rng.next_in(-0.35, 0.35));
  const cplx h1(rng.next_in(0.05, 0.2), real ? 0.0 : rng.next_in(-0.1, 0.1));
  const cplx h2(rng.next_in(0.05, 0.2), real ? 0.0 : rng.next_in(-0.1, 0.1));
  const int j = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(n));

  add_check(out, "divided_difference_bound", "ddder", trial, [&](CheckReport& c) {
    // |f(..., [l0, l1, l2], ...)| <= sup |d2f/dz_j^2| / 2 + pad.
    const std::vector<cplx> pts = {z[static_cast<size_t>(j)] + h1,
                                   z[static_cast<size_t>(j)] + h2, z[static_cast<size_t>(j)]};
    const cplx dd = partial_divided_difference(f, j, pts, z);
    const auto sup = f.partial_derivative(j).partial_derivative(j).sup_norm_estimate(64);
    bound_check(c, std::abs(dd), sup.upper() / 2.0, 1e-9);
  });

  add_check(out, "confluent_expansion", "lemma4.1", trial, [&](CheckReport& c) {
    const std::vector<cplx> pts = {z[static_cast<size_t>(j)] + h1,
                                   z[static_cast<size_t>(j)] + h1, z[static_cast<size_t>(j)]};
    identity_check(c, confluent_pair_expansion(f, j, z, h1),
                   partial_divided_difference(f, j, pts, z), 1e-11);
  });

  if (n >= 2) {
    const int i2 = (j + 1) % n;
    const std::vector<std::pair<int, cplx>> steps = {{std::min(j, i2), h1}, {std::max(j, i2), h2}};
    add_check(out, "mixed_expansion", "lemma4.1", trial, [&](CheckReport& c) {
      identity_check(c, mixed_difference_expansion(f, std::min(j, i2), std::max(j, i2), z, h1, h2),
                     delta_operator(f, steps, z), 1e-11);
    });
    add_check(out, "difference_box_integral", "boxs1", trial, [&](CheckReport& c) {
      const AnalyticFunction mixed =
          f.partial_derivative(std::min(j, i2)).partial_derivative(std::max(j, i2));
      const int m = QuadratureSpec{}.resolve(f.total_degree());
      const QuadratureRule rule = gauss_legendre_01(m);
      cplx rhs = 0.0;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          std::vector<cplx> arg = z;
          arg[static_cast<size_t>(std::min(j, i2))] += rule.nodes[static_cast<size_t>(a)] * h1;
          arg[static_cast<size_t>(std::max(j, i2))] += rule.nodes[static_cast<size_t>(b)] * h2;
          rhs += rule.weights[static_cast<size_t>(a)] * rule.weights[static_cast<size_t>(b)] *
                 mixed.eval(arg);
        }
      identity_check(c, delta_operator(f, steps, z), rhs, 1e-9);
    });
    add_check(out, "difference_box_bound", "boxs2", trial, [&](CheckReport& c) {
      const AnalyticFunction mixed =
          f.partial_derivative(std::min(j, i2)).partial_derivative(std::max(j, i2));
      const auto sup = mixed.sup_norm_estimate(64);
      bound_check(c, std::abs(delta_operator(f, steps, z)), sup.upper(), 1e-9);
    });
  }
  (void)cfg;
}

inline void counterexample_checks(std::vector<CheckReport>& out, const ExperimentConfig& cfg,
                                  const Instance& inst, int trial) {
  const AnalyticFunction& f = inst.functions.front();
  add_check(out, "counterexample_second_derivative", "counterexample", trial, [&](CheckReport& c) {
    c.lhs = trace(second_derivative(f, inst.path, 0.0).value);
    c.rhs = 4.0;
    c.residual = std::abs(c.lhs - c.rhs);
    c.tolerance = cfg.tol("counterexample");
    c.pass = c.residual <= c.tolerance;
  });
  add_check(out, "counterexample_naive_chain", "counterexample", trial, [&](CheckReport& c) {
    const AnalyticFunction df1 = f.partial_derivative(0);
    c.lhs = trace(first_derivative(df1, inst.path, 0.0).value * inst.path.v[0]);
    c.rhs = 3.0;
    c.residual = std::abs(c.lhs - c.rhs);
    c.tolerance = cfg.tol("counterexample");
    c.pass = c.residual <= c.tolerance;
  });
  add_check(out, "counterexample_gap", "counterexample", trial, [&](CheckReport& c) {
    const cplx t2 = trace(second_derivative(f, inst.path, 0.0).value);
    const cplx naive = trace(first_derivative(f.partial_derivative(0), inst.path, 0.0).value *
                             inst.path.v[0]);
    identity_check(c, t2 - naive, 1.0, cfg.tol("counterexample"));
  });
  add_check(out, "chain_rule_at_zero", "chain", trial, [&](CheckReport& c) {
    const auto r = chain_rule_trace(f, inst.path, 0.0);
    c.lhs = r.lhs;
    cplx sum = 0.0;
    for (const cplx& v : r.per_coordinate) sum += v;
    c.rhs = sum;
    c.residual = r.residual;
    c.tolerance = cfg.tol("chain") * std::max(1.0, std::abs(r.lhs));
    c.pass = c.residual <= c.tolerance;
  });
}

inline TrialOutput run_trial(const ExperimentConfig& cfg, CheckSet set, int trial) {
  TrialOutput out;
  const Instance inst = generate_instance(cfg, trial);
  const PathSpec& path = inst.path;
  SplitMix64 rng(derive_seed(cfg.seed, 0xC0FFEEull + static_cast<uint64_t>(trial)));

  int maxdeg = 1;
  for (const auto& f : inst.functions) maxdeg = std::max(maxdeg, f.total_degree());
  const int nodes = cfg.quadrature.resolve(maxdeg);
  const QuadratureRule rule = gauss_legendre_01(nodes);

  // Path structure checks run in every mode.
  add_check(out.checks, "path_equivalence", "pathperturb", trial, [&](CheckReport& c) {
    const auto rep = path_commutativity(path.a, path.b, 5, cfg.tol("pathperturb"),
                                        derive_seed(cfg.seed, 0x9A7Bull + static_cast<uint64_t>(trial)));
    c.lhs = rep.equiv_i ? 1.0 : 0.0;
    c.rhs = rep.equiv_ii ? 1.0 : 0.0;
    c.residual = std::abs(c.lhs - c.rhs);
    c.tolerance = 0.0;
    c.pass = rep.equiv_i == rep.equiv_ii;
    c.detail = rep.equiv_i ? "commuting path" : "non-commuting path";
  });
  add_check(out.checks, "hij_expansion", "hij1", trial, [&](CheckReport& c) {
    const auto rep = path_commutativity(path.a, path.b, 5, cfg.tol("pathperturb"),
                                        derive_seed(cfg.seed, 0x9A7Cull + static_cast<uint64_t>(trial)));
    c.residual = rep.hij_identity_residual;
    double scale = 1.0;
    for (int j = 0; j < path.n(); ++j)
      scale = std::max(scale, std::max(op_norm(path.a[j]), op_norm(path.b[j])));
    c.tolerance = cfg.tol("hij1") * scale * scale;
    c.pass = c.residual <= c.tolerance;
  });

  if (inst.mode == InstanceMode::counterexample) {
    if (has(set, CheckSet::counterexample)) counterexample_checks(out.checks, cfg, inst, trial);
    // The derivative calculus and the scalar-calculus trace identities do not
    // need commutativity; run them here too.
    for (const auto& f : inst.functions) {
      add_check(out.checks, "ftc_trace", "ftc", trial, [&](CheckReport& c) {
        const auto r = ftc_trace(f, path, cfg.quadrature);
        identity_check(c, r.lhs, r.rhs, cfg.tol("ftc"));
      });
      add_check(out.checks, "taylor_remainder", "remr2", trial, [&](CheckReport& c) {
        const auto r = taylor_remainder_trace(f, path, cfg.quadrature);
        identity_check(c, r.lhs, r.rhs, cfg.tol("remr2"));
      });
      derivative_fd_checks(out.checks, cfg, path, f, trial);
    }
    return out;
  }

  // Measures need the whole path normal, not just the endpoints: a pair of
  // unitaries, say, has non-normal convex combinations. One interior probe
  // catches that; a linear path with normal endpoints and a normal midpoint
  // is normal throughout (the normality defect is quadratic in t).
  const bool measures_applicable =
      path.path_commuting && path.endpoints_admissible && path.a.flags().normal &&
      path.b.flags().normal && path.at(0.5).flags().normal;
  const bool selfadjoint_pair = path.n() == 2 && path.a.flags().selfadjoint &&
                                path.b.flags().selfadjoint && measures_applicable;

  // Scalar-calculus identities and derivative checks, one set per function.
  for (const auto& f : inst.functions) {
    // Sup-norm based statements quantify over the torus for general
    // contractions and over the cube only for self-adjoint paths; a cube
    // function on a non-self-adjoint instance has no valid bound to check.
    const bool domain_ok = f.domain_kind() == DomainKind::polydisc ||
                           (path.a.flags().selfadjoint && path.b.flags().selfadjoint);

    add_check(out.checks, "ftc_trace", "ftc", trial, [&](CheckReport& c) {
      const auto r = ftc_trace(f, path, cfg.quadrature);
      identity_check(c, r.lhs, r.rhs, cfg.tol("ftc"));
    });
    add_check(out.checks, "taylor_remainder", "remr2", trial, [&](CheckReport& c) {
      const auto r = taylor_remainder_trace(f, path, cfg.quadrature);
      identity_check(c, r.lhs, r.rhs, cfg.tol("remr2"));
    });
    derivative_fd_checks(out.checks, cfg, path, f, trial);

    // Chain rule and the first/second order trace bounds at every node.
    std::vector<AnalyticFunction::SupEstimate> sup1(static_cast<size_t>(path.n()));
    std::map<std::pair<int, int>, AnalyticFunction::SupEstimate> sup2;
    if (domain_ok) {
      for (int j = 0; j < path.n(); ++j)
        sup1[static_cast<size_t>(j)] =
            f.partial_derivative(j).sup_norm_estimate(partials_grid(path.n()));
      if (has(set, CheckSet::second_order))
        for (int i = 0; i < path.n(); ++i)
          for (int j = i; j < path.n(); ++j)
            sup2[{i, j}] = f.partial_derivative(i).partial_derivative(j).sup_norm_estimate(
                partials_grid(path.n()));
    }

    std::vector<double> s1norm(static_cast<size_t>(path.n())), s2norm(static_cast<size_t>(path.n())),
        reim(static_cast<size_t>(path.n()));
    for (int j = 0; j < path.n(); ++j) {
      s1norm[static_cast<size_t>(j)] = schatten_norm(path.v[static_cast<size_t>(j)], 1.0);
      s2norm[static_cast<size_t>(j)] = schatten_norm(path.v[static_cast<size_t>(j)], 2.0);
      reim[static_cast<size_t>(j)] = trace_abs_re_im(path.v[static_cast<size_t>(j)]);
    }

    for (int q = 0; q < nodes; ++q) {
      const double t = rule.nodes[static_cast<size_t>(q)];
      add_check(out.checks, "chain_rule", "chain", trial, [&](CheckReport& c) {
        const auto r = chain_rule_trace(f, path, t);
        c.lhs = r.lhs;
        cplx sum = 0.0;
        for (const cplx& v : r.per_coordinate) sum += v;
        c.rhs = sum;
        c.residual = r.residual;
        c.tolerance = cfg.tol("chain") * std::max(1.0, std::abs(r.lhs));
        c.pass = c.residual <= c.tolerance;
        c.detail = "t=" + std::to_string(t);
      });

      const OperatorTuple xt = path.at(t);
      for (int j = 0; j < path.n() && domain_ok; ++j) {
        add_check(out.checks, "first_order_term_bound", "pdest", trial, [&](CheckReport& c) {
          const cplx term = trace(path.v[static_cast<size_t>(j)] *
                                  eval_function(f.partial_derivative(j), xt));
          const double min_branch =
              std::min(s1norm[static_cast<size_t>(j)], reim[static_cast<size_t>(j)]);
          bound_check(c, std::abs(term), min_branch * sup1[static_cast<size_t>(j)].upper(),
                      cfg.tol("pdest_pad"));
        });
      }
      if (domain_ok && has(set, CheckSet::second_order)) {
        const DerivativeReport d2 = second_derivative(f, path, t);
        for (const auto& [key, block] : d2.per_term) {
          const auto& [i, j] = key;
          add_check(out.checks, "second_order_term_bound", "pd2est", trial, [&](CheckReport& c) {
            bound_check(c, std::abs(trace(block)),
                        s2norm[static_cast<size_t>(i)] * s2norm[static_cast<size_t>(j)] *
                            sup2.at({i, j}).upper(),
                        cfg.tol("pd2est_pad"));
            c.detail = "i=" + std::to_string(i + 1) + ",j=" + std::to_string(j + 1);
          });
        }
      }
    }

    // von Neumann margin at the left endpoint.
    if (domain_ok) {
      add_check(out.checks, "von_neumann", "vNineq", trial, [&](CheckReport& c) {
        std::optional<DilationCertificate> cert;
        if (inst.mode == InstanceMode::single_contraction)
          cert = schaffer_dilation(path.a[0], std::max(1, f.total_degree())).second;
        const auto r = von_neumann_check(path.a, f, cfg.resolved_vn_grid(), cert);
        bound_check(c, r.op_value, r.sup_value, cfg.tol("vn_margin"));
        c.detail = r.certified ? "certified" : "unverified hypothesis";
      });
    }
  }

  monomial_checks(out.checks, cfg, path, trial, rng);
  divided_difference_checks(out.checks, cfg, inst.functions.front(), trial, rng);

  // Measure pipeline.
  if (measures_applicable && has(set, CheckSet::first_order)) {
    std::vector<DiscreteMeasure> mus;
    add_check(out.checks, "first_order_measures", "tf", trial, [&](CheckReport& c) {
      mus = first_order_measures(path, cfg.quadrature, maxdeg,
                                 derive_seed(cfg.seed, 0x31ull + static_cast<uint64_t>(trial)));
      c.pass = true;
      c.detail = "constructed " + std::to_string(mus.size()) + " measures";
    });
    if (!mus.empty()) {
      for (const auto& f : inst.functions) {
        add_check(out.checks, "first_order_trace_formula", "tf", trial, [&](CheckReport& c) {
          const auto r = verify_first_order(f, path, mus);
          identity_check(c, r.lhs, r.rhs, cfg.tol("tf"));
        });
      }
      for (int j = 0; j < path.n(); ++j) {
        const auto& mu = mus[static_cast<size_t>(j)];
        add_check(out.checks, "first_order_mass", "mutau", trial, [&](CheckReport& c) {
          identity_check(c, mu.total_mass(), trace(path.v[static_cast<size_t>(j)]),
                         cfg.tol("mutau"));
          c.detail = mu.label;
        });
        add_check(out.checks, "first_order_variation", "min", trial, [&](CheckReport& c) {
          const double bound = std::min(schatten_norm(path.v[static_cast<size_t>(j)], 1.0),
                                        trace_abs_re_im(path.v[static_cast<size_t>(j)]));
          bound_check(c, mu.total_variation(), bound, cfg.tol("min_pad"));
          c.detail = mu.label;
        });
        // Marginal against an independent single-coordinate run.
        add_check(out.checks, "marginal_first_order", "connection1", trial, [&](CheckReport& c) {
          const PathSpec pj = PathSpec::make(OperatorTuple::certify({path.a[j]}),
                                             OperatorTuple::certify({path.b[j]}));
          const auto mu1 =
              first_order_measures(pj, QuadratureSpec{nodes}, maxdeg,
                                   derive_seed(cfg.seed, 0x32ull + static_cast<uint64_t>(trial)));
          double worst = 0.0;
          cplx wl = 0.0, wr = 0.0;
          for (int rep = 0; rep < 20; ++rep) {
            std::vector<cplx> gc(5);
            for (auto& cc : gc)
              cc = cplx(rng.next_in(-1.0, 1.0),
                        path.a.flags().selfadjoint ? 0.0 : rng.next_in(-1.0, 1.0));
            const AnalyticFunction g = AnalyticFunction::univariate(gc);
            const cplx l = mu.integrate_coordinate(g, j);
            const cplx r2 = mu1[0].integrate(g);
            const double resid =
                std::abs(l - r2) / std::max({1.0, std::abs(l), std::abs(r2)});
            if (resid > worst) {
              worst = resid;
              wl = l;
              wr = r2;
            }
          }
          c.lhs = wl;
          c.rhs = wr;
          c.residual = worst;
          c.tolerance = cfg.tol("connection1");
          c.pass = worst <= c.tolerance;
          c.detail = mu.label + " vs independent pair run, 20 test polynomials";
        });
      }
      if (trial == 0)
        for (const auto& mu : mus) out.measures.push_back(mu);
    }
  }

  if (measures_applicable && has(set, CheckSet::second_order)) {
    std::map<std::pair<int, int>, DiscreteMeasure> nus;
    add_check(out.checks, "second_order_measures", "tf2", trial, [&](CheckReport& c) {
      nus = second_order_measures(path, cfg.quadrature, maxdeg,
                                  derive_seed(cfg.seed, 0x33ull + static_cast<uint64_t>(trial)));
      c.pass = true;
      c.detail = "constructed " + std::to_string(nus.size()) + " measures";
    });
    if (!nus.empty()) {
      for (const auto& f : inst.functions) {
        add_check(out.checks, "second_order_trace_formula", "tf2", trial, [&](CheckReport& c) {
          const auto r = verify_second_order(f, path, nus);
          identity_check(c, r.lhs, r.rhs, cfg.tol("tf2"));
        });
      }
      for (const auto& [key, nu] : nus) {
        const auto& [i, j] = key;
        add_check(out.checks, "second_order_mass", "nutau", trial, [&](CheckReport& c) {
          identity_check(c, nu.total_mass(),
                         0.5 * trace(path.v[static_cast<size_t>(i)] * path.v[static_cast<size_t>(j)]),
                         cfg.tol("nutau"));
          c.detail = nu.label;
        });
        add_check(out.checks, "second_order_variation", "nin", trial, [&](CheckReport& c) {
          bound_check(c, nu.total_variation(),
                      0.5 * schatten_norm(path.v[static_cast<size_t>(i)], 2.0) *
                          schatten_norm(path.v[static_cast<size_t>(j)], 2.0),
                      cfg.tol("nin_pad"));
          c.detail = nu.label;
        });
      }
      for (int j = 0; j < path.n(); ++j) {
        add_check(out.checks, "marginal_second_order", "connection2", trial, [&](CheckReport& c) {
          const PathSpec pj = PathSpec::make(OperatorTuple::certify({path.a[j]}),
                                             OperatorTuple::certify({path.b[j]}));
          const auto nu1 =
              second_order_measures(pj, QuadratureSpec{nodes}, maxdeg,
                                    derive_seed(cfg.seed, 0x34ull + static_cast<uint64_t>(trial)));
          const auto& nujj = nus.at({j, j});
          double worst = 0.0;
          cplx wl = 0.0, wr = 0.0;
          for (int rep = 0; rep < 20; ++rep) {
            std::vector<cplx> gc(5);
            for (auto& cc : gc)
              cc = cplx(rng.next_in(-1.0, 1.0),
                        path.a.flags().selfadjoint ? 0.0 : rng.next_in(-1.0, 1.0));
            const AnalyticFunction g = AnalyticFunction::univariate(gc);
            const cplx l = nujj.integrate_coordinate(g, j);
            const cplx r2 = nu1.at({0, 0}).integrate(g);
            const double resid =
                std::abs(l - r2) / std::max({1.0, std::abs(l), std::abs(r2)});
            if (resid > worst) {
              worst = resid;
              wl = l;
              wr = r2;
            }
          }
          c.lhs = wl;
          c.rhs = wr;
          c.residual = worst;
          c.tolerance = cfg.tol("connection2");
          c.pass = worst <= c.tolerance;
          c.detail = nujj.label + " vs independent pair run, 20 test polynomials";
        });
      }
      if (trial == 0)
        for (const auto& [key, nu] : nus) out.measures.push_back(nu);
    }
  }

  // Partition bounds at the left endpoint's joint spectrum.
  if (measures_applicable) {
    add_check(out.checks, "partition_bound_first", "m2v_i", trial, [&](CheckReport& c) {
      const JointSpectrum js =
          joint_diagonalize(path.a, 1e-8, derive_seed(cfg.seed, 0x35ull + static_cast<uint64_t>(trial)));
      const auto r = partition_trace_bound(js, path.v[0]);
      bound_check(c, r.sum, r.bound, cfg.tol("m2v_slack"));
    });
    add_check(out.checks, "partition_bound_second", "m2v_ii", trial, [&](CheckReport& c) {
      const JointSpectrum js =
          joint_diagonalize(path.a, 1e-8, derive_seed(cfg.seed, 0x36ull + static_cast<uint64_t>(trial)));
      const auto r = partition_trace_bound(js, path.v[0],
                                           path.v[static_cast<size_t>(path.n() - 1)]);
      bound_check(c, r.sum, r.bound, cfg.tol("m2v_slack"));
    });
  }

  // Normal-pair statements for self-adjoint pairs inside the unit disc.
  if (selfadjoint_pair && has(set, CheckSet::first_order)) {
    std::vector<cplx> fc(5);
    for (auto& cc : fc) cc = cplx(rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0));
    const AnalyticFunction fu = AnalyticFunction::univariate(fc);
    add_check(out.checks, "normal_pair_first_order", "arem1", trial, [&](CheckReport& c) {
      const auto r = normal_pair_formula(path, fu, 1, cfg.quadrature,
                                         derive_seed(cfg.seed, 0x37ull + static_cast<uint64_t>(trial)));
      identity_check(c, r.lhs, r.rhs, cfg.tol("arem1"));
    });
    if (has(set, CheckSet::second_order)) {
      add_check(out.checks, "normal_pair_second_order", "arem2", trial, [&](CheckReport& c) {
        const auto r = normal_pair_formula(path, fu, 2, cfg.quadrature,
                                           derive_seed(cfg.seed, 0x38ull + static_cast<uint64_t>(trial)));
        identity_check(c, r.lhs, r.rhs, cfg.tol("arem2"));
      });
    }

    // Pinned-coordinate identities on a dedicated instance with V_2 = 0 and
    // eigenvalue pairs kept inside the disc.
    add_check(out.checks, "pinned_first_order", "con", trial, [&](CheckReport& c) {
      SplitMix64 prng(derive_seed(cfg.seed, 0x39ull + static_cast<uint64_t>(trial)));
      const ComplexMatrix q = detail::haar_like_unitary(path.dim(), prng);
      auto diag_in = [&]() {
        std::vector<cplx> v(static_cast<size_t>(path.dim()));
        for (auto& xv : v) xv = cplx(prng.next_in(-0.7, 0.7), 0.0);
        return q * ComplexMatrix::diagonal(v) * q.adjoint();
      };
      const ComplexMatrix a1 = diag_in(), a2 = diag_in(), b1 = diag_in();
      const PathSpec pp = PathSpec::make(OperatorTuple::certify({a1, a2}),
                                         OperatorTuple::certify({b1, a2}));
      const auto mus = first_order_measures(pp, cfg.quadrature, 6,
                                            derive_seed(cfg.seed, 0x3Aull + static_cast<uint64_t>(trial)));
      std::vector<cplx> gc(4);
      for (auto& cc : gc) cc = cplx(prng.next_in(-1.0, 1.0), 0.0);
      const auto r = pinned_first_order(mus[0], AnalyticFunction::univariate(gc), 1, a2, pp.v[0]);
      identity_check(c, r.lhs, r.rhs, cfg.tol("con"));
    });
    if (has(set, CheckSet::second_order)) {
      add_check(out.checks, "pinned_second_order", "con2", trial, [&](CheckReport& c) {
        SplitMix64 prng(derive_seed(cfg.seed, 0x3Bull + static_cast<uint64_t>(trial)));
        const ComplexMatrix q = detail::haar_like_unitary(path.dim(), prng);
        auto diag_in = [&]() {
          std::vector<cplx> v(static_cast<size_t>(path.dim()));
          for (auto& xv : v) xv = cplx(prng.next_in(-0.7, 0.7), 0.0);
          return q * ComplexMatrix::diagonal(v) * q.adjoint();
        };
        const ComplexMatrix a1 = diag_in(), a2 = diag_in(), b1 = diag_in();
        const PathSpec pp = PathSpec::make(OperatorTuple::certify({a1, a2}),
                                           OperatorTuple::certify({b1, a2}));
        const auto nus = second_order_measures(pp, cfg.quadrature, 6,
                                               derive_seed(cfg.seed, 0x3Cull + static_cast<uint64_t>(trial)));
        std::vector<cplx> gc(4);
        for (auto& cc : gc) cc = cplx(prng.next_in(-1.0, 1.0), 0.0);
        const auto r =
            pinned_second_order(nus.at({0, 0}), AnalyticFunction::univariate(gc), 1, a2, pp.v[0]);
        identity_check(c, r.lhs, r.rhs, cfg.tol("con2"));
      });
    }
  }

  // Dilation certificates for single contractions.
  if (inst.mode == InstanceMode::single_contraction && has(set, CheckSet::dilation)) {
    add_check(out.checks, "dilation_certificate", "dilfla", trial, [&](CheckReport& c) {
      const int deg = 1 + static_cast<int>(rng.next_u64() % 6);
      const auto [u, cert] = schaffer_dilation(path.a[0], deg);
      c.lhs = cert.unitarity_residual;
      c.rhs = cert.compression_residual;
      c.residual = std::max(cert.unitarity_residual, cert.compression_residual);
      c.tolerance = cfg.tol("dilation");
      c.pass = c.residual <= c.tolerance;
      c.detail = "degree=" + std::to_string(deg);
      if (trial == 0) {
        nlohmann::json cj;
        cj["base_dim"] = cert.base_dim;
        cj["dilated_dim"] = cert.dilated_dim;
        cj["degree"] = cert.degree;
        cj["unitarity_residual"] = cert.unitarity_residual;
        cj["compression_residual"] = cert.compression_residual;
        out.dilation_cert = cj;
      }
    });
    add_check(out.checks, "dilation_corruption_detected", "dilfla", trial, [&](CheckReport& c) {
      const int deg = 3;
      auto [u, cert0] = schaffer_dilation(path.a[0], deg);
      u(1, 0) += cplx(1e-3, 0.0);
      const auto cert = verify_dilation(path.a, OperatorTuple::certify({u}),
                                        first_block_embedding(path.dim(), u.dim()), deg);
      c.lhs = cert.compression_residual;
      c.rhs = 1e-4;
      c.pass = cert.compression_residual >= 1e-4;
      c.residual = c.pass ? 0.0 : 1e-4 - cert.compression_residual;
      c.tolerance = 0.0;
      c.detail = "perturbed one entry by 1e-3";
    });
  }

  return out;
}

}  // namespace detail

inline int suite_thread_cap() {
  if (const char* env = std::getenv("OPSHIFT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs the battery over all trials. Trials are independent, seeded up front,
/// and may execute concurrently (capped by OPSHIFT_THREADS); results are
/// assembled in trial order so reports are deterministic for a fixed config
/// and seed.
inline SuiteResult run_suite(const ExperimentConfig& cfg, CheckSet set = CheckSet::all) {
  SuiteResult result;
  result.config_echo = cfg.to_json();

  std::vector<detail::TrialOutput> outputs(static_cast<size_t>(cfg.trials));
  const int cap = std::min(suite_thread_cap(), cfg.trials);
  if (cap <= 1) {
    for (int t = 0; t < cfg.trials; ++t) outputs[static_cast<size_t>(t)] = detail::run_trial(cfg, set, t);
  } else {
    std::vector<std::future<void>> futs;
    std::atomic<int> next{0};
    for (int w = 0; w < cap; ++w) {
      futs.push_back(std::async(std::launch::async, [&]() {
        for (;;) {
          const int t = next.fetch_add(1);
          if (t >= cfg.trials) return;
          outputs[static_cast<size_t>(t)] = detail::run_trial(cfg, set, t);
        }
      }));
    }
    for (auto& f : futs) f.get();
  }

  for (auto& o : outputs) {
    for (auto& c : o.checks) result.checks.push_back(std::move(c));
    for (auto& m : o.measures) result.measure_dumps.push_back(std::move(m));
    if (o.dilation_cert.has_value() && !result.dilation_certificate.has_value())
      result.dilation_certificate = o.dilation_cert;
  }
  return result;
}

}  // namespace opshift
