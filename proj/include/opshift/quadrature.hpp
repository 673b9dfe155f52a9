#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace opshift {

struct QuadratureRule {
  std::vector<double> nodes;    // on [0, 1]
  std::vector<double> weights;  // sum to 1
};

/// Gauss-Legendre rule mapped to [0, 1]; exact for polynomials of degree
/// <= 2n - 1. Nodes from Newton iteration on P_n with the usual cosine
/// initial guesses.
inline QuadratureRule gauss_legendre_01(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_01: need at least one node");
  QuadratureRule rule;
  rule.nodes.resize(static_cast<size_t>(n));
  rule.weights.resize(static_cast<size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Recurrence (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}.
      double p0 = 1.0, p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    // Map [-1,1] -> [0,1]; descending cosine guesses give ascending low end.
    rule.nodes[static_cast<size_t>(i)] = 0.5 * (1.0 - x);
    rule.weights[static_cast<size_t>(i)] = 0.5 * w;
    rule.nodes[static_cast<size_t>(n - 1 - i)] = 0.5 * (1.0 + x);
    rule.weights[static_cast<size_t>(n - 1 - i)] = 0.5 * w;
  }
  return rule;
}

/// Node-count policy for the path integrals: nodes == 0 means "auto-exact",
/// resolved from the maximal total degree of the functions in play so that
/// every integrand (including the (1-t) weight) is integrated exactly.
struct QuadratureSpec {
  int nodes = 0;

  int resolve(int max_total_degree) const {
    if (nodes > 0) return nodes;
    const int m = (max_total_degree + 3) / 2;  // ceil((deg + 2) / 2)
    return m < 1 ? 1 : m;
  }
};

}  // namespace opshift
