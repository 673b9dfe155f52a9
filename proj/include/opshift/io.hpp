#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "opshift/analytic_function.hpp"
#include "opshift/complex_matrix.hpp"

namespace opshift {

/// Matrix literal: JSON array of rows, each entry an [re, im] pair.
inline nlohmann::json matrix_to_json(const ComplexMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.dim(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.dim(); ++j)
      row.push_back(nlohmann::json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ComplexMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument("matrix literal: expected a nonempty array of rows");
  std::vector<std::vector<cplx>> rows;
  for (const auto& row : j) {
    if (!row.is_array()) throw std::invalid_argument("matrix literal: row is not an array");
    std::vector<cplx> r;
    for (const auto& e : row) {
      if (!e.is_array() || e.size() != 2)
        throw std::invalid_argument("matrix literal: entry is not an [re, im] pair");
      r.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    rows.push_back(std::move(r));
  }
  return ComplexMatrix::from_rows(rows);
}

/// Function literal: {"domain_kind": ..., "radius": ..., "coeffs":
/// [{"k": [k_1..k_n], "re": ..., "im": ...}, ...]}.
inline nlohmann::json function_to_json(const AnalyticFunction& f) {
  nlohmann::json j;
  j["domain_kind"] = f.domain_kind() == DomainKind::polydisc ? "polydisc" : "real_cube";
  j["radius"] = f.radius();
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [k, c] : f.coeffs()) {
    nlohmann::json t;
    t["k"] = k;
    t["re"] = c.real();
    t["im"] = c.imag();
    terms.push_back(std::move(t));
  }
  j["coeffs"] = std::move(terms);
  return j;
}

inline AnalyticFunction function_from_json(const nlohmann::json& j) {
  const std::string dk = j.value("domain_kind", "polydisc");
  DomainKind domain;
  if (dk == "polydisc") {
    domain = DomainKind::polydisc;
  } else if (dk == "real_cube") {
    domain = DomainKind::real_cube;
  } else {
    throw std::invalid_argument("function literal: unknown domain_kind '" + dk + "'");
  }
  const double radius = j.value("radius", 1.25);
  if (!j.contains("coeffs") || !j["coeffs"].is_array() || j["coeffs"].empty())
    throw std::invalid_argument("function literal: missing coefficient list");

  int arity = -1;
  std::vector<std::pair<std::vector<int>, cplx>> terms;
  for (const auto& t : j["coeffs"]) {
    std::vector<int> k = t.at("k").get<std::vector<int>>();
    if (arity < 0) arity = static_cast<int>(k.size());
    if (static_cast<int>(k.size()) != arity)
      throw std::invalid_argument("function literal: inconsistent multi-index arity");
    terms.emplace_back(std::move(k), cplx(t.value("re", 0.0), t.value("im", 0.0)));
  }
  AnalyticFunction f(arity, domain, radius);
  for (auto& [k, c] : terms) f.add_term(std::move(k), c);
  return f;
}

inline cplx cplx_from_json(const nlohmann::json& j) {
  return cplx(j.at("re").get<double>(), j.at("im").get<double>());
}

inline nlohmann::json cplx_to_json(const cplx& z) {
  nlohmann::json j;
  j["re"] = z.real();
  j["im"] = z.imag();
  return j;
}

}  // namespace opshift
