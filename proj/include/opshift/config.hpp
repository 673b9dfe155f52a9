#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "opshift/analytic_function.hpp"
#include "opshift/io.hpp"
#include "opshift/quadrature.hpp"

namespace opshift {

enum class InstanceMode {
  normal_shared_basis,
  selfadjoint_shared_basis,
  single_contraction,
  counterexample,
  custom,
};

inline std::string mode_name(InstanceMode m) {
  switch (m) {
    case InstanceMode::normal_shared_basis: return "normal_shared_basis";
    case InstanceMode::selfadjoint_shared_basis: return "selfadjoint_shared_basis";
    case InstanceMode::single_contraction: return "single_contraction";
    case InstanceMode::counterexample: return "counterexample";
    case InstanceMode::custom: return "custom";
  }
  throw std::logic_error("mode_name: bad mode");
}

inline InstanceMode mode_from_name(const std::string& s) {
  if (s == "normal_shared_basis") return InstanceMode::normal_shared_basis;
  if (s == "selfadjoint_shared_basis") return InstanceMode::selfadjoint_shared_basis;
  if (s == "single_contraction") return InstanceMode::single_contraction;
  if (s == "counterexample") return InstanceMode::counterexample;
  if (s == "custom") return InstanceMode::custom;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

/// Every tolerance used anywhere in the suite, keyed by the identity anchor
/// that consumes it. All are recorded verbatim in the report.
inline std::map<std::string, double> default_tolerances() {
  return {
      {"chain", 1e-10},      {"tf", 1e-9},         {"mutau", 1e-10},
      {"min_pad", 1e-8},     {"tf2", 1e-8},        {"nutau", 1e-10},
      {"nin_pad", 1e-8},     {"ftc", 1e-10},       {"remr2", 1e-10},
      {"hij1", 1e-11},       {"pdest_pad", 1e-8},  {"pd2est_pad", 1e-8},
      {"connection1", 1e-9}, {"connection2", 1e-9},{"vn_margin", 1e-8},
      {"dilation", 1e-12},   {"m2v_slack", 1e-9},  {"counterexample", 1e-10},
      {"con", 1e-8},         {"con2", 1e-8},       {"mondif", 1e-11},
      {"fd_first", 1e-6},    {"fd_second", 1e-5},  {"pathperturb", 1e-10},
      {"arem1", 1e-8},       {"arem2", 1e-8},
  };
}

/// One self-contained experiment description. The seed determines every
/// random draw, including per-trial functions when none are listed.
struct ExperimentConfig {
  uint64_t seed = 42;
  int n = 2;
  int dim = 5;
  InstanceMode mode = InstanceMode::normal_shared_basis;
  int trials = 20;
  std::vector<AnalyticFunction> functions;  // empty: random per trial
  int random_function_count = 3;
  int random_function_degree = 4;
  QuadratureSpec quadrature;
  std::map<std::string, double> tolerances = default_tolerances();
  int vn_grid = 0;  // 0: auto (256 for n <= 2, 64 above)
  std::string out_dir = "out";
  std::vector<ComplexMatrix> custom_a, custom_b;  // mode == custom

  int resolved_vn_grid() const { return vn_grid > 0 ? vn_grid : (n <= 2 ? 256 : 64); }

  double tol(const std::string& key) const {
    const auto it = tolerances.find(key);
    if (it == tolerances.end()) throw std::invalid_argument("unknown tolerance key '" + key + "'");
    return it->second;
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.seed = j.value("seed", static_cast<uint64_t>(42));
    c.n = j.value("n", 2);
    c.dim = j.value("dim", 5);
    c.mode = mode_from_name(j.value("mode", std::string("normal_shared_basis")));
    c.trials = j.value("trials", 20);
    if (c.n < 1 || c.dim < 1 || c.trials < 1)
      throw std::invalid_argument("config: n, dim and trials must be positive");
    if (j.contains("functions"))
      for (const auto& fj : j["functions"]) c.functions.push_back(function_from_json(fj));
    if (j.contains("random_functions")) {
      c.random_function_count = j["random_functions"].value("count", 3);
      c.random_function_degree = j["random_functions"].value("degree", 4);
    }
    if (j.contains("quadrature")) c.quadrature.nodes = j["quadrature"].value("nodes", 0);
    if (j.contains("tolerances"))
      for (const auto& [k, v] : j["tolerances"].items()) {
        if (c.tolerances.find(k) == c.tolerances.end())
          throw std::invalid_argument("config: unknown tolerance key '" + k + "'");
        c.tolerances[k] = v.get<double>();
      }
    c.vn_grid = j.value("vn_grid", 0);
    if (j.contains("outputs")) c.out_dir = j["outputs"].value("dir", std::string("out"));
    if (c.mode == InstanceMode::custom) {
      if (!j.contains("custom") || !j["custom"].contains("A") || !j["custom"].contains("B"))
        throw std::invalid_argument("config: custom mode requires explicit A and B matrix lists");
      for (const auto& mj : j["custom"]["A"]) c.custom_a.push_back(matrix_from_json(mj));
      for (const auto& mj : j["custom"]["B"]) c.custom_b.push_back(matrix_from_json(mj));
      if (c.custom_a.size() != c.custom_b.size() || c.custom_a.empty())
        throw std::invalid_argument("config: custom A and B must be nonempty lists of equal length");
      c.n = static_cast<int>(c.custom_a.size());
      c.dim = c.custom_a.front().dim();
    }
    if (c.mode == InstanceMode::counterexample) {
      c.n = 2;
      c.dim = 2;
    }
    if (c.mode == InstanceMode::single_contraction) c.n = 1;
    for (const auto& f : c.functions)
      if (f.arity() != c.n)
        throw std::invalid_argument("config: function arity " + std::to_string(f.arity()) +
                                    " does not match n = " + std::to_string(c.n));
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["n"] = n;
    j["dim"] = dim;
    j["mode"] = mode_name(mode);
    j["trials"] = trials;
    if (!functions.empty()) {
      nlohmann::json fs = nlohmann::json::array();
      for (const auto& f : functions) fs.push_back(function_to_json(f));
      j["functions"] = std::move(fs);
    } else {
      j["random_functions"] = {{"count", random_function_count},
                               {"degree", random_function_degree}};
    }
    j["quadrature"] = {{"nodes", quadrature.nodes}};
    j["tolerances"] = tolerances;
    j["vn_grid"] = vn_grid;
    j["outputs"] = {{"dir", out_dir}};
    if (mode == InstanceMode::custom) {
      nlohmann::json a = nlohmann::json::array(), b = nlohmann::json::array();
      for (const auto& m : custom_a) a.push_back(matrix_to_json(m));
      for (const auto& m : custom_b) b.push_back(matrix_to_json(m));
      j["custom"] = {{"A", std::move(a)}, {"B", std::move(b)}};
    }
    return j;
  }
};

}  // namespace opshift
