#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opshift/config.hpp"
#include "opshift/discrete_measure.hpp"
#include "opshift/io.hpp"

namespace opshift {

/// One verified identity or bound. `pass` means residual <= tolerance, or
/// sum <= bound + tolerance for bound checks; `anchor` names the identity so
/// a failure can be traced to the exact statement it violates.
struct CheckReport {
  std::string check_name;
  std::string anchor;
  cplx lhs = 0.0;
  cplx rhs = 0.0;
  double residual = 0.0;
  std::optional<double> bound;
  double tolerance = 0.0;
  bool pass = false;
  double runtime_ms = 0.0;
  int trial = 0;
  std::string detail;
};

inline nlohmann::json check_to_json(const CheckReport& c) {
  nlohmann::json j;
  j["check_name"] = c.check_name;
  j["anchor"] = c.anchor;
  j["lhs"] = cplx_to_json(c.lhs);
  j["rhs"] = cplx_to_json(c.rhs);
  j["residual"] = c.residual;
  j["bound"] = c.bound.has_value() ? nlohmann::json(*c.bound) : nlohmann::json(nullptr);
  j["tolerance"] = c.tolerance;
  j["pass"] = c.pass;
  j["runtime_ms"] = c.runtime_ms;
  j["trial"] = c.trial;
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

struct SuiteResult {
  nlohmann::json config_echo;
  std::vector<CheckReport> checks;
  std::vector<DiscreteMeasure> measure_dumps;  // first trial's measures
  std::optional<nlohmann::json> dilation_certificate;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

inline constexpr const char* kVersion = "0.1.0";

/// Full report with the timing fields stripped; this is the byte sequence
/// that must be identical across reruns of the same config and seed.
inline nlohmann::json report_json(const SuiteResult& result, bool strip_runtime) {
  nlohmann::json j;
  j["meta"] = {{"tool", "opshift"}, {"version", kVersion}, {"config", result.config_echo}};
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : result.checks) {
    nlohmann::json cj = check_to_json(c);
    if (strip_runtime) cj.erase("runtime_ms");
    checks.push_back(std::move(cj));
  }
  j["checks"] = std::move(checks);
  if (result.dilation_certificate.has_value()) j["dilation"] = *result.dilation_certificate;
  return j;
}

/// FNV-1a over the runtime-stripped serialisation. Output paths are excluded:
/// the hash identifies the experiment and its results, not where they landed.
inline std::string determinism_hash(const SuiteResult& result) {
  nlohmann::json j = report_json(result, true);
  if (j["meta"]["config"].contains("outputs")) j["meta"]["config"].erase("outputs");
  if (j["meta"]["config"].contains("battery"))
    for (auto& e : j["meta"]["config"]["battery"])
      if (e.contains("outputs")) e.erase("outputs");
  const std::string s = j.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace detail {

inline void write_text_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file " + p.string());
  out << content;
  if (!out) throw std::runtime_error("failed while writing " + p.string());
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace detail

/// Measure dump: label, t_node, per-coordinate re/im, weight re/im.
inline std::string measures_to_csv(const std::vector<DiscreteMeasure>& measures) {
  int arity = 0;
  for (const auto& m : measures) arity = std::max(arity, m.arity);
  std::string s = "label,t_node";
  for (int i = 1; i <= arity; ++i)
    s += ",lambda_" + std::to_string(i) + "_re,lambda_" + std::to_string(i) + "_im";
  s += ",weight_re,weight_im\n";
  for (const auto& m : measures) {
    for (const auto& a : m.atoms) {
      s += m.label + "," + detail::format_double(a.t_node);
      for (int i = 0; i < arity; ++i) {
        if (i < m.arity) {
          s += "," + detail::format_double(a.point[static_cast<size_t>(i)].real()) + "," +
               detail::format_double(a.point[static_cast<size_t>(i)].imag());
        } else {
          s += ",,";
        }
      }
      s += "," + detail::format_double(a.weight.real()) + "," +
           detail::format_double(a.weight.imag()) + "\n";
    }
  }
  return s;
}

inline std::string checks_to_csv(const std::vector<CheckReport>& checks) {
  std::string s =
      "check_name,anchor,trial,lhs_re,lhs_im,rhs_re,rhs_im,residual,bound,tolerance,pass,"
      "runtime_ms\n";
  for (const auto& c : checks) {
    s += c.check_name + "," + c.anchor + "," + std::to_string(c.trial) + "," +
         detail::format_double(c.lhs.real()) + "," + detail::format_double(c.lhs.imag()) + "," +
         detail::format_double(c.rhs.real()) + "," + detail::format_double(c.rhs.imag()) + "," +
         detail::format_double(c.residual) + "," +
         (c.bound.has_value() ? detail::format_double(*c.bound) : std::string()) + "," +
         detail::format_double(c.tolerance) + "," + (c.pass ? "true" : "false") + "," +
         detail::format_double(c.runtime_ms) + "\n";
  }
  return s;
}

/// Writes report.json (always) plus checks.csv / measures.csv when CSV output
/// is requested. Returns the process exit code: 0 all pass, 1 any failure.
/// Empty check lists and unwritable paths throw; callers map those to exit
/// code 2.
inline int emit_report(const SuiteResult& result, const std::string& out_dir, bool csv) {
  if (result.checks.empty()) throw std::invalid_argument("emit_report: empty check list");
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("emit_report: cannot create output directory " + out_dir);

  nlohmann::json j = report_json(result, false);
  j["meta"]["determinism_hash"] = determinism_hash(result);
  detail::write_text_file(dir / "report.json", j.dump(2) + "\n");
  if (csv) {
    detail::write_text_file(dir / "checks.csv", checks_to_csv(result.checks));
    if (!result.measure_dumps.empty())
      detail::write_text_file(dir / "measures.csv", measures_to_csv(result.measure_dumps));
  }
  return result.all_pass() ? 0 : 1;
}

}  // namespace opshift
