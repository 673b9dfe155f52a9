// Command-line front end: runs the verification battery over generated or
// user-supplied instances and writes JSON/CSV reports.
//
// Exit codes: 0 all checks passed, 1 at least one check failed, 2 config or
// usage error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "opshift/config.hpp"
#include "opshift/report.hpp"
#include "opshift/suite.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string format = "json";
  int64_t seed = -1;
};

void attach_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON experiment config");
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--format", args.format, "report format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
}

opshift::ExperimentConfig load_config(const CommonArgs& args,
                                      opshift::InstanceMode default_mode) {
  opshift::ExperimentConfig cfg;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw std::invalid_argument("cannot open config file " + args.config_path);
    nlohmann::json j;
    in >> j;
    cfg = opshift::ExperimentConfig::from_json(j);
  } else {
    cfg.mode = default_mode;
    if (default_mode == opshift::InstanceMode::single_contraction) cfg.n = 1;
    if (default_mode == opshift::InstanceMode::counterexample) {
      cfg.n = 2;
      cfg.dim = 2;
      cfg.trials = 1;
    }
  }
  if (args.seed >= 0) cfg.seed = static_cast<uint64_t>(args.seed);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

int finish(const opshift::SuiteResult& result, const opshift::ExperimentConfig& cfg,
           const CommonArgs& args) {
  const int code = opshift::emit_report(result, cfg.out_dir, args.format == "csv");
  int failed = 0;
  for (const auto& c : result.checks)
    if (!c.pass) ++failed;
  std::cout << result.checks.size() << " checks, " << failed << " failed; report in "
            << cfg.out_dir << "/report.json\n";
  if (failed > 0) {
    for (const auto& c : result.checks)
      if (!c.pass)
        std::cout << "  FAIL " << c.check_name << " [" << c.anchor << "] trial " << c.trial
                  << " residual " << c.residual << " tolerance " << c.tolerance
                  << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for multivariate operator trace formulas"};
  app.require_subcommand(1);

  CommonArgs verify_args, ce_args, dil_args, suite_args;

  CLI::App* verify = app.add_subcommand("verify", "run one order of the trace-formula battery");
  verify->require_subcommand(1);
  CLI::App* first = verify->add_subcommand("first-order", "first-order formulas and bounds");
  CLI::App* second = verify->add_subcommand("second-order", "second-order formulas and bounds");
  attach_common(first, verify_args);
  attach_common(second, verify_args);

  CLI::App* ce = app.add_subcommand("counterexample", "the fixed 2x2 instance where the "
                                                      "single-variable reduction fails");
  attach_common(ce, ce_args);

  CLI::App* dil = app.add_subcommand("dilation", "unitary power dilation certificates");
  attach_common(dil, dil_args);

  CLI::App* suite = app.add_subcommand("suite", "full battery over all built-in modes");
  attach_common(suite, suite_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    using opshift::CheckSet;
    using opshift::InstanceMode;

    if (first->parsed() || second->parsed()) {
      const auto cfg = load_config(verify_args, InstanceMode::normal_shared_basis);
      const CheckSet set = first->parsed() ? CheckSet::first_order : CheckSet::second_order;
      return finish(opshift::run_suite(cfg, set), cfg, verify_args);
    }
    if (ce->parsed()) {
      auto cfg = load_config(ce_args, InstanceMode::counterexample);
      return finish(opshift::run_suite(cfg, CheckSet::all), cfg, ce_args);
    }
    if (dil->parsed()) {
      auto cfg = load_config(dil_args, InstanceMode::single_contraction);
      return finish(opshift::run_suite(cfg, CheckSet::all), cfg, dil_args);
    }
    if (suite->parsed()) {
      if (!suite_args.config_path.empty()) {
        const auto cfg = load_config(suite_args, InstanceMode::normal_shared_basis);
        return finish(opshift::run_suite(cfg, CheckSet::all), cfg, suite_args);
      }
      // Built-in battery: every mode once, merged into one report. This is
      // the run that exercises every identity anchor.
      opshift::ExperimentConfig base;
      if (suite_args.seed >= 0) base.seed = static_cast<uint64_t>(suite_args.seed);
      if (!suite_args.out_dir.empty()) base.out_dir = suite_args.out_dir;

      opshift::SuiteResult merged;
      nlohmann::json echos = nlohmann::json::array();
      const std::pair<InstanceMode, int> runs[] = {
          {InstanceMode::normal_shared_basis, 2},
          {InstanceMode::selfadjoint_shared_basis, 2},
          {InstanceMode::single_contraction, 1},
          {InstanceMode::counterexample, 2},
      };
      for (const auto& [mode, n] : runs) {
        opshift::ExperimentConfig cfg = base;
        cfg.mode = mode;
        cfg.n = n;
        cfg.dim = mode == InstanceMode::counterexample ? 2 : 5;
        cfg.trials = mode == InstanceMode::counterexample ? 1 : 5;
        const auto r = opshift::run_suite(cfg, CheckSet::all);
        echos.push_back(r.config_echo);
        for (const auto& c : r.checks) merged.checks.push_back(c);
        for (const auto& m : r.measure_dumps) merged.measure_dumps.push_back(m);
        if (r.dilation_certificate.has_value() && !merged.dilation_certificate.has_value())
          merged.dilation_certificate = r.dilation_certificate;
      }
      merged.config_echo = {{"battery", std::move(echos)}};
      opshift::ExperimentConfig out_cfg = base;
      return finish(merged, out_cfg, suite_args);
    }
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
