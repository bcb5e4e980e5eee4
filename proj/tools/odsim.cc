// Command-line front end: run, sweep, validate, report.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "odsim/errors.h"
#include "odsim/parallel.h"
#include "odsim/runner.h"
#include "odsim/validation.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitValidation = 2;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw odsim::ConfigError(path, "cannot open file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw odsim::ConfigError(path, ex.what());
  }
}

void print_summary(const std::string& label, const odsim::RunSummary& s) {
  std::printf("%-28s T=%ld regret=%.4f P_T=%.4f accepted=%ld emitted=%ld "
              "gamma_acc=%.4f gamma_emit=%.4f\n",
              label.c_str(), s.T, s.regret, s.path_length, s.accepted_total,
              s.emitted_total, s.gamma_accepted, s.gamma_emitted);
}

int cmd_run(const std::string& config_path, const std::string& init_path, int jobs) {
  const odsim::ExperimentConfig cfg = odsim::load_config(config_path);
  std::optional<nlohmann::json> init;
  if (!init_path.empty()) init = read_json(init_path);
  const auto summaries = odsim::run_experiment(cfg, jobs, init);
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    print_summary(odsim::run_dir_name(cfg, cfg.seeds[i]), summaries[i]);
  }
  std::printf("wrote %zu run(s) under %s\n", summaries.size(), cfg.output_dir.c_str());
  return kExitOk;
}

int cmd_sweep(const std::string& path, const std::string& out_dir, int jobs) {
  const nlohmann::json j = read_json(path);
  if (!j.is_array() || j.empty()) {
    throw odsim::ConfigError(path, "expected a nonempty array of configurations");
  }
  std::vector<odsim::ExperimentConfig> configs;
  for (std::size_t i = 0; i < j.size(); ++i) {
    try {
      configs.push_back(odsim::parse_config(j[i]));
    } catch (const odsim::ConfigError& ex) {
      throw odsim::ConfigError("[" + std::to_string(i) + "]." + ex.path(),
                               std::string(ex.what()).substr(ex.path().size() + 2));
    }
  }
  const auto entries = odsim::run_sweep(configs, jobs, out_dir);
  bool failed = false;
  for (const auto& e : entries) {
    std::printf("%-28s runs=%zu failures=%zu\n", e.name.c_str(), e.runs.size(),
                e.failures.size());
    for (const auto& f : e.failures) std::printf("  failed: %s\n", f.c_str());
    failed = failed || !e.failures.empty();
  }
  std::printf("wrote %s\n", (std::filesystem::path(out_dir) / "sweep_summary.json").c_str());
  return failed ? kExitError : kExitOk;
}

int cmd_validate(bool quick, int jobs) {
  bool all = true;
  int count = 0;
  for (const odsim::validation::Check& c : odsim::validation::all_checks()) {
    if (quick && !c.quick) continue;
    ++count;
  }
  // Checks stream as they finish; run_checks would hold output until the end.
  int failed = 0;
  for (const odsim::validation::Check& c : odsim::validation::all_checks()) {
    if (quick && !c.quick) continue;
    odsim::validation::CheckResult r;
    const auto start = std::chrono::steady_clock::now();
    try {
      r = c.run(jobs);
    } catch (const std::exception& ex) {
      r = {c.name, false, 0.0, "no exception", ex.what(), 0.0};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << odsim::validation::format_result(r) << std::endl;
    all = all && r.passed;
    failed += r.passed ? 0 : 1;
  }
  std::cout << (all ? "all " : "") << count - failed << "/" << count << " checks passed\n";
  return all ? kExitOk : kExitValidation;
}

int cmd_report(const std::string& dir, bool as_json) {
  const nlohmann::json report = odsim::collect_report(dir);
  if (as_json) {
    std::cout << report.dump(2) << "\n";
    return kExitOk;
  }
  std::printf("%-12s %-11s %5s %14s %14s %14s\n", "learner", "regime", "runs", "regret",
              "gamma_acc", "gamma_emit");
  for (const auto& g : report.at("groups")) {
    const auto& m = g.at("metrics");
    auto cell = [&](const char* key) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.4f+-%.4f", m.at(key).at("mean").get<double>(),
                    m.at(key).at("std").get<double>());
      return std::string(buf);
    };
    std::printf("%-12s %-11s %5zu %14s %14s %14s\n",
                g.at("learner").get<std::string>().c_str(),
                g.at("regime").get<std::string>().c_str(), g.at("runs").get<std::size_t>(),
                cell("regret").c_str(), cell("gamma_accepted").c_str(),
                cell("gamma_emitted").c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speculative decoding simulator with online-learned draft models"};
  app.set_version_flag("--version", odsim::version_string());
  app.require_subcommand(1);
  int jobs = odsim::max_threads();
  app.add_option("--jobs,-j", jobs, "Worker threads")->check(CLI::PositiveNumber);

  std::string config_path, init_path;
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", config_path, "Experiment JSON")->required();
  run->add_option("--init-state", init_path, "Learner state JSON to start from");

  std::string sweep_path, sweep_out = "sweep";
  auto* sweep = app.add_subcommand("sweep", "Run a list of experiment configs");
  sweep->add_option("configs", sweep_path, "JSON array of experiment configs")->required();
  sweep->add_option("--out", sweep_out, "Output directory");

  bool quick = false;
  auto* validate = app.add_subcommand("validate", "Run the theory validation suite");
  validate->add_flag("--quick", quick, "Exact and deterministic checks only");

  std::string report_dir;
  bool as_json = false;
  auto* report = app.add_subcommand("report", "Summarize finished runs");
  report->add_option("dir", report_dir, "Directory of runs")->required();
  report->add_flag("--json", as_json, "Print the full JSON report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, init_path, jobs);
    if (*sweep) return cmd_sweep(sweep_path, sweep_out, jobs);
    if (*validate) return cmd_validate(quick, jobs);
    if (*report) return cmd_report(report_dir, as_json);
  } catch (const odsim::ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kExitError;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
