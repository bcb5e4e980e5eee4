#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "odsim/environment.h"
#include "odsim/learner.h"
#include "odsim/metrics.h"
#include "odsim/spec_engine.h"

namespace odsim {

struct KPolicy {
  bool dynamic = false;
  int window = 50;
  int k_max = 16;
};

struct ExperimentConfig {
  std::string name;
  EnvConfig env;
  SpecConfig spec;
  KPolicy k_policy;
  LearnerConfig learner;
  double alpha = 0.05;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "runs";
};

// Strict parse: unknown keys and out-of-range values raise ConfigError naming
// the field path (e.g. "learner.eta").
ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunResult {
  std::uint64_t seed = 0;
  std::string learner;
  std::string regime;
  std::vector<RoundRecord> records;
  RunSummary summary;
  nlohmann::json learner_state;
};

// One seed of an experiment, entirely in memory. Deterministic in
// (cfg, seed, init_state).
RunResult simulate_run(const ExperimentConfig& cfg, std::uint64_t seed,
                       const std::optional<nlohmann::json>& init_state = {});

inline constexpr const char* kCsvHeader =
    "t,learner,regime,seed,k_used,n_accepted,emitted,acc_true,tv,kl,loss,"
    "comparator_loss,regret_cum,gamma_accepted_cum,gamma_emitted_cum,"
    "sim_wallclock_cum";

std::string records_csv(const RunResult& run, double alpha);

// Shortest round-trip decimal form; the CSV and JSON writers both use it.
std::string format_double(double value);

std::string version_string();

// Per-seed run directory name inside output_dir.
std::string run_dir_name(const ExperimentConfig& cfg, std::uint64_t seed);

// Runs every seed (in parallel over `jobs` threads) and writes
// <output_dir>/<run>/rounds.csv, summary.json and learner_state.json. Each
// run directory is written under a temporary name and renamed into place.
std::vector<RunSummary> run_experiment(
    const ExperimentConfig& cfg, int jobs,
    const std::optional<nlohmann::json>& init_state = {});

struct SweepEntry {
  std::string name;
  nlohmann::json config;
  std::vector<RunSummary> runs;
  std::vector<std::string> failures;
};

// Runs all (config, seed) pairs in parallel, then aggregates mean and std
// per config into <out_dir>/sweep_summary.json. A failing run is recorded
// and does not stop its siblings.
std::vector<SweepEntry> run_sweep(std::span<const ExperimentConfig> configs,
                                  int jobs, const std::filesystem::path& out_dir);

nlohmann::json sweep_table(std::span<const SweepEntry> entries);

// Collects every summary.json under `dir` into a table.
nlohmann::json collect_report(const std::filesystem::path& dir);

}  // namespace odsim
