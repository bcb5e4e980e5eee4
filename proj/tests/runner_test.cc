#include "odsim/runner.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "odsim/errors.h"

namespace odsim {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("odsim-test-" + std::to_string(::getpid()) +
                                                 "-" + std::to_string(counter_++))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

ExperimentConfig small(LearnerType type) {
  ExperimentConfig cfg;
  cfg.env.T = 120;
  cfg.env.vocab_size = 6;
  cfg.env.dim = 3;
  cfg.learner.type = type;
  return cfg;
}

TEST(ConfigTest, RoundTrip) {
  ExperimentConfig cfg = small(LearnerType::kEnsemble);
  cfg.name = "x";
  cfg.learner.epsilon = 10.0;
  cfg.k_policy.dynamic = true;
  cfg.seeds = {3, 18446744073709551615ull};
  const nlohmann::json j = config_to_json(cfg);
  EXPECT_EQ(config_to_json(parse_config(j)), j);
}

TEST(ConfigTest, DefaultsFromEmptyObject) {
  const ExperimentConfig cfg = parse_config(nlohmann::json::object());
  EXPECT_EQ(cfg.spec.k, 4);
  EXPECT_EQ(cfg.alpha, 0.05);
  EXPECT_EQ(cfg.env.vocab_size, 16);
  EXPECT_FALSE(cfg.learner.eta.has_value());
}

TEST(ConfigTest, ErrorsNameTheField) {
  auto path_of = [](const nlohmann::json& j) {
    try {
      parse_config(j);
    } catch (const ConfigError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(path_of({{"bogus", 1}}), "bogus");
  EXPECT_EQ(path_of({{"learner", {{"eta", -1.0}}}}), "learner.eta");
  EXPECT_EQ(path_of({{"learner", {{"type", "sgd"}}}}), "learner.type");
  EXPECT_EQ(path_of({{"env", {{"T", 0}}}}), "env.T");
  EXPECT_EQ(path_of({{"env", {{"extra", 0}}}}), "env.extra");
  EXPECT_EQ(path_of({{"spec", {{"k", 65}}}}), "spec.k");
  EXPECT_EQ(path_of({{"seeds", nlohmann::json::array()}}), "seeds");
  EXPECT_EQ(path_of({{"alpha", "fast"}}), "alpha");
}

TEST(SimulateTest, PerfectFrozenDraft) {
  ExperimentConfig cfg = small(LearnerType::kFrozen);
  cfg.learner.frozen_at_comparator = true;
  const RunResult run = simulate_run(cfg, 4);
  EXPECT_NEAR(run.summary.regret, 0.0, 1e-9);
  EXPECT_EQ(run.summary.accepted_total, 4 * 120);
  EXPECT_NEAR(run.summary.gamma_accepted, 4 / (0.05 * 4 + 1), 1e-12);
}

TEST(SimulateTest, RecordsAreConsistent) {
  for (auto t : {LearnerType::kOgd, LearnerType::kOptimistic, LearnerType::kEnsemble,
                 LearnerType::kDpo}) {
    const RunResult run = simulate_run(small(t), 5);
    double kl = 0.0;
    for (const auto& r : run.records) {
      EXPECT_NEAR(r.acc_true, 1.0 - r.tv, 1e-12);
      EXPECT_GE(r.loss, r.comparator_loss - 1e-9);
      EXPECT_EQ(r.emitted, r.n_accepted + 1);
      kl += r.kl;
    }
    EXPECT_NEAR(run.summary.regret, kl, 1e-6);
    EXPECT_EQ(run.summary.emitted_total, run.summary.accepted_total + 120);
  }
}

TEST(SimulateTest, DynamicKStaysInRange) {
  ExperimentConfig cfg = small(LearnerType::kOgd);
  cfg.k_policy.dynamic = true;
  cfg.k_policy.k_max = 7;
  for (const auto& r : simulate_run(cfg, 6).records) {
    EXPECT_GE(r.k_used, 1);
    EXPECT_LE(r.k_used, 7);
  }
}

TEST(SimulateTest, InitStateWarmStarts) {
  const ExperimentConfig cfg = small(LearnerType::kOgd);
  const RunResult first = simulate_run(cfg, 7);
  const RunResult warm = simulate_run(cfg, 7, first.learner_state);
  EXPECT_LT(warm.summary.regret, first.summary.regret);
}

TEST(CsvTest, HeaderAndRows) {
  const ExperimentConfig cfg = small(LearnerType::kOgd);
  const RunResult run = simulate_run(cfg, 8);
  const std::string csv = records_csv(run, cfg.alpha);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCsvHeader);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 15);
  }
  EXPECT_EQ(rows, 120);
  EXPECT_EQ(csv, records_csv(simulate_run(cfg, 8), cfg.alpha));
}

TEST(FormatTest, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(ExperimentTest, WritesRunDirectories) {
  TempDir dir;
  ExperimentConfig cfg = small(LearnerType::kOptimistic);
  cfg.seeds = {1, 2};
  cfg.output_dir = dir.path().string();
  const auto summaries = run_experiment(cfg, 2);
  ASSERT_EQ(summaries.size(), 2u);
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path run = dir.path() / run_dir_name(cfg, seed);
    EXPECT_TRUE(fs::exists(run / "rounds.csv"));
    EXPECT_TRUE(fs::exists(run / "learner_state.json"));
    const auto summary = nlohmann::json::parse(slurp(run / "summary.json"));
    EXPECT_EQ(summary.at("version").get<std::string>(), version_string());
    EXPECT_EQ(parse_config(summary.at("config")).seeds, cfg.seeds);
  }
  for (const auto& entry : fs::directory_iterator(dir.path())) {
    EXPECT_NE(entry.path().filename().string().front(), '.');
  }
}

TEST(SweepTest, SingleConfigMatchesExperiment) {
  TempDir dir;
  ExperimentConfig cfg = small(LearnerType::kOgd);
  cfg.name = "one";
  cfg.output_dir = (dir.path() / "exp").string();
  run_experiment(cfg, 1);
  const std::vector<ExperimentConfig> configs = {cfg};
  const auto entries = run_sweep(configs, 1, dir.path() / "sweep");
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_TRUE(entries[0].failures.empty());
  EXPECT_EQ(slurp(dir.path() / "exp" / "one-seed1" / "rounds.csv"),
            slurp(dir.path() / "sweep" / "one" / "one-seed1" / "rounds.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "sweep" / "sweep_summary.json"));
}

TEST(SweepTest, FailureIsIsolated) {
  TempDir dir;
  ExperimentConfig good = small(LearnerType::kOgd);
  good.name = "good";
  ExperimentConfig bad = small(LearnerType::kFrozen);
  bad.name = "bad";
  bad.env.T = 0;  // rejected by the environment at run time
  const std::vector<ExperimentConfig> configs = {good, bad};
  const auto entries = run_sweep(configs, 2, dir.path());
  EXPECT_TRUE(entries[0].failures.empty());
  EXPECT_EQ(entries[1].failures.size(), 1u);
  EXPECT_TRUE(fs::exists(dir.path() / "good" / "good-seed1" / "rounds.csv"));
  const auto table = nlohmann::json::parse(slurp(dir.path() / "sweep_summary.json"));
  EXPECT_EQ(table.at("entries").size(), 2u);
}

TEST(ReportTest, GroupsRuns) {
  TempDir dir;
  ExperimentConfig cfg = small(LearnerType::kOgd);
  cfg.seeds = {1, 2, 3};
  cfg.output_dir = dir.path().string();
  run_experiment(cfg, 1);
  const nlohmann::json report = collect_report(dir.path());
  EXPECT_EQ(report.at("runs").size(), 3u);
  ASSERT_EQ(report.at("groups").size(), 1u);
  EXPECT_EQ(report.at("groups")[0].at("runs").get<int>(), 3);
}

}  // namespace
}  // namespace odsim
