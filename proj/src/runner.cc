#include "odsim/runner.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "odsim/errors.h"
#include "odsim/parallel.h"
#include "odsim/rng.h"

#ifndef ODSIM_VERSION
#define ODSIM_VERSION "0.1.0"
#endif

namespace odsim {

namespace fs = std::filesystem;

namespace {

// Per-seed stream ids.
constexpr std::uint64_t kEnvStream = 0;
constexpr std::uint64_t kEngineStream = 1;
constexpr std::uint64_t kLearnerStream = 2;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Strict view of one JSON object: every key must be read, and type errors are
// reported with the field path.
class Fields {
 public:
  Fields(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const nlohmann::json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    used_.insert(key);
    const nlohmann::json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(at(key), "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    } else {
      if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    }
    return v.get<T>();
  }

  std::string at(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) throw ConfigError(at(item.key()), "unknown key");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path, message);
}

bool positive(double x) { return x > 0.0 && std::isfinite(x); }

// "auto" or a positive number.
std::optional<double> auto_or_positive(Fields& f, const std::string& key,
                                       std::optional<double> fallback) {
  if (!f.has(key)) return fallback;
  const nlohmann::json& v = f.raw(key);
  if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
  require(v.is_number(), f.at(key), "expected a positive number or \"auto\"");
  const double x = v.get<double>();
  require(positive(x), f.at(key), "must be positive");
  return x;
}

EnvConfig parse_env(const nlohmann::json& j) {
  Fields f(j, "env");
  EnvConfig e;
  const std::string regime = f.get<std::string>("regime", regime_name(e.regime));
  try {
    e.regime = parse_regime(regime);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(f.at("regime"), ex.what());
  }
  e.drift_rate = f.get<double>("drift_rate", e.drift_rate);
  require(e.drift_rate >= 0.0 && std::isfinite(e.drift_rate), f.at("drift_rate"), "must be >= 0");
  e.shift_period = f.get<int>("shift_period", e.shift_period);
  require(e.shift_period >= 1, f.at("shift_period"), "must be >= 1");
  e.shift_magnitude = f.get<double>("shift_magnitude", e.shift_magnitude);
  require(positive(e.shift_magnitude), f.at("shift_magnitude"), "must be positive");
  e.T = f.get<long>("T", e.T);
  require(e.T >= 1, f.at("T"), "must be >= 1");
  e.vocab_size = f.get<int>("vocab_size", e.vocab_size);
  require(e.vocab_size >= 2, f.at("vocab_size"), "must be >= 2");
  e.dim = f.get<int>("dim", e.dim);
  require(e.dim >= 1, f.at("dim"), "must be >= 1");
  e.radius = f.get<double>("radius", e.radius);
  require(positive(e.radius), f.at("radius"), "must be positive");
  e.comparator_scale = f.get<double>("comparator_scale", e.comparator_scale);
  require(e.comparator_scale > 0.0 && e.comparator_scale <= 1.0,
          f.at("comparator_scale"), "must lie in (0, 1]");
  e.agnostic = f.get<bool>("agnostic", e.agnostic);
  e.agnostic_noise = f.get<double>("agnostic_noise", e.agnostic_noise);
  require(e.agnostic_noise >= 0.0 && std::isfinite(e.agnostic_noise),
          f.at("agnostic_noise"), "must be >= 0");
  f.finish();
  return e;
}

LearnerConfig parse_learner_config(const nlohmann::json& j) {
  Fields f(j, "learner");
  LearnerConfig l;
  const std::string type = f.get<std::string>("type", learner_name(l.type));
  try {
    l.type = parse_learner(type);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(f.at("type"), ex.what());
  }
  l.eta = auto_or_positive(f, "eta", l.eta);
  l.epsilon = auto_or_positive(f, "epsilon", l.epsilon);
  l.grad_bound = f.get<double>("grad_bound", l.grad_bound);
  require(positive(l.grad_bound), f.at("grad_bound"), "must be positive");
  const std::string init = f.get<std::string>("init", l.frozen_at_comparator ? "comparator" : "zero");
  require(init == "zero" || init == "comparator", f.at("init"),
          "must be \"zero\" or \"comparator\"");
  l.frozen_at_comparator = init == "comparator";
  l.beta = f.get<double>("beta", l.beta);
  require(l.beta >= 0.0 && std::isfinite(l.beta), f.at("beta"), "must be >= 0");
  l.dpo_batch = f.get<int>("dpo_batch", l.dpo_batch);
  require(l.dpo_batch >= 1, f.at("dpo_batch"), "must be >= 1");
  l.dpo_length = f.get<int>("dpo_length", l.dpo_length);
  require(l.dpo_length >= 1, f.at("dpo_length"), "must be >= 1");
  l.dpo_temperature = f.get<double>("dpo_temperature", l.dpo_temperature);
  require(positive(l.dpo_temperature), f.at("dpo_temperature"), "must be positive");
  f.finish();
  return l;
}

KPolicy parse_k_policy(const nlohmann::json& j) {
  Fields f(j, "k_policy");
  KPolicy k;
  const std::string mode = f.get<std::string>("mode", "fixed");
  require(mode == "fixed" || mode == "dynamic", f.at("mode"),
          "must be \"fixed\" or \"dynamic\"");
  k.dynamic = mode == "dynamic";
  k.window = f.get<int>("window", k.window);
  require(k.window >= 1, f.at("window"), "must be >= 1");
  k.k_max = f.get<int>("k_max", k.k_max);
  require(k.k_max >= 1 && k.k_max <= SpecConfig::kMaxCandidates, f.at("k_max"),
          "must lie in [1, 64]");
  f.finish();
  return k;
}

std::string format_k_mode(const KPolicy& k) { return k.dynamic ? "dynamic" : "fixed"; }

nlohmann::json auto_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json("auto");
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out;
}

nlohmann::json summary_json(const ExperimentConfig& cfg, const RunResult& run) {
  nlohmann::json j = run.summary.to_json();
  j["seed"] = run.seed;
  j["learner"] = run.learner;
  j["regime"] = run.regime;
  j["version"] = version_string();
  j["config"] = config_to_json(cfg);
  return j;
}

// Writes one run under a temporary sibling name, then renames it into place
// so a crash never leaves a half-written run directory.
void write_run(const fs::path& parent, const ExperimentConfig& cfg,
               const RunResult& run) {
  fs::create_directories(parent);
  const std::string name = run_dir_name(cfg, run.seed);
  const fs::path tmp = parent / ("." + name + ".tmp");
  const fs::path final_dir = parent / name;
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  write_file(tmp / "rounds.csv", records_csv(run, cfg.alpha));
  write_file(tmp / "summary.json", summary_json(cfg, run).dump(2) + "\n");
  write_file(tmp / "learner_state.json", run.learner_state.dump() + "\n");
  fs::remove_all(final_dir);
  fs::rename(tmp, final_dir);
}

// Rolling estimate of the per-token acceptance rate from the last `window`
// rounds: accepted / evaluated tests.
class AcceptanceWindow {
 public:
  explicit AcceptanceWindow(int window) : window_(window) {}

  void push(int accepted, int evaluated) {
    rounds_.push_back({accepted, evaluated});
    accepted_ += accepted;
    evaluated_ += evaluated;
    if (static_cast<int>(rounds_.size()) > window_) {
      accepted_ -= rounds_.front().first;
      evaluated_ -= rounds_.front().second;
      rounds_.pop_front();
    }
  }

  std::optional<double> estimate() const {
    if (evaluated_ == 0) return std::nullopt;
    return static_cast<double>(accepted_) / static_cast<double>(evaluated_);
  }

 private:
  int window_;
  std::deque<std::pair<int, int>> rounds_;
  long accepted_ = 0;
  long evaluated_ = 0;
};

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

nlohmann::json aggregate(const std::vector<RunSummary>& runs) {
  static const std::vector<std::string> kFields = {
      "regret", "path_length", "accepted_total", "emitted_total",
      "gamma_accepted", "gamma_emitted", "sim_wallclock"};
  nlohmann::json out = nlohmann::json::object();
  for (const auto& field : kFields) {
    std::vector<double> xs;
    for (const auto& r : runs) xs.push_back(r.to_json().at(field).get<double>());
    out[field] = {{"mean", mean_of(xs)}, {"std", std_of(xs)}};
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
  Fields f(j, "");
  ExperimentConfig cfg;
  cfg.name = f.get<std::string>("name", cfg.name);
  if (f.has("env")) cfg.env = parse_env(f.raw("env"));
  if (f.has("spec")) {
    Fields s(f.raw("spec"), "spec");
    cfg.spec.k = s.get<int>("k", cfg.spec.k);
    require(cfg.spec.k >= 1 && cfg.spec.k <= SpecConfig::kMaxCandidates, s.at("k"),
            "must lie in [1, 64]");
    s.finish();
  }
  if (f.has("k_policy")) cfg.k_policy = parse_k_policy(f.raw("k_policy"));
  if (f.has("learner")) cfg.learner = parse_learner_config(f.raw("learner"));
  cfg.alpha = f.get<double>("alpha", cfg.alpha);
  require(positive(cfg.alpha), "alpha", "must be positive");
  if (f.has("seeds")) {
    const nlohmann::json& seeds = f.raw("seeds");
    require(seeds.is_array(), "seeds", "expected an array of integers");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      require(seeds[i].is_number_unsigned() || (seeds[i].is_number_integer() && seeds[i].get<long long>() >= 0),
              "seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
      cfg.seeds.push_back(seeds[i].get<std::uint64_t>());
    }
  }
  require(!cfg.seeds.empty(), "seeds", "at least one seed is required");
  cfg.output_dir = f.get<std::string>("output_dir", cfg.output_dir);
  require(!cfg.output_dir.empty(), "output_dir", "must not be empty");
  f.finish();
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  const EnvConfig& e = cfg.env;
  const LearnerConfig& l = cfg.learner;
  return {
      {"name", cfg.name},
      {"env",
       {{"regime", regime_name(e.regime)},
        {"drift_rate", e.drift_rate},
        {"shift_period", e.shift_period},
        {"shift_magnitude", e.shift_magnitude},
        {"T", e.T},
        {"vocab_size", e.vocab_size},
        {"dim", e.dim},
        {"radius", e.radius},
        {"comparator_scale", e.comparator_scale},
        {"agnostic", e.agnostic},
        {"agnostic_noise", e.agnostic_noise}}},
      {"spec", {{"k", cfg.spec.k}}},
      {"k_policy",
       {{"mode", format_k_mode(cfg.k_policy)},
        {"window", cfg.k_policy.window},
        {"k_max", cfg.k_policy.k_max}}},
      {"learner",
       {{"type", learner_name(l.type)},
        {"eta", auto_json(l.eta)},
        {"epsilon", auto_json(l.epsilon)},
        {"grad_bound", l.grad_bound},
        {"init", l.frozen_at_comparator ? "comparator" : "zero"},
        {"beta", l.beta},
        {"dpo_batch", l.dpo_batch},
        {"dpo_length", l.dpo_length},
        {"dpo_temperature", l.dpo_temperature}}},
      {"alpha", cfg.alpha},
      {"seeds", cfg.seeds},
      {"output_dir", cfg.output_dir}};
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError(path.string(), ex.what());
  }
  return parse_config(j);
}

RunResult simulate_run(const ExperimentConfig& cfg, std::uint64_t seed,
                       const std::optional<nlohmann::json>& init_state) {
  EnvConfig env = cfg.env;
  env.seed = derive_seed(seed, kEnvStream);
  const std::vector<EnvStep> stream = generate_stream(env);

  LearnerSetup setup{env.vocab_size, env.dim, env.radius, env.T,
                     derive_seed(seed, kLearnerStream), stream.front().comparator};
  std::unique_ptr<OnlineLearner> learner = make_learner(cfg.learner, setup);
  if (init_state) learner->restore(*init_state);

  Rng rng(derive_seed(seed, kEngineStream));
  const KPolicy& policy = cfg.k_policy;
  AcceptanceWindow window(policy.window);
  int k = cfg.spec.k;
  if (policy.dynamic) k = std::min(k, policy.k_max);

  RunResult run;
  run.seed = seed;
  run.learner = learner_name(cfg.learner.type);
  run.regime = regime_name(env.regime);
  run.records.reserve(stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const EnvStep& step = stream[t];
    if (policy.dynamic) {
      if (const auto acc = window.estimate()) {
        k = optimal_k_exact(*acc, cfg.alpha, policy.k_max);
      }
    }
    const DraftParams params = learner->play();
    const Categorical q = predict(params, step.phi);
    const std::vector<int> tokens = draft_tokens(q, k, rng);
    const StepOutcome out = verify_step(step.target, q, tokens, rng);

    RoundRecord r;
    r.t = static_cast<long>(t);
    r.loss = ce_loss(params, step.phi, step.target);
    r.comparator_loss = step.comparator_loss;
    r.n_accepted = out.n_accepted;
    r.emitted = static_cast<int>(out.emitted.size());
    r.tv = total_variation(step.target, q);
    r.acc_true = acceptance_rate(step.target, q);
    r.kl = kl_divergence(step.target, q);
    r.k_used = k;
    run.records.push_back(r);
    window.push(out.n_accepted, out.accepts_evaluated());

    learner->observe({step.phi, step.target});
  }
  const double pt = stream.size() >= 2 ? path_length(stream) : 0.0;
  run.summary = summarize(run.records, pt, cfg.alpha);
  run.learner_state = learner->state();
  return run;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string records_csv(const RunResult& run, double alpha) {
  std::string out = kCsvHeader;
  out += '\n';
  double regret = 0.0;
  double wall = 0.0;
  long accepted = 0;
  long emitted = 0;
  const std::string prefix_learner = run.learner + "," + run.regime + "," +
                                     std::to_string(run.seed) + ",";
  for (const RoundRecord& r : run.records) {
    regret += r.loss - r.comparator_loss;
    wall += alpha * r.k_used + 1.0;
    accepted += r.n_accepted;
    emitted += r.emitted;
    out += std::to_string(r.t);
    out += ',';
    out += prefix_learner;
    out += std::to_string(r.k_used) + ',' + std::to_string(r.n_accepted) + ',' +
           std::to_string(r.emitted) + ',';
    for (double v : {r.acc_true, r.tv, r.kl, r.loss, r.comparator_loss, regret,
                     static_cast<double>(accepted) / wall,
                     static_cast<double>(emitted) / wall}) {
      out += format_double(v);
      out += ',';
    }
    out += format_double(wall);
    out += '\n';
  }
  return out;
}

std::string version_string() { return ODSIM_VERSION; }

std::string run_dir_name(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::string stem = cfg.name.empty()
                               ? learner_name(cfg.learner.type) + "-" + regime_name(cfg.env.regime)
                               : safe_name(cfg.name);
  return stem + "-seed" + std::to_string(seed);
}

std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg, int jobs,
                                       const std::optional<nlohmann::json>& init_state) {
  const std::size_t n = cfg.seeds.size();
  std::vector<RunSummary> summaries(n);
  std::vector<std::exception_ptr> errors(n);
  parallelize(n, jobs, [&](std::size_t i) {
    try {
      const RunResult run = simulate_run(cfg, cfg.seeds[i], init_state);
      write_run(cfg.output_dir, cfg, run);
      summaries[i] = run.summary;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return summaries;
}

std::vector<SweepEntry> run_sweep(std::span<const ExperimentConfig> configs,
                                  int jobs, const fs::path& out_dir) {
  if (configs.empty()) throw std::invalid_argument("run_sweep: no configurations");
  std::vector<SweepEntry> entries(configs.size());
  std::map<std::string, int> seen;
  struct Task {
    std::size_t config;
    std::size_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::string name = configs[c].name.empty() ? "config-" + std::to_string(c)
                                               : safe_name(configs[c].name);
    if (seen[name]++ > 0) name += "-" + std::to_string(c);
    entries[c].name = name;
    entries[c].config = config_to_json(configs[c]);
    entries[c].runs.resize(configs[c].seeds.size());
    for (std::size_t s = 0; s < configs[c].seeds.size(); ++s) tasks.push_back({c, s});
  }

  std::vector<std::string> failures(tasks.size());
  std::vector<char> ok(tasks.size(), 0);
  parallelize(tasks.size(), jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const ExperimentConfig& cfg = configs[task.config];
    const std::uint64_t seed = cfg.seeds[task.seed];
    try {
      const RunResult run = simulate_run(cfg, seed);
      write_run(out_dir / entries[task.config].name, cfg, run);
      entries[task.config].runs[task.seed] = run.summary;
      ok[i] = 1;
    } catch (const std::exception& ex) {
      failures[i] = "seed " + std::to_string(seed) + ": " + ex.what();
    }
  });

  // Drop failed runs in seed order; the reduction is serial.
  for (std::size_t c = 0; c < entries.size(); ++c) {
    std::vector<RunSummary> kept;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].config != c) continue;
      if (ok[i]) {
        kept.push_back(entries[c].runs[tasks[i].seed]);
      } else {
        entries[c].failures.push_back(failures[i]);
      }
    }
    entries[c].runs = std::move(kept);
  }
  fs::create_directories(out_dir);
  write_file(out_dir / "sweep_summary.json", sweep_table(entries).dump(2) + "\n");
  return entries;
}

nlohmann::json sweep_table(std::span<const SweepEntry> entries) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : entries) {
    rows.push_back({{"name", e.name},
                    {"config", e.config},
                    {"runs", e.runs.size()},
                    {"failures", e.failures},
                    {"metrics", aggregate(e.runs)}});
  }
  return {{"version", version_string()}, {"entries", rows}};
}

nlohmann::json collect_report(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw std::invalid_argument("report: " + dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "summary.json") {
      const std::string parent = entry.path().parent_path().filename().string();
      if (!parent.empty() && parent.front() == '.') continue;  // unfinished run
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  nlohmann::json runs = nlohmann::json::array();
  std::map<std::pair<std::string, std::string>, std::vector<RunSummary>> groups;
  for (const auto& file : files) {
    std::ifstream in(file);
    const nlohmann::json j = nlohmann::json::parse(in);
    const RunSummary s = RunSummary::from_json(j);
    nlohmann::json row = s.to_json();
    row["path"] = fs::relative(file.parent_path(), dir).generic_string();
    row["learner"] = j.value("learner", "");
    row["regime"] = j.value("regime", "");
    row["seed"] = j.value("seed", std::uint64_t{0});
    groups[{row["learner"].get<std::string>(), row["regime"].get<std::string>()}].push_back(s);
    runs.push_back(std::move(row));
  }
  nlohmann::json grouped = nlohmann::json::array();
  for (const auto& [key, summaries] : groups) {
    grouped.push_back({{"learner", key.first},
                       {"regime", key.second},
                       {"runs", summaries.size()},
                       {"metrics", aggregate(summaries)}});
  }
  return {{"runs", runs}, {"groups", grouped}};
}

}  // namespace odsim
