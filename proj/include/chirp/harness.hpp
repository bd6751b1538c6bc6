#pragma once

#include <string>
#include <vector>

#include "chirp/agent.hpp"

namespace chirp {

enum class Method { kChirp, kCatrlBaseline, kFlatQBaseline };

Method parse_method(const std::string& name);
std::string method_name(Method m);

struct ExperimentConfig {
  std::string domain_id = "maze";
  Method method = Method::kChirp;
  int n_tasks = 20;
  int n_trials = 1;
  uint64_t seed = 0;
  long budget = 0;  // 0: use the domain default
  std::string out_dir = ".";
  Hyper hyper;      // filled by default_hyper; overridable
  SizeConfig size;
  std::vector<std::string> map;  // optional custom geometry
  std::string checkpoint_path;   // if set, chirp agent state saved per task
};

// Per-domain table defaults. CAT+RL differs from CHiRP only in k_cap.
// The flat-Q baseline (not from the tables) reuses the CAT+RL column.
Hyper default_hyper(const std::string& domain_id, Method method);
long default_budget(const std::string& domain_id);

struct MetricsRow {
  int trial = 0;
  int task = 0;
  long cum_steps = 0;
  bool solved = false;
  double fraction = 0.0;  // tasks solved so far / tasks attempted so far
  int options = 0;
  int leaves = 0;
};

// Deterministic task stream for one trial.
TaskStream make_stream(const DomainSpec& spec, const std::string& domain_id,
                       uint64_t seed, int n_tasks, long per_task_budget);

// Runs one trial of one method; rows are appended in task order.
std::vector<MetricsRow> run_trial(const DomainSpec& spec,
                                  const ExperimentConfig& cfg, int trial,
                                  const std::string& checkpoint_path = "");

// Writes one CSV per trial plus a per-task summary across trials.
// Returns the written metrics file paths.
std::vector<std::string> run_experiment(const ExperimentConfig& cfg);

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

// Columnar plot data: fraction solved, mean and std across trials per
// method, sampled every `step_interval` environment steps.
void emit_curve(const std::vector<std::string>& metrics_files,
                const std::string& out_path, long step_interval = 10'000);

}  // namespace chirp
