#include "chirp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "chirp/io.hpp"

namespace chirp {

Method parse_method(const std::string& name) {
  if (name == "chirp") return Method::kChirp;
  if (name == "catrl_baseline") return Method::kCatrlBaseline;
  if (name == "flat_q_baseline") return Method::kFlatQBaseline;
  throw std::invalid_argument("unknown method: " + name);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kChirp: return "chirp";
    case Method::kCatrlBaseline: return "catrl_baseline";
    case Method::kFlatQBaseline: return "flat_q_baseline";
  }
  throw std::logic_error("bad method");
}

long default_budget(const std::string& domain_id) {
  if (domain_id == "maze") return 1'500'000;
  if (domain_id == "four_rooms") return 2'000'000;
  if (domain_id == "taxi") return 4'000'000;
  if (domain_id == "office") return 4'000'000;
  if (domain_id == "minecraft") return 3'000'000;
  throw std::invalid_argument("unknown domain: " + domain_id);
}

Hyper default_hyper(const std::string& domain_id, Method method) {
  Hyper h;
  h.alpha = 0.05;
  h.eps_min = 0.05;
  h.delta_thre = 0.0;
  if (domain_id == "maze") {
    h.eps_decay = 0.997;
    h.gamma = 0.99;
    h.stepmax = 500;
    h.k_cap = 2;
    h.sigma_thre = 0.95;
    h.s_factor = 10;
    h.e_max = 500;
  } else if (domain_id == "four_rooms") {
    h.eps_decay = 0.998;
    h.gamma = 0.999;
    h.stepmax = 800;
    h.k_cap = 2;
    h.sigma_thre = 0.95;
    h.s_factor = 10;
    h.e_max = 500;
  } else if (domain_id == "taxi") {
    h.eps_decay = 0.999;
    h.gamma = 1.0;
    h.stepmax = 1000;
    h.k_cap = 2;
    h.sigma_thre = 1.0;
    h.s_factor = 4;
    h.e_max = 200;
  } else if (domain_id == "office") {
    h.eps_decay = 0.9991;
    h.gamma = 0.99;
    h.stepmax = 800;
    h.k_cap = 5;
    h.sigma_thre = 1.0;
    h.s_factor = 10;
    h.e_max = 200;
  } else if (domain_id == "minecraft") {
    h.eps_decay = 0.999;
    h.gamma = 1.0;
    h.stepmax = 1000;
    h.k_cap = 2;
    h.sigma_thre = 1.0;
    h.s_factor = 10;
    h.e_max = 200;
  } else {
    throw std::invalid_argument("unknown domain: " + domain_id);
  }
  h.budget = default_budget(domain_id);
  if (method != Method::kChirp) h.k_cap = 5;
  return h;
}

TaskStream make_stream(const DomainSpec& spec, const std::string& domain_id,
                       uint64_t seed, int n_tasks, long per_task_budget) {
  if (n_tasks < 1) throw std::invalid_argument("make_stream: n_tasks < 1");
  TaskStream stream;
  stream.domain_id = domain_id;
  stream.seed = seed;
  stream.per_task_budget = per_task_budget;
  Rng rng(mix64(seed ^ 0x737472ull));
  for (int i = 0; i < n_tasks; ++i) stream.tasks.push_back(sample_task(spec, rng));
  return stream;
}

namespace {

/// Success test shared by the baselines: a 100-run greedy evaluation of the
// learned policy. Evaluation measures the result; it does not count against
// the learning budget.
bool confirm_solved(MdpView& view, Cat& cat, const QTable& q, Rng& rng) {
  EvalResult ev = evaluate_policy(view, cat, q, 100, rng);
  return ev.success_rate >= 0.9;
}

// Q-learning on the finest grid discretization (one cell per unit of each
// continuous variable); desk-scale sanity baseline, not from the tables.
class FlatQ {
 public:
  explicit FlatQ(const DomainSpec& spec) : spec_(spec) {
    radix_.reserve(spec.schema.size());
    for (const VariableSpec& v : spec.schema) {
      long n = v.kind == VarKind::kContinuous
                   ? std::lround(v.hi - v.lo)
                   : static_cast<long>(v.values.size());
      radix_.push_back(std::max(1L, n));
    }
  }

  long index(const State& s) const {
    long idx = 0;
    for (size_t i = 0; i < spec_.schema.size(); ++i) {
      const VariableSpec& v = spec_.schema[i];
      long cell = v.kind == VarKind::kContinuous
                      ? static_cast<long>(std::floor(s.values[i] - v.lo))
                      : v.value_index(static_cast<int>(s.values[i]));
      idx = idx * radix_[i] + std::clamp(cell, 0L, radix_[i] - 1);
    }
    return idx;
  }

  std::vector<double>& row(long idx) {
    auto& r = rows_[idx];
    if (r.empty()) r.assign(spec_.actions.size(), 0.0);
    return r;
  }

  int greedy(long idx) const {
    auto it = rows_.find(idx);
    if (it == rows_.end()) return 0;
    const auto& r = it->second;
    int best = 0;
    for (size_t a = 1; a < r.size(); ++a)
      if (r[a] > r[best]) best = static_cast<int>(a);
    return best;
  }

  size_t states_visited() const { return rows_.size(); }

 private:
  const DomainSpec& spec_;
  std::vector<long> radix_;
  std::unordered_map<long, std::vector<double>> rows_;
};

struct BaselineOutcome {
  bool solved = false;
  long timesteps = 0;
  int leaves = 0;
};

BaselineOutcome solve_catrl(const DomainSpec& spec, Cat& cat, const Task& task,
                            const Hyper& h, long budget, Rng& rng) {
  BaselineOutcome out;
  StepBudget bud{budget, 0};
  TaskMdp view(spec, task, h.stepmax, &bud);
  QTable q(static_cast<int>(spec.actions.size()));
  CatRlResult r = run_catrl(view, cat, q, h, /*option_mode=*/false, rng);
  out.timesteps = bud.used;
  if (r.learned && !bud.exhausted()) {
    TaskMdp eval_view(spec, task, h.stepmax);
    out.solved = confirm_solved(eval_view, cat, q, rng);
  }
  out.leaves = cat.leaf_count();
  return out;
}

BaselineOutcome solve_flat_q(const DomainSpec& spec, const Task& task,
                             const Hyper& h, long budget, Rng& rng) {
  BaselineOutcome out;
  StepBudget bud{budget, 0};
  TaskMdp view(spec, task, h.stepmax, &bud);
  FlatQ q(spec);
  int n_actions = static_cast<int>(spec.actions.size());

  auto greedy_eval = [&](int n_runs) {
    int successes = 0;
    for (int run = 0; run < n_runs; ++run) {
      State s = view.reset(rng);
      if (view.at_goal(s)) {
        ++successes;
        continue;
      }
      for (int t = 0; t < h.stepmax && !bud.exhausted(); ++t) {
        StepOutcome st = view.step(s, q.greedy(q.index(s)), rng);
        s = st.next_state;
        if (st.done) {
          ++successes;
          break;
        }
      }
      if (bud.exhausted()) break;
    }
    return static_cast<double>(successes) / n_runs;
  };

  double eps = h.eps0;
  bool learned = false;
  for (int episode = 0; !bud.exhausted(); ++episode) {
    if (episode % h.eval_window == 0 &&
        greedy_eval(h.eval_episodes) >= h.learned_threshold) {
      learned = true;
      break;
    }
    State s = view.reset(rng);
    for (int t = 0; t < h.stepmax && !bud.exhausted(); ++t) {
      long idx = q.index(s);
      int a = rng.uniform() < eps ? rng.uniform_int(n_actions) : q.greedy(idx);
      StepOutcome st = view.step(s, a, rng);
      long nidx = q.index(st.next_state);
      double bootstrap = st.done ? 0.0 : h.gamma * q.row(nidx)[q.greedy(nidx)];
      std::vector<double>& row = q.row(idx);
      row[a] += h.alpha * (st.reward + bootstrap - row[a]);
      s = st.next_state;
      if (st.done) break;
    }
    eps = std::max(h.eps_min, eps * h.eps_decay);
  }
  out.timesteps = bud.used;
  if (learned && !bud.exhausted()) {
    bud.cap = std::numeric_limits<long>::max();  // evaluation is free
    out.solved = greedy_eval(100) >= 0.9;
  }
  out.leaves = static_cast<int>(q.states_visited());
  return out;
}

uint64_t trial_seed(uint64_t seed, int trial) {
  return mix64(seed ^ (0x7431ull + static_cast<uint64_t>(trial) * 0x9e3779b9ull));
}

}  // namespace

std::vector<MetricsRow> run_trial(const DomainSpec& spec,
                                  const ExperimentConfig& cfg, int trial,
                                  const std::string& checkpoint_path) {
  long budget = cfg.budget > 0 ? cfg.budget : default_budget(cfg.domain_id);
  uint64_t tseed = trial_seed(cfg.seed, trial);
  TaskStream stream =
      make_stream(spec, cfg.domain_id, tseed, cfg.n_tasks, budget);

  std::vector<MetricsRow> rows;
  long cum_steps = 0;
  int solved_so_far = 0;
  auto push_row = [&](int task, bool solved, long steps, int options,
                      int leaves) {
    cum_steps += steps;
    if (solved) ++solved_so_far;
    MetricsRow row;
    row.trial = trial;
    row.task = task;
    row.cum_steps = cum_steps;
    row.solved = solved;
    row.fraction = static_cast<double>(solved_so_far) / (task + 1);
    row.options = options;
    row.leaves = leaves;
    rows.push_back(row);
  };

  if (cfg.method == Method::kChirp) {
    ChirpAgent agent(spec, cfg.hyper, mix64(tseed ^ 0xa6e47ull));
    if (std::getenv("CHIRP_TRACE")) agent.set_trace(&std::cerr);
    for (int i = 0; i < cfg.n_tasks; ++i) {
      TaskResult r = agent.solve_task(stream.tasks[i], budget);
      push_row(i, r.solved, r.timesteps, agent.model().size(),
               agent.cat().leaf_count());
      if (!checkpoint_path.empty())
        save_checkpoint_file(checkpoint_path, agent, i + 1);
    }
  } else if (cfg.method == Method::kCatrlBaseline) {
    Cat cat(spec.schema);
    Rng rng(mix64(tseed ^ 0xa6e47ull));
    for (int i = 0; i < cfg.n_tasks; ++i) {
      BaselineOutcome r =
          solve_catrl(spec, cat, stream.tasks[i], cfg.hyper, budget, rng);
      push_row(i, r.solved, r.timesteps, 0, r.leaves);
    }
  } else {
    Rng rng(mix64(tseed ^ 0xa6e47ull));
    for (int i = 0; i < cfg.n_tasks; ++i) {
      BaselineOutcome r =
          solve_flat_q(spec, stream.tasks[i], cfg.hyper, budget, rng);
      push_row(i, r.solved, r.timesteps, 0, r.leaves);
    }
  }
  return rows;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "trial,task,cum_steps,solved,fraction,options,leaves\n";
  for (const MetricsRow& r : rows)
    os << r.trial << "," << r.task << "," << r.cum_steps << ","
       << (r.solved ? 1 : 0) << "," << fmt_double(r.fraction) << ","
       << r.options << "," << r.leaves << "\n";
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("empty metrics file: " + path);
  std::vector<MetricsRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    MetricsRow r;
    char c;
    int solved;
    if (!(ls >> r.trial >> c >> r.task >> c >> r.cum_steps >> c >> solved >>
          c >> r.fraction >> c >> r.options >> c >> r.leaves))
      throw std::runtime_error("bad metrics row in " + path + ": " + line);
    r.solved = solved != 0;
    rows.push_back(r);
  }
  return rows;
}

std::vector<std::string> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_trials < 1)
    throw std::invalid_argument("run_experiment: n_trials < 1");
  std::filesystem::create_directories(cfg.out_dir);
  DomainSpec spec = cfg.map.empty()
                        ? make_domain(cfg.domain_id, cfg.size)
                        : make_domain_with_map(cfg.domain_id, cfg.map, cfg.size);

  std::vector<std::string> files;
  std::vector<std::vector<MetricsRow>> trials;
  for (int t = 0; t < cfg.n_trials; ++t) {
    std::vector<MetricsRow> rows = run_trial(spec, cfg, t, cfg.checkpoint_path);
    std::string path = cfg.out_dir + "/metrics_" + method_name(cfg.method) +
                       "_trial" + std::to_string(t) + ".csv";
    write_metrics_csv(path, rows);
    files.push_back(path);
    trials.push_back(std::move(rows));
  }

  std::string summary_path =
      cfg.out_dir + "/summary_" + method_name(cfg.method) + ".txt";
  std::ofstream os(summary_path);
  if (!os) throw std::runtime_error("cannot open for writing: " + summary_path);
  os << "# per-task fraction of tasks solved, aggregated over "
     << cfg.n_trials << " trials\n";
  os << "# task mean_fraction std_fraction\n";
  for (int i = 0; i < cfg.n_tasks; ++i) {
    double mean = 0.0;
    for (const auto& rows : trials) mean += rows.at(i).fraction;
    mean /= cfg.n_trials;
    double var = 0.0;
    for (const auto& rows : trials) {
      double d = rows.at(i).fraction - mean;
      var += d * d;
    }
    var /= cfg.n_trials;
    os << i << " " << fmt_double(mean) << " " << fmt_double(std::sqrt(var))
       << "\n";
  }
  return files;
}

void emit_curve(const std::vector<std::string>& metrics_files,
                const std::string& out_path, long step_interval) {
  if (metrics_files.empty())
    throw std::invalid_argument("emit_curve: no metrics files");
  if (step_interval < 1)
    throw std::invalid_argument("emit_curve: step_interval < 1");

  // method -> list of per-trial rows; method inferred from the file name
  // (metrics_<method>_trial<k>.csv), falling back to the whole stem.
  std::map<std::string, std::vector<std::vector<MetricsRow>>> by_method;
  long max_step = 0;
  for (const std::string& path : metrics_files) {
    std::vector<MetricsRow> rows = read_metrics_csv(path);
    if (rows.empty()) throw std::runtime_error("no rows in " + path);
    std::string stem = std::filesystem::path(path).stem().string();
    std::string method = stem;
    if (stem.rfind("metrics_", 0) == 0) {
      size_t tail = stem.rfind("_trial");
      method = stem.substr(8, (tail == std::string::npos ? stem.size() : tail) - 8);
    }
    max_step = std::max(max_step, rows.back().cum_steps);
    by_method[method].push_back(std::move(rows));
  }

  auto fraction_at = [](const std::vector<MetricsRow>& rows, long step) {
    double f = 0.0;
    for (const MetricsRow& r : rows) {
      if (r.cum_steps > step) break;
      f = r.fraction;
    }
    return f;
  };

  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("cannot open for writing: " + out_path);
  os << "# step";
  for (const auto& [method, _] : by_method)
    os << " " << method << "_mean " << method << "_std";
  os << "\n";
  for (long step = 0; step <= max_step; step += step_interval) {
    os << step;
    for (const auto& [method, trials] : by_method) {
      double mean = 0.0;
      for (const auto& rows : trials) mean += fraction_at(rows, step);
      mean /= static_cast<double>(trials.size());
      double var = 0.0;
      for (const auto& rows : trials) {
        double d = fraction_at(rows, step) - mean;
        var += d * d;
      }
      var /= static_cast<double>(trials.size());
      os << " " << fmt_double(mean) << " " << fmt_double(std::sqrt(var));
    }
    os << "\n";
  }
}

}  // namespace chirp
