#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chirp/harness.hpp"
#include "chirp/io.hpp"

namespace {

using namespace chirp;

// key=value per line; '#' starts a comment. Values here override flags.
std::map<std::string, std::string> load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

struct RunArgs {
  std::string domain = "maze";
  std::string method = "chirp";
  int tasks = 20;
  int trials = 1;
  uint64_t seed = 0;
  long budget = 0;
  std::string out = "out";
  std::string map_file;
  std::string config;
  std::string checkpoint;
  int width = 0, height = 0, landmarks = 0;
};

void apply_config(const std::map<std::string, std::string>& kv, RunArgs& a,
                  std::map<std::string, std::string>& hyper_overrides) {
  for (const auto& [key, value] : kv) {
    if (key == "domain") a.domain = value;
    else if (key == "method") a.method = value;
    else if (key == "tasks") a.tasks = std::stoi(value);
    else if (key == "trials") a.trials = std::stoi(value);
    else if (key == "seed") a.seed = std::stoull(value);
    else if (key == "budget") a.budget = std::stol(value);
    else if (key == "out") a.out = value;
    else if (key == "map_file") a.map_file = value;
    else if (key == "checkpoint") a.checkpoint = value;
    else if (key == "width") a.width = std::stoi(value);
    else if (key == "height") a.height = std::stoi(value);
    else if (key == "landmarks") a.landmarks = std::stoi(value);
    else hyper_overrides[key] = value;
  }
}

void apply_hyper_overrides(Hyper& h,
                           const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "alpha") h.alpha = std::stod(value);
    else if (key == "gamma") h.gamma = std::stod(value);
    else if (key == "eps0") h.eps0 = std::stod(value);
    else if (key == "eps_decay") h.eps_decay = std::stod(value);
    else if (key == "eps_min") h.eps_min = std::stod(value);
    else if (key == "stepmax") h.stepmax = std::stoi(value);
    else if (key == "k_cap") h.k_cap = std::stoi(value);
    else if (key == "s_factor") h.s_factor = std::stod(value);
    else if (key == "e_max") h.e_max = std::stoi(value);
    else if (key == "delta_thre") h.delta_thre = std::stod(value);
    else if (key == "sigma_thre") h.sigma_thre = std::stod(value);
    else if (key == "intrinsic_reward") h.intrinsic_reward = std::stod(value);
    else if (key == "eval_window") h.eval_window = std::stoi(value);
    else if (key == "eval_episodes") h.eval_episodes = std::stoi(value);
    else if (key == "sigma_w1") h.sigma_w1 = std::stod(value);
    else if (key == "sigma_w2") h.sigma_w2 = std::stod(value);
    else if (key == "ctx_freq_ceiling") h.ctx_freq_ceiling = std::stod(value);
    else if (key == "ctx_degree_normalized")
      h.ctx_degree_normalized = std::stoi(value) != 0;
    else throw std::invalid_argument("unknown config key: " + key);
  }
}

ExperimentConfig build_config(RunArgs a) {
  std::map<std::string, std::string> hyper_overrides;
  if (!a.config.empty()) apply_config(load_config(a.config), a, hyper_overrides);
  ExperimentConfig cfg;
  cfg.domain_id = a.domain;
  cfg.method = parse_method(a.method);
  cfg.n_tasks = a.tasks;
  cfg.n_trials = a.trials;
  cfg.seed = a.seed;
  cfg.budget = a.budget;
  cfg.out_dir = a.out;
  cfg.size = {a.width, a.height, a.landmarks};
  cfg.checkpoint_path = a.checkpoint;
  if (!a.map_file.empty()) cfg.map = load_map_file(a.map_file);
  cfg.hyper = default_hyper(cfg.domain_id, cfg.method);
  if (cfg.budget > 0) cfg.hyper.budget = cfg.budget;
  apply_hyper_overrides(cfg.hyper, hyper_overrides);
  return cfg;
}

void add_common_flags(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--domain", a.domain,
                  "maze|four_rooms|office|taxi|minecraft");
  cmd->add_option("--map-file", a.map_file, "custom map geometry file");
  cmd->add_option("--width", a.width, "map width override");
  cmd->add_option("--height", a.height, "map height override");
  cmd->add_option("--landmarks", a.landmarks, "taxi landmark count override");
  cmd->add_option("--config", a.config,
                  "key=value config file; overrides flags");
}

DomainSpec domain_of(const ExperimentConfig& cfg) {
  return cfg.map.empty() ? make_domain(cfg.domain_id, cfg.size)
                         : make_domain_with_map(cfg.domain_id, cfg.map,
                                                cfg.size);
}

int cmd_run(const RunArgs& args) {
  ExperimentConfig cfg = build_config(args);
  std::vector<std::string> files = run_experiment(cfg);
  for (const std::string& f : files) std::cout << f << "\n";
  std::cout << cfg.out_dir << "/summary_" << method_name(cfg.method)
            << ".txt\n";
  return 0;
}

int cmd_plan_debug(const RunArgs& args, const std::string& state_text,
                   const std::string& goal_text) {
  ExperimentConfig cfg = build_config(args);
  DomainSpec spec = domain_of(cfg);
  Cat cat(spec.schema);
  OptionModel model;
  if (!args.checkpoint.empty()) {
    Checkpoint ck = load_checkpoint_file(args.checkpoint);
    cat = std::move(ck.cat);
    model = std::move(ck.model);
  }
  State s = parse_state(spec.schema, state_text);
  GoalSpec goal = parse_goal(spec.schema, goal_text);

  int start = cat.leaf_of(s);
  PlannableCat graph = build_plannable_cat(cat, model);
  std::vector<int> goals = goal_nodes_of(cat, spec.schema, goal);
  std::cout << "start node " << start << ": "
            << box_to_string(spec.schema, cat.node(start).box) << "\n";
  std::cout << "goal nodes:";
  for (int g : goals) std::cout << " " << g;
  std::cout << "\n";

  OptionPlan plan = compute_option_plan(graph, start, goals, cfg.hyper);
  if (!plan.found) {
    OptionSignature sig = invent_option_signature(cat, s, goal);
    std::cout << "no plan; cold-start signature with "
              << sig.termination.size() << " termination box(es):\n";
    for (const Box& b : sig.termination)
      std::cout << "  -> " << box_to_string(spec.schema, b) << "\n";
    return 0;
  }
  std::cout << "plan found, cost " << plan.cost << ", " << plan.steps.size()
            << " edge(s)\n";
  std::vector<RefinedStep> steps = refine_plan(cat, plan, model);
  for (size_t i = 0; i < steps.size(); ++i) {
    const RefinedStep& rs = steps[i];
    std::cout << "step " << i << ": ";
    if (rs.option_index >= 0)
      std::cout << "option " << rs.option_index << "\n";
    else
      std::cout << "train signature "
                << box_to_string(spec.schema, rs.signature.initiation.front())
                << " -> "
                << box_to_string(spec.schema, rs.signature.termination.front())
                << "\n";
  }
  return 0;
}

int cmd_list_options(const std::string& checkpoint) {
  Checkpoint ck = load_checkpoint_file(checkpoint);
  const Schema& schema = ck.cat.schema();
  std::cout << ck.model.size() << " option(s), " << ck.tasks_completed
            << " task(s) completed\n";
  for (int i = 0; i < ck.model.size(); ++i) {
    const AbstractOption& opt = ck.model.option(i);
    std::cout << "option " << i << " (quality " << ck.model.quality(i)
              << (opt.needs_finetune ? ", needs fine-tune" : "")
              << (opt.termination_from_delta ? ", delta endpoint" : "")
              << ")\n";
    for (const Box& b : opt.initiation)
      std::cout << "  init: " << box_to_string(schema, b) << "\n";
    for (const Box& b : opt.termination)
      std::cout << "  term: " << box_to_string(schema, b) << "\n";
    if (!opt.delta_changed_vars.empty()) {
      std::cout << "  changed:";
      for (int v : opt.delta_changed_vars)
        std::cout << " " << schema.at(v).name;
      std::cout << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual hierarchical RL with conditional abstraction trees"};
  app.require_subcommand(1);

  RunArgs args;
  std::string state_text, goal_text, curve_out = "curve.txt";
  std::vector<std::string> metrics_files;
  long interval = 10'000;

  CLI::App* run = app.add_subcommand("run", "run a continual experiment");
  add_common_flags(run, args);
  run->add_option("--method", args.method,
                  "chirp|catrl_baseline|flat_q_baseline");
  run->add_option("--tasks", args.tasks, "tasks per stream");
  run->add_option("--trials", args.trials, "independent trials");
  run->add_option("--seed", args.seed, "base seed");
  run->add_option("--budget", args.budget, "per-task step budget");
  run->add_option("--out", args.out, "output directory");
  run->add_option("--checkpoint", args.checkpoint,
                  "save chirp agent state here after each task");

  CLI::App* plan = app.add_subcommand("plan-debug", "print the plan for a "
                                                    "state/goal pair");
  add_common_flags(plan, args);
  plan->add_option("--checkpoint", args.checkpoint, "agent checkpoint file");
  plan->add_option("--state", state_text, "e.g. x=1.5,y=2.5,l=1,p=0")
      ->required();
  plan->add_option("--goal", goal_text, "e.g. l=3;p=0 or x=[2,3);y=[0,1)")
      ->required();

  CLI::App* list = app.add_subcommand("list-options",
                                      "print the invented options");
  list->add_option("--checkpoint", args.checkpoint, "agent checkpoint file")
      ->required();

  CLI::App* curve = app.add_subcommand("emit-curve",
                                       "aggregate metrics CSVs to plot data");
  curve->add_option("files", metrics_files, "metrics CSV files")->required();
  curve->add_option("--out", curve_out, "output plot-data file");
  curve->add_option("--interval", interval, "step grid interval");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(args);
    if (plan->parsed()) return cmd_plan_debug(args, state_text, goal_text);
    if (list->parsed()) return cmd_list_options(args.checkpoint);
    if (curve->parsed()) {
      chirp::emit_curve(metrics_files, curve_out, interval);
      std::cout << curve_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
