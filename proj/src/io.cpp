#include "chirp/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace chirp {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

void expect(std::istream& is, const std::string& token) {
  std::string got;
  if (!(is >> got) || got != token)
    throw std::runtime_error("parse error: expected '" + token + "', got '" +
                             got + "'");
}

template <typename T>
T read_value(std::istream& is, const std::string& key) {
  expect(is, key);
  T v{};
  if (!(is >> v)) throw std::runtime_error("parse error after '" + key + "'");
  return v;
}

void write_box(std::ostream& os, const Schema& schema, const Box& b) {
  os << "box:";
  for (size_t i = 0; i < schema.size(); ++i) {
    const VarInterval& iv = b.ivs[i];
    if (schema[i].kind == VarKind::kContinuous)
      os << " c " << fmt_double(iv.lo) << " " << fmt_double(iv.hi);
    else
      os << " d " << iv.ilo << " " << iv.ihi;
  }
  os << "\n";
}

Box read_box(std::istream& is, const Schema& schema) {
  expect(is, "box:");
  Box b;
  for (const VariableSpec& var : schema) {
    std::string kind;
    is >> kind;
    VarInterval iv;
    if (kind == "c") {
      is >> iv.lo >> iv.hi;
      if (var.kind != VarKind::kContinuous)
        throw std::runtime_error("box: kind mismatch for " + var.name);
    } else if (kind == "d") {
      is >> iv.ilo >> iv.ihi;
      if (var.kind != VarKind::kDiscrete)
        throw std::runtime_error("box: kind mismatch for " + var.name);
    } else {
      throw std::runtime_error("box: bad interval kind '" + kind + "'");
    }
    b.ivs.push_back(iv);
  }
  if (!is) throw std::runtime_error("box: truncated");
  return b;
}

}  // namespace

void save_schema(std::ostream& os, const Schema& schema) {
  os << "n_vars: " << schema.size() << "\n";
  for (const VariableSpec& v : schema) {
    os << "var: " << v.name;
    if (v.kind == VarKind::kContinuous) {
      os << " c " << fmt_double(v.lo) << " " << fmt_double(v.hi) << "\n";
    } else {
      os << " d " << v.values.size();
      for (int x : v.values) os << " " << x;
      os << "\n";
    }
  }
}

Schema load_schema(std::istream& is) {
  int n = read_value<int>(is, "n_vars:");
  Schema schema;
  for (int i = 0; i < n; ++i) {
    expect(is, "var:");
    VariableSpec v;
    std::string kind;
    is >> v.name >> kind;
    if (kind == "c") {
      v.kind = VarKind::kContinuous;
      is >> v.lo >> v.hi;
    } else if (kind == "d") {
      v.kind = VarKind::kDiscrete;
      size_t count;
      is >> count;
      v.values.resize(count);
      for (int& x : v.values) is >> x;
    } else {
      throw std::runtime_error("schema: bad variable kind '" + kind + "'");
    }
    schema.push_back(std::move(v));
  }
  if (!is) throw std::runtime_error("schema: truncated");
  validate_schema(schema);
  return schema;
}

void save_task_stream(std::ostream& os, const TaskStream& stream) {
  os << "chirp-stream-v1\n";
  os << "domain: " << stream.domain_id << "\n";
  os << "seed: " << stream.seed << "\n";
  os << "per_task_budget: " << stream.per_task_budget << "\n";
  os << "n_tasks: " << stream.tasks.size() << "\n";
  for (size_t i = 0; i < stream.tasks.size(); ++i) {
    const Task& t = stream.tasks[i];
    os << "task: " << i << "\n";
    os << "reward: " << (t.reward_id.empty() ? "-" : t.reward_id) << "\n";
    os << "init:";
    for (double v : t.initial.values) os << " " << fmt_double(v);
    os << "\n";
    os << "n_goal: " << t.goal.constraints.size() << "\n";
    for (const GoalConstraint& c : t.goal.constraints) {
      os << "g: " << c.var;
      if (c.allowed.empty()) {
        os << " c " << fmt_double(c.lo) << " " << fmt_double(c.hi) << "\n";
      } else {
        os << " d " << c.allowed.size();
        for (int a : c.allowed) os << " " << a;
        os << "\n";
      }
    }
    os << "end_task\n";
  }
  os << "end_stream\n";
}

TaskStream load_task_stream(std::istream& is, const Schema& schema) {
  expect(is, "chirp-stream-v1");
  TaskStream stream;
  stream.domain_id = read_value<std::string>(is, "domain:");
  stream.seed = read_value<uint64_t>(is, "seed:");
  stream.per_task_budget = read_value<long>(is, "per_task_budget:");
  int n_tasks = read_value<int>(is, "n_tasks:");
  for (int i = 0; i < n_tasks; ++i) {
    expect(is, "task:");
    int idx;
    is >> idx;
    Task t;
    t.reward_id = read_value<std::string>(is, "reward:");
    if (t.reward_id == "-") t.reward_id.clear();
    expect(is, "init:");
    std::vector<double> vals(schema.size());
    for (double& v : vals) is >> v;
    t.initial = make_state(schema, std::move(vals));
    int n_goal = read_value<int>(is, "n_goal:");
    for (int g = 0; g < n_goal; ++g) {
      expect(is, "g:");
      GoalConstraint c;
      std::string kind;
      is >> c.var >> kind;
      if (c.var < 0 || c.var >= static_cast<int>(schema.size()))
        throw std::runtime_error("stream: goal variable out of range");
      if (kind == "c") {
        is >> c.lo >> c.hi;
      } else if (kind == "d") {
        size_t count;
        is >> count;
        c.allowed.resize(count);
        for (int& a : c.allowed) is >> a;
      } else {
        throw std::runtime_error("stream: bad goal kind '" + kind + "'");
      }
      t.goal.constraints.push_back(std::move(c));
    }
    expect(is, "end_task");
    stream.tasks.push_back(std::move(t));
  }
  expect(is, "end_stream");
  return stream;
}

void save_task_stream_file(const std::string& path, const TaskStream& stream) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  save_task_stream(os, stream);
}

TaskStream load_task_stream_file(const std::string& path,
                                 const Schema& schema) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return load_task_stream(is, schema);
}

void CatIo::save(std::ostream& os, const Cat& cat) {
  os << "chirp-cat-v1\n";
  os << "lineage: " << cat.lineage_ << "\n";
  os << "min_width: " << fmt_double(cat.min_continuous_width_) << "\n";
  save_schema(os, cat.schema_);
  os << "n_nodes: " << cat.nodes_.size() << "\n";
  for (const CatNode& n : cat.nodes_) {
    os << "node: " << n.id << " " << n.parent << " " << n.depth << " "
       << (n.refined ? 1 : 0) << "\n";
    write_box(os, cat.schema_, n.box);
    if (n.refined) {
      os << "splits:";
      for (const SplitPoint& sp : n.splits)
        os << " " << (sp.split ? 1 : 0) << " " << fmt_double(sp.mid) << " "
           << sp.imid;
      os << "\n";
    }
  }
  os << "end_cat\n";
}

Cat CatIo::load(std::istream& is) {
  expect(is, "chirp-cat-v1");
  uint64_t lineage = read_value<uint64_t>(is, "lineage:");
  double min_width = read_value<double>(is, "min_width:");
  Schema schema = load_schema(is);
  Cat cat(schema);
  cat.lineage_ = lineage;
  cat.min_continuous_width_ = min_width;
  detail::ensure_lineage_floor(lineage);
  int n_nodes = read_value<int>(is, "n_nodes:");
  cat.nodes_.clear();
  cat.depth_max_ = 0;
  for (int i = 0; i < n_nodes; ++i) {
    expect(is, "node:");
    CatNode n;
    int refined;
    is >> n.id >> n.parent >> n.depth >> refined;
    if (n.id != i) throw std::runtime_error("cat: node ids must be dense");
    n.refined = refined != 0;
    n.box = read_box(is, schema);
    if (n.refined) {
      expect(is, "splits:");
      n.splits.resize(schema.size());
      for (SplitPoint& sp : n.splits) {
        int flag;
        is >> flag >> sp.mid >> sp.imid;
        sp.split = flag != 0;
      }
    }
    cat.depth_max_ = std::max(cat.depth_max_, n.depth);
    cat.nodes_.push_back(std::move(n));
  }
  expect(is, "end_cat");
  for (const CatNode& n : cat.nodes_)
    if (n.parent >= 0) cat.nodes_[n.parent].children.push_back(n.id);
  if (cat.nodes_.empty() || cat.nodes_[0].parent != -1)
    throw std::runtime_error("cat: missing root");
  return cat;
}

void save_cat(std::ostream& os, const Cat& cat) { CatIo::save(os, cat); }
Cat load_cat(std::istream& is) { return CatIo::load(is); }

void CheckpointIo::save(std::ostream& os, const Cat& cat,
                        const OptionModel& model, const std::string& rng_state,
                        int tasks_completed) {
  const Schema& schema = cat.schema();
  os << "chirp-checkpoint-v1\n";
  os << "tasks_completed: " << tasks_completed << "\n";
  os << "rng: " << rng_state << "\n";
  CatIo::save(os, cat);
  os << "n_options: " << model.size() << "\n";
  for (int i = 0; i < model.size(); ++i) {
    const AbstractOption& opt = model.options_[i];
    os << "option: " << i << "\n";
    os << "quality: " << fmt_double(model.quality_[i]) << "\n";
    os << "success_len: " << opt.recent_success_len << "\n";
    os << "needs_finetune: " << (opt.needs_finetune ? 1 : 0) << "\n";
    os << "term_from_delta: " << (opt.termination_from_delta ? 1 : 0) << "\n";
    os << "delta_vars: " << opt.delta_changed_vars.size();
    for (int v : opt.delta_changed_vars) os << " " << v;
    os << "\n";
    os << "prov_task: " << opt.provenance_task << "\n";
    os << "prov_seg: " << opt.provenance_segment << "\n";
    os << "train_start: " << opt.train_start.values.size();
    for (double v : opt.train_start.values) os << " " << fmt_double(v);
    os << "\n";
    os << "n_init: " << opt.initiation.size() << "\n";
    for (const Box& b : opt.initiation) write_box(os, schema, b);
    os << "n_term: " << opt.termination.size() << "\n";
    for (const Box& b : opt.termination) write_box(os, schema, b);
    CatIo::save(os, opt.cat);
    os << "policy: " << opt.policy.n_actions_ << " "
       << opt.policy.rows_.size() << "\n";
    std::vector<int> leaf_ids;
    for (const auto& [leaf, row] : opt.policy.rows_) leaf_ids.push_back(leaf);
    std::sort(leaf_ids.begin(), leaf_ids.end());
    for (int leaf : leaf_ids) {
      os << "q: " << leaf;
      for (double v : opt.policy.rows_.at(leaf)) os << " " << fmt_double(v);
      os << "\n";
    }
    os << "end_option\n";
  }
  os << "end_checkpoint\n";
}

Checkpoint CheckpointIo::load(std::istream& is) {
  expect(is, "chirp-checkpoint-v1");
  int tasks_completed = read_value<int>(is, "tasks_completed:");
  expect(is, "rng:");
  std::string rng_state;
  is >> std::ws;
  std::getline(is, rng_state);
  Checkpoint ck(CatIo::load(is));
  ck.tasks_completed = tasks_completed;
  ck.rng_state = rng_state;
  const Schema& schema = ck.cat.schema();
  int n_options = read_value<int>(is, "n_options:");
  for (int i = 0; i < n_options; ++i) {
    expect(is, "option:");
    int idx;
    is >> idx;
    double quality = read_value<double>(is, "quality:");
    int success_len = read_value<int>(is, "success_len:");
    int needs_finetune = read_value<int>(is, "needs_finetune:");
    int from_delta = read_value<int>(is, "term_from_delta:");
    expect(is, "delta_vars:");
    size_t n_vars;
    is >> n_vars;
    std::vector<int> delta_vars(n_vars);
    for (int& v : delta_vars) is >> v;
    int prov_task = read_value<int>(is, "prov_task:");
    int prov_seg = read_value<int>(is, "prov_seg:");
    expect(is, "train_start:");
    size_t n_start;
    is >> n_start;
    std::vector<double> start_vals(n_start);
    for (double& v : start_vals) is >> v;
    int n_init = read_value<int>(is, "n_init:");
    std::vector<Box> initiation;
    for (int k = 0; k < n_init; ++k) initiation.push_back(read_box(is, schema));
    int n_term = read_value<int>(is, "n_term:");
    std::vector<Box> termination;
    for (int k = 0; k < n_term; ++k) termination.push_back(read_box(is, schema));
    Cat opt_cat = CatIo::load(is);
    expect(is, "policy:");
    int n_actions, n_rows;
    is >> n_actions >> n_rows;
    QTable q(n_actions);
    for (int r = 0; r < n_rows; ++r) {
      expect(is, "q:");
      int leaf;
      is >> leaf;
      std::vector<double> row(n_actions);
      for (double& v : row) is >> v;
      q.rows_[leaf] = std::move(row);
    }
    expect(is, "end_option");

    AbstractOption opt(std::move(opt_cat), std::move(q));
    opt.initiation = std::move(initiation);
    opt.termination = std::move(termination);
    opt.train_start.values = std::move(start_vals);
    opt.recent_success_len = success_len;
    opt.needs_finetune = needs_finetune != 0;
    opt.termination_from_delta = from_delta != 0;
    opt.delta_changed_vars = std::move(delta_vars);
    opt.provenance_task = prov_task;
    opt.provenance_segment = prov_seg;
    ck.model.options_.push_back(std::move(opt));
    ck.model.quality_.push_back(quality);
  }
  expect(is, "end_checkpoint");
  if (!is) throw std::runtime_error("checkpoint: truncated");
  return ck;
}

void save_checkpoint_file(const std::string& path, const ChirpAgent& agent,
                          int tasks_completed) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  CheckpointIo::save(os, agent.cat(), agent.model(), agent.rng().save_state(),
                     tasks_completed);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return CheckpointIo::load(is);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

State parse_state(const Schema& schema, const std::string& text) {
  std::vector<double> vals(schema.size());
  std::vector<char> seen(schema.size(), 0);
  for (const std::string& part : split(text, ',')) {
    std::string p = trim(part);
    if (p.empty()) continue;
    size_t eq = p.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("state: expected name=value in '" + p + "'");
    int v = var_index(schema, trim(p.substr(0, eq)));
    vals[v] = std::stod(p.substr(eq + 1));
    seen[v] = 1;
  }
  for (size_t i = 0; i < schema.size(); ++i)
    if (!seen[i])
      throw std::invalid_argument("state: missing variable '" +
                                  schema[i].name + "'");
  return make_state(schema, std::move(vals));
}

GoalSpec parse_goal(const Schema& schema, const std::string& text) {
  GoalSpec goal;
  for (const std::string& part : split(text, ';')) {
    std::string p = trim(part);
    if (p.empty()) continue;
    size_t eq = p.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("goal: expected name=value in '" + p + "'");
    GoalConstraint c;
    c.var = var_index(schema, trim(p.substr(0, eq)));
    std::string rhs = trim(p.substr(eq + 1));
    if (schema[c.var].kind == VarKind::kContinuous) {
      // Accept [lo,hi) / [lo,hi] brackets or a bare point value v -> [v,v+1).
      if (!rhs.empty() && rhs.front() == '[') {
        std::string body = rhs.substr(1, rhs.size() - 2);
        std::vector<std::string> ends = split(body, ',');
        if (ends.size() != 2)
          throw std::invalid_argument("goal: bad interval '" + rhs + "'");
        c.lo = std::stod(ends[0]);
        c.hi = std::stod(ends[1]);
      } else {
        c.lo = std::stod(rhs);
        c.hi = c.lo + 1.0;
      }
    } else {
      for (const std::string& v : split(rhs, ','))
        c.allowed.push_back(std::stoi(trim(v)));
    }
    goal.constraints.push_back(std::move(c));
  }
  if (goal.constraints.empty())
    throw std::invalid_argument("goal: no constraints");
  return goal;
}

}  // namespace chirp
