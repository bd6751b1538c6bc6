#include "chirp/options.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace chirp {

namespace {

bool box_in_set(const std::vector<Box>& set, const Box& b) {
  return std::find(set.begin(), set.end(), b) != set.end();
}

bool same_box_set(const std::vector<Box>& a, const std::vector<Box>& b) {
  if (a.size() != b.size()) return false;
  for (const Box& x : a)
    if (!box_in_set(b, x)) return false;
  for (const Box& x : b)
    if (!box_in_set(a, x)) return false;
  return true;
}

}  // namespace

bool composable(const AbstractOption& a, const AbstractOption& b) {
  for (const Box& t : a.termination)
    if (!box_in_set(b.initiation, t)) return false;
  return true;
}

int OptionModel::update(AbstractOption opt, double quality) {
  for (size_t i = 0; i < options_.size(); ++i) {
    if (same_box_set(options_[i].initiation, opt.initiation) &&
        same_box_set(options_[i].termination, opt.termination)) {
      if (quality > quality_[i]) {
        options_[i] = std::move(opt);
        quality_[i] = quality;
      }
      return static_cast<int>(i);
    }
  }
  options_.push_back(std::move(opt));
  quality_.push_back(quality);
  return static_cast<int>(options_.size()) - 1;
}

Trajectory rollout(MdpView& view, Cat& cat, const QTable& policy, Rng& rng,
                   int retries) {
  for (int attempt = 0; attempt < retries; ++attempt) {
    Trajectory traj;
    State s = view.reset(rng);
    if (view.at_goal(s))
      throw std::runtime_error("rollout: initial state already at goal");
    bool reached = false;
    for (int t = 0; t < view.stepmax(); ++t) {
      if (view.budget_left() <= 0)
        throw std::runtime_error("rollout: budget exhausted");
      int a = policy.greedy(cat, cat.leaf_of(s));
      StepOutcome out = view.step(s, a, rng);
      traj.steps.push_back({s, a, out.reward, out.next_state, out.done});
      s = out.next_state;
      if (out.done) {
        reached = true;
        break;
      }
    }
    if (reached) return traj;
  }
  throw std::runtime_error("rollout: no successful greedy episode after " +
                           std::to_string(retries) + " attempts");
}

double refinement_degree(const Cat& cat, int var) {
  const VariableSpec& spec = cat.schema().at(var);
  double domain = spec.measure();
  if (domain <= 0.0) return 0.0;
  std::vector<int> leaves = cat.leaves();
  double total = 0.0;
  for (int leaf : leaves)
    total += interval_measure(spec, cat.node(leaf).box.ivs[var]) / domain;
  return 1.0 - total / static_cast<double>(leaves.size());
}

namespace {

// Largest fraction of the domain a single atomic interval can keep, i.e.
// the floor that refinement can never push the mean leaf measure below.
double atomic_fraction(const Cat& cat, const VariableSpec& spec) {
  if (spec.kind == VarKind::kDiscrete) {
    return spec.values.empty() ? 1.0 : 1.0 / spec.measure();
  }
  double w = spec.measure();
  if (w <= 0.0) return 1.0;
  double cur = w;
  while (cur > cat.min_continuous_width()) cur /= 2.0;
  return cur / w;
}

}  // namespace

std::vector<int> identify_context_variables(const Cat& cat,
                                            const Trajectory& traj,
                                            const Hyper& h) {
  const Schema& schema = cat.schema();
  int n_vars = static_cast<int>(schema.size());
  if (traj.steps.empty()) return {};

  std::vector<double> freq(n_vars, 0.0);
  for (const Transition& tr : traj.steps)
    for (int v = 0; v < n_vars; ++v)
      if (tr.s.values[v] != tr.s2.values[v]) freq[v] += 1.0;
  for (double& f : freq) f /= static_cast<double>(traj.steps.size());

  std::vector<double> sorted = freq;
  std::sort(sorted.begin(), sorted.end());
  double median = (n_vars % 2 == 1)
                      ? sorted[n_vars / 2]
                      : 0.5 * (sorted[n_vars / 2 - 1] + sorted[n_vars / 2]);

  std::vector<double> degree(n_vars, 0.0);
  double mean_degree = 0.0;
  for (int v = 0; v < n_vars; ++v) {
    degree[v] = refinement_degree(cat, v);
    if (h.ctx_degree_normalized) {
      double cap = 1.0 - atomic_fraction(cat, schema[v]);
      degree[v] = cap > 0.0 ? degree[v] / cap : 0.0;
    }
    mean_degree += degree[v];
  }
  mean_degree /= static_cast<double>(n_vars);

  std::vector<int> ctx;
  for (int v = 0; v < n_vars; ++v)
    if (freq[v] < median && freq[v] <= h.ctx_freq_ceiling &&
        degree[v] > mean_degree)
      ctx.push_back(v);
  return ctx;
}

EndpointSequence identify_endpoints(Cat& cat, const std::vector<Ccat>& ccats,
                                    const Trajectory& traj, const Hyper& h) {
  if (traj.steps.empty())
    throw std::invalid_argument("identify_endpoints: empty trajectory");
  if (!traj.chained())
    throw std::invalid_argument("identify_endpoints: unchained trajectory");
  size_t n_states = traj.steps.size() + 1;
  if (ccats.size() != n_states)
    throw std::invalid_argument("identify_endpoints: need one C-CAT per state");

  auto state_at = [&](size_t i) -> const State& {
    return i < traj.steps.size() ? traj.steps[i].s : traj.steps.back().s2;
  };

  EndpointSequence seq;
  std::vector<int> path_idx_of(n_states);
  for (size_t i = 0; i < n_states; ++i) {
    int leaf = cat.leaf_of(state_at(i));
    if (seq.path.empty() || seq.path.back() != leaf) {
      seq.path.push_back(leaf);
      seq.path_start.push_back(static_cast<int>(i));
    }
    path_idx_of[i] = static_cast<int>(seq.path.size()) - 1;
  }

  int last = static_cast<int>(seq.path.size()) - 1;
  struct Mark {
    bool from_delta = false;
    bool from_sigma = false;
    std::vector<int> changed_vars;
  };
  std::vector<Mark> marks(seq.path.size());
  std::set<int> chosen = {0, last};

  // Context-specific abstraction changes: both sides of any transition whose
  // C-CAT distance exceeds the threshold become endpoints.
  for (size_t i = 0; i + 1 < n_states; ++i) {
    if (delta_distance(ccats[i], ccats[i + 1]) <= h.delta_thre) continue;
    std::vector<int> changed;
    for (size_t v = 0; v < cat.schema().size(); ++v)
      if (state_at(i).values[v] != state_at(i + 1).values[v])
        changed.push_back(static_cast<int>(v));
    for (int idx : {path_idx_of[i], path_idx_of[i + 1]}) {
      chosen.insert(idx);
      marks[idx].from_delta = true;
      for (int v : changed)
        if (std::find(marks[idx].changed_vars.begin(),
                      marks[idx].changed_vars.end(),
                      v) == marks[idx].changed_vars.end())
          marks[idx].changed_vars.push_back(v);
    }
  }

  // Decompose each remaining segment at unusually large abstract jumps.
  std::vector<int> anchors(chosen.begin(), chosen.end());
  for (size_t k = 0; k + 1 < anchors.size(); ++k) {
    int a = anchors[k], b = anchors[k + 1];
    if (b - a < 2) continue;
    double sigma_max = 0.0;
    std::vector<double> sig(b - a);
    for (int i = a; i < b; ++i) {
      sig[i - a] = sigma_distance(cat, seq.path[i], seq.path[i + 1], h.sigma_w1,
                                  h.sigma_w2);
      sigma_max = std::max(sigma_max, sig[i - a]);
    }
    for (int i = a; i < b; ++i) {
      if (sig[i - a] > h.sigma_thre * sigma_max && i + 1 != b) {
        chosen.insert(i + 1);
        marks[i + 1].from_sigma = true;
      }
    }
  }

  for (int idx : chosen) {
    Endpoint e;
    e.node = seq.path[idx];
    e.path_index = idx;
    e.from_delta = marks[idx].from_delta;
    e.from_sigma = marks[idx].from_sigma;
    e.changed_vars = marks[idx].changed_vars;
    seq.endpoints.push_back(e);
  }
  if (seq.endpoints.size() < 2) {
    // Degenerate single-leaf trajectory: duplicate the endpoint so the
    // sequence still reads start -> goal.
    seq.endpoints.push_back(seq.endpoints.front());
  }
  return seq;
}

std::vector<AbstractOption> invent_options(Cat& cat, const QTable& policy,
                                           const Trajectory& traj,
                                           const Hyper& h,
                                           const OptionViewFactory& factory,
                                           Rng& rng) {
  std::vector<int> ctx = identify_context_variables(cat, traj, h);

  auto state_at = [&](size_t i) -> const State& {
    return i < traj.steps.size() ? traj.steps[i].s : traj.steps.back().s2;
  };
  size_t n_states = traj.steps.size() + 1;
  std::vector<Ccat> ccats;
  ccats.reserve(n_states);
  for (size_t i = 0; i < n_states; ++i)
    ccats.push_back(make_ccat(cat, state_at(i), ctx));

  EndpointSequence seq = identify_endpoints(cat, ccats, traj, h);

  std::vector<AbstractOption> invented;
  for (size_t k = 0; k + 1 < seq.endpoints.size(); ++k) {
    const Endpoint& from = seq.endpoints[k];
    const Endpoint& to = seq.endpoints[k + 1];
    if (to.path_index <= from.path_index) continue;

    Box term_box = cat.node(to.node).box;
    // Initiation: the opening endpoint plus its siblings crossed inside the
    // segment (states that drift off the nominal entry can still start it).
    std::vector<Box> initiation = {cat.node(from.node).box};
    int from_parent = cat.node(from.node).parent;
    for (int i = from.path_index + 1; i < to.path_index; ++i) {
      int nid = seq.path[i];
      if (cat.node(nid).parent == from_parent &&
          !box_in_set(initiation, cat.node(nid).box))
        initiation.push_back(cat.node(nid).box);
    }
    initiation.erase(
        std::remove(initiation.begin(), initiation.end(), term_box),
        initiation.end());
    if (initiation.empty()) continue;

    AbstractOption opt(cat, policy);
    opt.initiation = std::move(initiation);
    opt.termination = {term_box};
    opt.provenance_segment = static_cast<int>(k);
    opt.train_start = state_at(seq.path_start[from.path_index]);
    opt.termination_from_delta = to.from_delta;
    opt.delta_changed_vars = to.changed_vars;
    opt.recent_success_len =
        seq.path_start[to.path_index] - seq.path_start[from.path_index];

    if (factory) {
      int stepmax = std::max(
          1, static_cast<int>(std::lround(h.s_factor * std::max(
                                  1, opt.recent_success_len))));
      std::unique_ptr<MdpView> view =
          factory(opt.termination, opt.train_start, stepmax);
      if (view && view->budget_left() > 0) {
        CatRlResult r =
            run_catrl(*view, opt.cat, opt.policy, h, /*option_mode=*/true, rng);
        if (r.stats.recent_success_len > 0)
          opt.recent_success_len = r.stats.recent_success_len;
        opt.needs_finetune = !r.learned;
      }
    }
    invented.push_back(std::move(opt));
  }
  return invented;
}

std::vector<AbstractOption> invent_options(Cat& cat, const QTable& policy,
                                           MdpView& view, const Hyper& h,
                                           const OptionViewFactory& factory,
                                           Rng& rng) {
  Trajectory traj = rollout(view, cat, policy, rng);
  return invent_options(cat, policy, traj, h, factory, rng);
}

}  // namespace chirp
