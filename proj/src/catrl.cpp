#include "chirp/catrl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chirp {

void validate_hyper(const Hyper& h) {
  if (!(h.alpha > 0.0 && h.alpha <= 1.0))
    throw std::invalid_argument("hyper: need 0 < alpha <= 1");
  if (!(h.gamma > 0.0 && h.gamma <= 1.0))
    throw std::invalid_argument("hyper: need 0 < gamma <= 1");
  if (!(h.eps_min > 0.0 && h.eps_min <= 1.0))
    throw std::invalid_argument("hyper: need 0 < eps_min <= 1");
  if (h.k_cap < 1) throw std::invalid_argument("hyper: need k_cap >= 1");
  if (h.stepmax <= 0) throw std::invalid_argument("hyper: need stepmax > 0");
}

const std::vector<double>* QTable::find_inherited(const Cat& cat,
                                                  int leaf) const {
  int cur = leaf;
  while (cur >= 0) {
    auto it = rows_.find(cur);
    if (it != rows_.end()) return &it->second;
    cur = cat.node(cur).parent;
  }
  return nullptr;
}

std::vector<double>& QTable::row(const Cat& cat, int leaf) {
  auto it = rows_.find(leaf);
  if (it != rows_.end()) return it->second;
  const std::vector<double>* inherited = find_inherited(cat, leaf);
  auto& r = rows_[leaf];
  if (inherited)
    r = *inherited;
  else
    r.assign(n_actions_, 0.0);
  return r;
}

double QTable::value(const Cat& cat, int leaf, int action) const {
  const std::vector<double>* r = find_inherited(cat, leaf);
  return r ? (*r)[action] : 0.0;
}

double QTable::max_value(const Cat& cat, int leaf) const {
  const std::vector<double>* r = find_inherited(cat, leaf);
  if (!r) return 0.0;
  return *std::max_element(r->begin(), r->end());
}

int QTable::greedy(const Cat& cat, int leaf) const {
  const std::vector<double>* r = find_inherited(cat, leaf);
  if (!r) return 0;
  int best = 0;
  for (int a = 1; a < n_actions_; ++a)
    if ((*r)[a] > (*r)[best]) best = a;
  return best;
}

double q_update(QTable& q, const Cat& cat, int leaf, int action, double reward,
                int next_leaf, bool done, const Hyper& h) {
  if (!cat.is_leaf(leaf) || !cat.is_leaf(next_leaf))
    throw std::invalid_argument("q_update: stale leaf id");
  double bootstrap = done ? 0.0 : h.gamma * q.max_value(cat, next_leaf);
  std::vector<double>& r = q.row(cat, leaf);
  double td = reward + bootstrap - r[action];
  r[action] += h.alpha * td;
  return td;
}

int select_action(const QTable& q, const Cat& cat, int leaf, double eps,
                  Rng& rng) {
  if (eps < 0.0 || eps > 1.0)
    throw std::invalid_argument("select_action: eps outside [0,1]");
  if (rng.uniform() < eps) return rng.uniform_int(q.n_actions());
  return q.greedy(cat, leaf);
}

namespace {

struct LeafTdStats {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n) : 0.0; }
};

// Refine up to k_cap leaves whose TD-error variance exceeds the mean leaf
// variance; returns how many were refined. Q rows inherit lazily.
int refine_high_dispersion(Cat& cat, QTable& q,
                           std::unordered_map<int, LeafTdStats>& td,
                           const Hyper& h) {
  std::vector<std::pair<double, int>> ranked;
  double total = 0.0;
  int counted = 0;
  for (const auto& [leaf, st] : td) {
    if (!cat.is_leaf(leaf) || st.n < 2) continue;
    double v = st.variance();
    total += v;
    ++counted;
    ranked.push_back({v, leaf});
  }
  if (counted == 0) return 0;
  double mean = total / counted;
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  int refined = 0;
  for (const auto& [v, leaf] : ranked) {
    if (refined >= h.k_cap) break;
    if (v < mean || v == 0.0) break;
    if (!cat.splittable(leaf)) continue;
    q.row(cat, leaf);  // pin the parent row so children inherit it
    cat.refine(leaf);
    td.erase(leaf);
    ++refined;
  }
  return refined;
}

}  // namespace

EvalResult evaluate_policy(MdpView& view, Cat& cat, const QTable& q,
                           int n_runs, Rng& rng) {
  if (n_runs < 1) throw std::invalid_argument("evaluate_policy: n_runs < 1");
  EvalResult res;
  int successes = 0;
  for (int run = 0; run < n_runs; ++run) {
    State s = view.reset(rng);
    if (view.at_goal(s)) {
      ++successes;
      res.last_success_len = 0;
      continue;
    }
    for (int t = 0; t < view.stepmax(); ++t) {
      if (view.budget_left() <= 0) break;
      int a = q.greedy(cat, cat.leaf_of(s));
      StepOutcome out = view.step(s, a, rng);
      s = out.next_state;
      if (out.done) {
        ++successes;
        res.last_success_len = t + 1;
        break;
      }
    }
    if (view.budget_left() <= 0) break;
  }
  res.success_rate = static_cast<double>(successes) / n_runs;
  return res;
}

CatRlResult run_catrl(MdpView& view, Cat& cat, QTable& q, const Hyper& h,
                      bool option_mode, Rng& rng, std::ostream* episode_csv) {
  validate_hyper(h);
  if (view.budget_left() <= 0)
    throw std::invalid_argument("run_catrl: budget <= 0");
  CatRlResult res;
  std::unordered_map<int, LeafTdStats> td;
  double eps = h.eps0;
  long t0 = view.budget_left();
  if (episode_csv) (*episode_csv) << "episode,steps,return,leaves,eps\n";

  for (int episode = 0;; ++episode) {
    if (view.budget_left() <= 0) break;
    if (episode % h.eval_window == 0) {
      EvalResult ev = evaluate_policy(view, cat, q, h.eval_episodes, rng);
      if (ev.last_success_len > 0)
        res.stats.recent_success_len = ev.last_success_len;
      if (ev.success_rate >= h.learned_threshold) {
        res.learned = true;
        break;
      }
      // An option whose termination was never reached even once under
      // exploration is most likely unreachable from this start; give up
      // before it drains the budget.
      if (option_mode && episode > 0 && res.stats.successes == 0 &&
          ev.success_rate == 0.0)
        break;
      if (episode > 0)
        res.stats.refinements += refine_high_dispersion(cat, q, td, h);
    }
    if (option_mode && episode >= h.e_max) break;
    if (view.budget_left() <= 0) break;

    State s = view.reset(rng);
    double ret = 0.0;
    int steps = 0;
    for (int t = 0; t < view.stepmax(); ++t) {
      if (view.budget_left() <= 0) break;
      int leaf = cat.leaf_of(s);
      int a = select_action(q, cat, leaf, eps, rng);
      StepOutcome out = view.step(s, a, rng);
      int next_leaf = cat.leaf_of(out.next_state);
      double err = q_update(q, cat, leaf, a, out.reward, next_leaf, out.done, h);
      td[leaf].add(err);
      ret += out.reward;
      ++steps;
      s = out.next_state;
      if (out.done) {
        ++res.stats.successes;
        break;
      }
    }
    ++res.stats.episodes;
    res.stats.episode_returns.push_back(ret);
    if (episode_csv)
      (*episode_csv) << episode << "," << steps << "," << ret << ","
                     << cat.leaf_count() << "," << eps << "\n";
    eps = std::max(h.eps_min, eps * h.eps_decay);
  }
  res.stats.timesteps = t0 - view.budget_left();
  return res;
}

}  // namespace chirp
