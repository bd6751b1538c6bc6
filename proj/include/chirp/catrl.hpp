#pragma once

#include <ostream>
#include <unordered_map>
#include <vector>

#include "chirp/cat.hpp"
#include "chirp/mdp.hpp"
#include "chirp/rng.hpp"

namespace chirp {

struct Hyper {
  double alpha = 0.05;
  double gamma = 0.99;
  double eps0 = 1.0;
  double eps_decay = 0.997;
  double eps_min = 0.05;
  int stepmax = 500;
  int k_cap = 2;
  double s_factor = 10.0;
  int e_max = 500;
  double delta_thre = 0.0;
  double sigma_thre = 0.95;
  long budget = 1'500'000;
  double intrinsic_reward = 500.0;  // option MDP terminal reward
  // Learner internals.
  int eval_window = 50;        // episodes between greedy evaluations/refinements
  int eval_episodes = 20;      // greedy episodes per in-loop evaluation
  double learned_threshold = 0.9;
  double sigma_w1 = 0.5;
  double sigma_w2 = 0.5;
  // Context-variable identification: change-frequency ceiling and whether
  // refinement degrees are compared after normalizing by the variable's
  // maximum attainable degree.
  double ctx_freq_ceiling = 0.25;
  bool ctx_degree_normalized = true;
};

void validate_hyper(const Hyper& h);

// Tabular action values over CAT leaves. Rows for freshly materialized
// leaves inherit from the nearest ancestor that has one, so refinement
// warm-starts children from their parent.
class QTable {
 public:
  explicit QTable(int n_actions) : n_actions_(n_actions) {}

  int n_actions() const { return n_actions_; }
  bool has_row(int leaf) const { return rows_.count(leaf) > 0; }
  std::vector<double>& row(const Cat& cat, int leaf);
  double value(const Cat& cat, int leaf, int action) const;
  double max_value(const Cat& cat, int leaf) const;
  int greedy(const Cat& cat, int leaf) const;  // lowest-index tie break
  size_t row_count() const { return rows_.size(); }

 private:
  const std::vector<double>* find_inherited(const Cat& cat, int leaf) const;
  int n_actions_ = 0;
  std::unordered_map<int, std::vector<double>> rows_;
  friend struct CheckpointIo;
};

// One Q-learning update; returns the TD error used. Throws on a stale
// (non-leaf) id.
double q_update(QTable& q, const Cat& cat, int leaf, int action, double reward,
                int next_leaf, bool done, const Hyper& h);

// Epsilon-greedy with deterministic index tie-break.
int select_action(const QTable& q, const Cat& cat, int leaf, double eps,
                  Rng& rng);

struct LearnStats {
  long timesteps = 0;
  int episodes = 0;
  std::vector<double> episode_returns;
  int refinements = 0;
  int recent_success_len = 0;  // steps of the latest successful greedy episode
  int successes = 0;           // training episodes that reached termination
};

struct CatRlResult {
  LearnStats stats;
  bool learned = false;
};

// Q-learning over the CAT's leaves with online refinement of the leaves
// showing the highest TD-error dispersion. In option mode, training halts
// after e_max episodes without passing the greedy evaluation. If episode_csv
// is set, one "episode,steps,return,leaves,eps" row is written per episode.
CatRlResult run_catrl(MdpView& view, Cat& cat, QTable& q, const Hyper& h,
                      bool option_mode, Rng& rng,
                      std::ostream* episode_csv = nullptr);

struct EvalResult {
  double success_rate = 0.0;
  int last_success_len = 0;
};

// Greedy evaluation with fresh episode seeds; fraction of runs that reach
// the view's goal within its stepmax.
EvalResult evaluate_policy(MdpView& view, Cat& cat, const QTable& q,
                           int n_runs, Rng& rng);

}  // namespace chirp
