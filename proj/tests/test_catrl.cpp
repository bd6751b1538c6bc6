#include <algorithm>
#include <cmath>

#include "chirp/catrl.hpp"
#include "doctest.h"

using namespace chirp;

namespace {

Schema chain_schema() {
  VariableSpec v;
  v.name = "x";
  v.kind = VarKind::kDiscrete;
  v.values = {0, 1, 2, 3, 4};
  return {v};
}

}  // namespace

TEST_CASE("q_update arithmetic matches the worked example") {
  Cat cat(chain_schema());
  QTable q(2);
  Hyper h;
  h.alpha = 0.05;
  h.gamma = 0.99;
  int leaf = cat.leaf_of(State{{0.0}});
  // Q=0 everywhere, r=-1, non-terminal: new Q = 0.05 * (-1 + 0.99*0) = -0.05.
  double td = q_update(q, cat, leaf, 0, -1.0, leaf, false, h);
  CHECK(td == -1.0);
  CHECK(q.value(cat, leaf, 0) == -0.05);
  CHECK(q.value(cat, leaf, 1) == 0.0);
}

TEST_CASE("q_update rejects stale (refined) leaf ids") {
  Cat cat(chain_schema());
  QTable q(2);
  Hyper h;
  int root = cat.root();
  cat.refine(root);
  CHECK_THROWS(q_update(q, cat, root, 0, -1.0, root, false, h));
}

TEST_CASE("q rows inherit from the nearest ancestor") {
  Cat cat(chain_schema());
  QTable q(2);
  Hyper h;
  int root = cat.root();
  q.row(cat, root) = {1.5, -2.0};
  cat.refine(root);
  int leaf = cat.leaf_of(State{{0.0}});
  CHECK(q.value(cat, leaf, 0) == 1.5);
  CHECK(q.greedy(cat, leaf) == 0);
  // Writing to the child must not touch the parent row.
  q_update(q, cat, leaf, 0, -1.0, leaf, false, h);
  CHECK(q.value(cat, leaf, 0) != 1.5);
}

TEST_CASE("greedy ties break to the lowest action index") {
  Cat cat(chain_schema());
  QTable q(3);
  CHECK(q.greedy(cat, cat.root()) == 0);
}

TEST_CASE("select_action validates epsilon") {
  Cat cat(chain_schema());
  QTable q(2);
  Rng rng(7);
  CHECK_THROWS(select_action(q, cat, cat.root(), 1.5, rng));
}

TEST_CASE("run_catrl learns the chain and refines the CAT") {
  // Goal in the middle, starts alternating between the two ends: a single
  // abstract state cannot represent the optimal policy, forcing refinement.
  class TwoSidedChain : public MdpView {
   public:
    State reset(Rng&) override {
      flip_ = !flip_;
      return State{{flip_ ? 0.0 : 4.0}};
    }
    StepOutcome step(const State& s, int action, Rng&) override {
      int x = static_cast<int>(s.values[0]);
      int nx = std::clamp(action == 1 ? x + 1 : x - 1, 0, 4);
      StepOutcome out;
      out.next_state = State{{static_cast<double>(nx)}};
      out.done = nx == 2;
      out.reward = out.done ? 10.0 : -1.0;
      return out;
    }
    bool at_goal(const State& s) const override { return s.values[0] == 2.0; }
    int n_actions() const override { return 2; }
    int stepmax() const override { return 50; }
    long budget_left() const override { return 1'000'000'000L; }

   private:
    bool flip_ = false;
  };
  Cat cat(chain_schema());
  QTable q(2);
  TwoSidedChain view;
  Hyper h;
  h.eps_decay = 0.99;
  h.stepmax = 50;
  h.k_cap = 5;
  Rng rng(11);
  CatRlResult r = run_catrl(view, cat, q, h, /*option_mode=*/false, rng);
  CHECK(r.learned);
  CHECK(cat.leaf_count() > 1);  // dispersion triggered refinement
  // The learned greedy policy walks toward the middle from either end.
  CHECK(q.greedy(cat, cat.leaf_of(State{{0.0}})) == 1);
  CHECK(q.greedy(cat, cat.leaf_of(State{{4.0}})) == 0);
  EvalResult ev = evaluate_policy(view, cat, q, 20, rng);
  CHECK(ev.success_rate >= 0.9);
}

TEST_CASE("option mode halts at e_max when the target is never reached") {
  // Termination is unreachable: goal x=4 but moves are clamped at 3 by a
  // view that never emits done.
  class Hopeless : public MdpView {
   public:
    State reset(Rng&) override { return State{{0.0}}; }
    StepOutcome step(const State& s, int action, Rng&) override {
      int x = static_cast<int>(s.values[0]);
      int nx = std::clamp(action == 1 ? x + 1 : x - 1, 0, 3);
      return {State{{static_cast<double>(nx)}}, -1.0, false, false};
    }
    bool at_goal(const State&) const override { return false; }
    int n_actions() const override { return 2; }
    int stepmax() const override { return 20; }
    long budget_left() const override { return 1'000'000'000L; }
  };
  Cat cat(chain_schema());
  QTable q(2);
  Hopeless view;
  Hyper h;
  h.e_max = 30;
  h.eval_window = 10;
  Rng rng(13);
  CatRlResult r = run_catrl(view, cat, q, h, /*option_mode=*/true, rng);
  CHECK_FALSE(r.learned);
  // The zero-success early abort fires at the first window boundary.
  CHECK(r.stats.episodes <= h.e_max);
  CHECK(r.stats.successes == 0);
}
