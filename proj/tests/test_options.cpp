#include <algorithm>

#include "chirp/options.hpp"
#include "doctest.h"

using namespace chirp;

namespace {

Schema xp_schema() {
  VariableSpec x{"x", VarKind::kContinuous, 0.0, 8.0, {}};
  VariableSpec p{"p", VarKind::kDiscrete, 0.0, 0.0, {0, 1}};
  return {x, p};
}

State sxp(double x, int p) { return State{{x, static_cast<double>(p)}}; }

// A walk x: 0.5 -> 7.5 with p flipping 0 -> 1 at x = 4.5.
Trajectory walk_with_flip() {
  Trajectory traj;
  for (int i = 0; i < 7; ++i) {
    Transition t;
    int p_before = i < 4 ? 0 : 1;
    int p_after = i < 3 ? 0 : 1;
    t.s = sxp(i + 0.5, p_before);
    t.action = 0;
    t.reward = -1.0;
    t.s2 = sxp(i + 1.5, p_after);
    t.done = i == 6;
    traj.steps.push_back(t);
  }
  return traj;
}

}  // namespace

TEST_CASE("composability is box-set inclusion of termination in initiation") {
  Schema schema = xp_schema();
  Cat cat(schema);
  cat.refine(cat.root());
  Box left = cat.node(cat.leaf_of(sxp(1.0, 0))).box;
  Box right = cat.node(cat.leaf_of(sxp(6.0, 0))).box;

  AbstractOption a(cat, QTable(2));
  a.initiation = {left};
  a.termination = {right};
  AbstractOption b(cat, QTable(2));
  b.initiation = {right, left};
  b.termination = {left};
  CHECK(composable(a, b));
  // a terminates in `right` but also initiates only from `left`.
  CHECK_FALSE(composable(a, a));
  AbstractOption c(cat, QTable(2));
  c.initiation = {right};
  c.termination = {left};
  CHECK_FALSE(composable(c, c));
}

TEST_CASE("option model dedups on endpoints and keeps the better policy") {
  Schema schema = xp_schema();
  Cat cat(schema);
  cat.refine(cat.root());
  Box left = cat.node(cat.leaf_of(sxp(1.0, 0))).box;
  Box right = cat.node(cat.leaf_of(sxp(6.0, 0))).box;

  OptionModel model;
  AbstractOption first(cat, QTable(2));
  first.initiation = {left};
  first.termination = {right};
  first.recent_success_len = 7;
  int i0 = model.update(std::move(first), 0.5);
  CHECK(model.size() == 1);

  AbstractOption dup(cat, QTable(2));
  dup.initiation = {left};
  dup.termination = {right};
  dup.recent_success_len = 3;
  int i1 = model.update(std::move(dup), 1.0);  // better quality replaces
  CHECK(model.size() == 1);
  CHECK(i0 == i1);
  CHECK(model.quality(0) == 1.0);
  CHECK(model.option(0).recent_success_len == 3);

  AbstractOption worse(cat, QTable(2));
  worse.initiation = {left};
  worse.termination = {right};
  worse.recent_success_len = 99;
  model.update(std::move(worse), 0.25);  // lower quality is ignored
  CHECK(model.option(0).recent_success_len == 3);

  AbstractOption other(cat, QTable(2));
  other.initiation = {right};
  other.termination = {left};
  model.update(std::move(other), 0.1);
  CHECK(model.size() == 2);
}

TEST_CASE("refinement degree grows with refinement") {
  Schema schema = xp_schema();
  Cat cat(schema);
  double before = refinement_degree(cat, 0);
  CHECK(before == 0.0);
  cat.refine(cat.root());
  cat.leaf_of(sxp(1.0, 0));
  cat.leaf_of(sxp(6.0, 1));
  CHECK(refinement_degree(cat, 0) > before);
}

TEST_CASE("context variables: rare-change, highly refined wins") {
  Schema schema = xp_schema();
  Cat cat(schema);
  cat.refine(cat.root());
  Trajectory traj = walk_with_flip();
  for (const Transition& t : traj.steps) {
    cat.leaf_of(t.s);
    cat.leaf_of(t.s2);
  }
  Hyper h;
  std::vector<int> ctx = identify_context_variables(cat, traj, h);
  // x changes every step; p flips once and is fully split in the CAT.
  CHECK(std::find(ctx.begin(), ctx.end(), 1) != ctx.end());
  CHECK(std::find(ctx.begin(), ctx.end(), 0) == ctx.end());
}

TEST_CASE("endpoints mark both sides of a context change with provenance") {
  Schema schema = xp_schema();
  Cat cat(schema);
  cat.refine(cat.root());
  Trajectory traj = walk_with_flip();
  for (const Transition& t : traj.steps) {
    cat.leaf_of(t.s);
    cat.leaf_of(t.s2);
  }
  // Deepen the post-flip region: the context-change distance counts retained
  // subtree depth, so a depth-1 tree would register a zero distance.
  cat.refine(cat.leaf_of(sxp(4.5, 1)));
  for (const Transition& t : traj.steps) {
    cat.leaf_of(t.s);
    cat.leaf_of(t.s2);
  }
  std::vector<int> ctx{1};  // p
  std::vector<Ccat> ccats;
  ccats.push_back(make_ccat(cat, traj.steps[0].s, ctx));
  for (const Transition& t : traj.steps)
    ccats.push_back(make_ccat(cat, t.s2, ctx));

  Hyper h;
  EndpointSequence seq = identify_endpoints(cat, ccats, traj, h);
  REQUIRE(seq.endpoints.size() >= 2);
  CHECK(seq.endpoints.front().path_index == 0);
  CHECK(seq.endpoints.back().path_index ==
        static_cast<int>(seq.path.size()) - 1);
  int delta_marked = 0;
  for (const Endpoint& e : seq.endpoints)
    if (e.from_delta) {
      ++delta_marked;
      CHECK(std::find(e.changed_vars.begin(), e.changed_vars.end(), 1) !=
            e.changed_vars.end());
    }
  CHECK(delta_marked >= 2);  // both sides of the p flip
}

TEST_CASE("rollout throws when the start already satisfies the goal") {
  class Done : public MdpView {
   public:
    State reset(Rng&) override { return State{{0.0, 0.0}}; }
    StepOutcome step(const State& s, int, Rng&) override {
      return {s, 0.0, true, false};
    }
    bool at_goal(const State&) const override { return true; }
    int n_actions() const override { return 2; }
    int stepmax() const override { return 10; }
    long budget_left() const override { return 1000; }
  };
  Schema schema = xp_schema();
  Cat cat(schema);
  QTable q(2);
  Done view;
  Rng rng(1);
  CHECK_THROWS(rollout(view, cat, q, rng));
}
