#include <algorithm>

#include "chirp/planner.hpp"
#include "doctest.h"

using namespace chirp;

namespace {

Schema chain8_schema() {
  VariableSpec v;
  v.name = "x";
  v.kind = VarKind::kDiscrete;
  v.values = {0, 1, 2, 3, 4, 5, 6, 7};
  return {v};
}

State sv(double x) { return State{{x}}; }

GoalSpec upper_goal() {
  GoalSpec goal;
  GoalConstraint g;
  g.var = 0;
  g.allowed = {4, 5, 6, 7};
  goal.constraints.push_back(g);
  return goal;
}

}  // namespace

TEST_CASE("A* uses an option edge and the plan validates") {
  Cat cat(chain8_schema());
  cat.refine(cat.root());  // {0..3} / {4..7}
  int low = cat.leaf_of(sv(0));
  int high = cat.leaf_of(sv(5));

  OptionModel model;
  AbstractOption opt(cat, QTable(2));
  opt.initiation = {cat.node(low).box};
  opt.termination = {cat.node(high).box};
  model.update(std::move(opt), 1.0);

  PlannableCat graph = build_plannable_cat(cat, model);
  std::vector<int> goals = goal_nodes_of(cat, cat.schema(), upper_goal());
  CHECK(std::find(goals.begin(), goals.end(), high) != goals.end());

  Hyper h;
  OptionPlan plan = compute_option_plan(graph, low, goals, h);
  REQUIRE(plan.found);
  REQUIRE_FALSE(plan.steps.empty());
  CHECK(plan.steps.front().from == low);
  bool used_option = false;
  for (const PlanStep& s : plan.steps)
    if (s.option_index >= 0) used_option = true;
  CHECK(used_option);
  CHECK(validate_plan(graph, model, plan, low, goals));
}

TEST_CASE("plans without options collapse into one trainable signature") {
  Cat cat(chain8_schema());
  cat.refine(cat.root());
  int low = cat.leaf_of(sv(0));
  int high = cat.leaf_of(sv(5));

  OptionModel empty;
  PlannableCat graph = build_plannable_cat(cat, empty);
  std::vector<int> goals = goal_nodes_of(cat, cat.schema(), upper_goal());
  Hyper h;
  OptionPlan plan = compute_option_plan(graph, low, goals, h);
  REQUIRE(plan.found);
  std::vector<RefinedStep> refined = refine_plan(cat, plan, empty);
  REQUIRE(refined.size() == 1);
  CHECK(refined[0].option_index < 0);
  CHECK_FALSE(refined[0].signature.initiation.empty());
  CHECK_FALSE(refined[0].signature.termination.empty());
  CHECK(validate_plan(graph, empty, plan, low, goals));
  CHECK(high >= 0);
}

TEST_CASE("a start node inside the goal yields an empty found plan") {
  Cat cat(chain8_schema());
  cat.refine(cat.root());
  int high = cat.leaf_of(sv(5));
  OptionModel empty;
  PlannableCat graph = build_plannable_cat(cat, empty);
  std::vector<int> goals = goal_nodes_of(cat, cat.schema(), upper_goal());
  Hyper h;
  OptionPlan plan = compute_option_plan(graph, high, goals, h);
  CHECK(plan.found);
  CHECK(plan.steps.empty());
  CHECK(plan.cost == 0.0);
}

TEST_CASE("no goal nodes means no plan") {
  Cat cat(chain8_schema());
  OptionModel empty;
  PlannableCat graph = build_plannable_cat(cat, empty);
  Hyper h;
  OptionPlan plan = compute_option_plan(graph, cat.root(), {}, h);
  CHECK_FALSE(plan.found);
}

TEST_CASE("cold-start signatures run from the state's leaf to the goal") {
  Cat cat(chain8_schema());
  cat.refine(cat.root());
  OptionSignature sig = invent_option_signature(cat, sv(1), upper_goal());
  REQUIRE(sig.initiation.size() == 1);
  CHECK(box_contains(cat.schema(), sig.initiation[0], sv(1)));
  REQUIRE_FALSE(sig.termination.empty());
  for (const Box& b : sig.termination)
    CHECK(box_intersects_goal(cat.schema(), b, upper_goal()));
}
