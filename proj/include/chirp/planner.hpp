#pragma once

#include <vector>

#include "chirp/options.hpp"

namespace chirp {

// Edge of the plannable graph. option_index >= 0 selects an invented option;
// kLiftedEdge links same-depth ancestors of option endpoints; kTreeEdge is a
// parent/child hop.
struct PlanEdge {
  int from = -1;
  int to = -1;
  double cost = 0.0;
  int option_index = -1;
};

inline constexpr int kLiftedEdge = -1;
inline constexpr int kTreeEdge = -2;

struct PlannableCat {
  Cat* cat = nullptr;
  std::vector<PlanEdge> edges;
  std::vector<std::vector<int>> adj;  // node id -> edge indices
};

// Graph over every CAT node: option edges between each initiation/termination
// node pair (cost 1), lifted copies of those edges between same-depth
// ancestors while distinct (cost 1 + depth_max - depth), and bidirectional
// tree edges (cost 1 + depth_max).
PlannableCat build_plannable_cat(Cat& cat, const OptionModel& model);

// CAT nodes whose box lies entirely inside the goal set.
std::vector<int> goal_nodes_of(const Cat& cat, const Schema& schema,
                               const GoalSpec& goal);

struct PlanStep {
  int from = -1;
  int to = -1;
  int option_index = -1;  // >= 0, or kLiftedEdge / kTreeEdge
};

struct OptionPlan {
  bool found = false;
  std::vector<PlanStep> steps;
  double cost = 0.0;
};

// A* over the plannable graph from the start node to any goal node, guided
// by the minimum sigma distance to a goal. Deterministic tie-breaking.
OptionPlan compute_option_plan(const PlannableCat& graph, int start_node,
                               const std::vector<int>& goal_nodes,
                               const Hyper& h);

// One executable plan element: either an existing option (index >= 0) or a
// signature for an option that must be trained first.
struct RefinedStep {
  int option_index = -1;
  OptionSignature signature;  // valid when option_index < 0
};

// Collapse each maximal run of non-option edges into a single signature to
// train; option edges pass through unchanged.
std::vector<RefinedStep> refine_plan(const Cat& cat, const OptionPlan& plan,
                                     const OptionModel& model);

// Cold-start signature: from the state's leaf to the goal region (nodes
// contained in the goal, else leaves intersecting it).
OptionSignature invent_option_signature(Cat& cat, const State& s,
                                        const GoalSpec& goal);

// Structural sanity of a plan: edges chain, option edges exist in the model
// with matching endpoint boxes, and the last node is a goal node.
bool validate_plan(const PlannableCat& graph, const OptionModel& model,
                   const OptionPlan& plan, int start_node,
                   const std::vector<int>& goal_nodes);

}  // namespace chirp
