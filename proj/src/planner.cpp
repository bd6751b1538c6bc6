#include "chirp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace chirp {

PlannableCat build_plannable_cat(Cat& cat, const OptionModel& model) {
  PlannableCat g;
  g.cat = &cat;
  double dmax = static_cast<double>(cat.depth_max());

  auto add_edge = [&](int from, int to, double cost, int option_index) {
    g.edges.push_back({from, to, cost, option_index});
  };

  for (int i = 0; i < model.size(); ++i) {
    const AbstractOption& opt = model.option(i);
    std::vector<int> inits, terms;
    for (const Box& b : opt.initiation) inits.push_back(cat.node_of_box(b));
    for (const Box& b : opt.termination) terms.push_back(cat.node_of_box(b));
    for (int u : inits)
      for (int v : terms) {
        add_edge(u, v, 1.0, i);
        // Lifted edges between same-depth ancestors while they stay distinct.
        int au = cat.node(u).parent, av = cat.node(v).parent;
        while (au >= 0 && av >= 0 && au != av) {
          add_edge(au, av, 1.0 + dmax - cat.node(au).depth, kLiftedEdge);
          au = cat.node(au).parent;
          av = cat.node(av).parent;
        }
      }
  }

  for (int id = 0; id < cat.node_count(); ++id) {
    for (int child : cat.node(id).children) {
      add_edge(id, child, 1.0 + dmax, kTreeEdge);
      add_edge(child, id, 1.0 + dmax, kTreeEdge);
    }
  }

  g.adj.assign(cat.node_count(), {});
  for (size_t e = 0; e < g.edges.size(); ++e)
    g.adj[g.edges[e].from].push_back(static_cast<int>(e));
  return g;
}

std::vector<int> goal_nodes_of(const Cat& cat, const Schema& schema,
                               const GoalSpec& goal) {
  std::vector<int> out;
  for (int id = 0; id < cat.node_count(); ++id)
    if (box_within_goal(schema, cat.node(id).box, goal)) out.push_back(id);
  return out;
}

OptionPlan compute_option_plan(const PlannableCat& graph, int start_node,
                               const std::vector<int>& goal_nodes,
                               const Hyper& h) {
  OptionPlan plan;
  if (!graph.cat) throw std::invalid_argument("compute_option_plan: no CAT");
  const Cat& cat = *graph.cat;
  int n = cat.node_count();
  if (start_node < 0 || start_node >= n)
    throw std::invalid_argument("compute_option_plan: bad start node");
  if (goal_nodes.empty()) return plan;

  std::vector<char> is_goal_node(n, 0);
  for (int gid : goal_nodes) is_goal_node.at(gid) = 1;
  if (is_goal_node[start_node]) {
    plan.found = true;
    return plan;
  }

  auto heuristic = [&](int node) {
    double best = std::numeric_limits<double>::infinity();
    for (int gid : goal_nodes)
      best = std::min(best,
                      sigma_distance(cat, node, gid, h.sigma_w1, h.sigma_w2));
    return best;
  };

  struct QEntry {
    double f, g;
    long order;
    int node;
    bool operator>(const QEntry& o) const {
      if (f != o.f) return f > o.f;
      if (g != o.g) return g > o.g;
      return order > o.order;
    }
  };
  std::priority_queue<QEntry, std::vector<QEntry>, std::greater<QEntry>> open;
  std::vector<double> best_g(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent_edge(n, -1);
  long order = 0;

  best_g[start_node] = 0.0;
  open.push({heuristic(start_node), 0.0, order++, start_node});
  int reached = -1;
  while (!open.empty()) {
    QEntry cur = open.top();
    open.pop();
    if (cur.g > best_g[cur.node]) continue;
    if (is_goal_node[cur.node]) {
      reached = cur.node;
      break;
    }
    if (cur.node >= static_cast<int>(graph.adj.size())) continue;
    for (int ei : graph.adj[cur.node]) {
      const PlanEdge& e = graph.edges[ei];
      double ng = cur.g + e.cost;
      if (ng < best_g[e.to]) {
        best_g[e.to] = ng;
        parent_edge[e.to] = ei;
        open.push({ng + heuristic(e.to), ng, order++, e.to});
      }
    }
  }
  if (reached < 0) return plan;

  std::vector<PlanStep> rev;
  int node = reached;
  while (node != start_node) {
    const PlanEdge& e = graph.edges[parent_edge[node]];
    rev.push_back({e.from, e.to, e.option_index});
    node = e.from;
  }
  plan.found = true;
  plan.cost = best_g[reached];
  plan.steps.assign(rev.rbegin(), rev.rend());
  return plan;
}

std::vector<RefinedStep> refine_plan(const Cat& cat, const OptionPlan& plan,
                                     const OptionModel& model) {
  std::vector<RefinedStep> out;
  size_t i = 0;
  while (i < plan.steps.size()) {
    const PlanStep& st = plan.steps[i];
    if (st.option_index >= 0) {
      RefinedStep rs;
      rs.option_index = st.option_index;
      rs.signature.initiation = model.option(st.option_index).initiation;
      rs.signature.termination = model.option(st.option_index).termination;
      out.push_back(std::move(rs));
      ++i;
      continue;
    }
    size_t j = i;
    while (j + 1 < plan.steps.size() && plan.steps[j + 1].option_index < 0)
      ++j;
    RefinedStep rs;
    rs.signature.initiation = {cat.node(plan.steps[i].from).box};
    rs.signature.termination = {cat.node(plan.steps[j].to).box};
    out.push_back(std::move(rs));
    i = j + 1;
  }
  return out;
}

OptionSignature invent_option_signature(Cat& cat, const State& s,
                                        const GoalSpec& goal) {
  OptionSignature sig;
  sig.goal_directed = true;
  sig.initiation = {cat.node(cat.leaf_of(s)).box};
  const Schema& schema = cat.schema();
  // Leaves materialize lazily, so force one inside the goal region: probe at
  // the current state with each constrained variable moved into its goal set.
  State probe = s;
  for (const GoalConstraint& c : goal.constraints)
    probe.values[c.var] = schema[c.var].kind == VarKind::kContinuous
                              ? c.lo
                              : static_cast<double>(c.allowed.front());
  cat.leaf_of(probe);
  for (int id : goal_nodes_of(cat, schema, goal))
    sig.termination.push_back(cat.node(id).box);
  if (sig.termination.empty()) {
    for (int leaf : cat.leaves())
      if (box_intersects_goal(schema, cat.node(leaf).box, goal))
        sig.termination.push_back(cat.node(leaf).box);
  }
  if (sig.termination.empty())
    throw std::runtime_error(
        "invent_option_signature: goal intersects no leaf");
  return sig;
}

bool validate_plan(const PlannableCat& graph, const OptionModel& model,
                   const OptionPlan& plan, int start_node,
                   const std::vector<int>& goal_nodes) {
  if (!plan.found) return false;
  if (!graph.cat) return false;
  const Cat& cat = *graph.cat;
  int at = start_node;
  for (const PlanStep& st : plan.steps) {
    if (st.from != at) return false;
    if (st.option_index >= 0) {
      if (st.option_index >= model.size()) return false;
      const AbstractOption& opt = model.option(st.option_index);
      bool init_ok = false, term_ok = false;
      for (const Box& b : opt.initiation)
        if (b == cat.node(st.from).box) init_ok = true;
      for (const Box& b : opt.termination)
        if (b == cat.node(st.to).box) term_ok = true;
      if (!init_ok || !term_ok) return false;
    } else {
      bool edge_ok = false;
      for (int ei : graph.adj[st.from]) {
        const PlanEdge& e = graph.edges[ei];
        if (e.to == st.to && e.option_index == st.option_index) edge_ok = true;
      }
      if (!edge_ok) return false;
    }
    at = st.to;
  }
  return std::find(goal_nodes.begin(), goal_nodes.end(), at) !=
         goal_nodes.end();
}

}  // namespace chirp
