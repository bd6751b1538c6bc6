#include "chirp/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace chirp {

OptionMdp::OptionMdp(const DomainSpec& spec, const Task& task, State start,
                     std::vector<Box> termination, bool goal_directed,
                     int stepmax, StepBudget* budget, double intrinsic_reward)
    : spec_(spec),
      task_(task),
      start_(std::move(start)),
      termination_(std::move(termination)),
      goal_directed_(goal_directed),
      stepmax_(stepmax),
      budget_(budget),
      intrinsic_(intrinsic_reward) {
  if (stepmax_ <= 0) throw std::invalid_argument("OptionMdp: stepmax <= 0");
  if (!goal_directed_ && termination_.empty())
    throw std::invalid_argument("OptionMdp: no termination boxes");
}

bool OptionMdp::at_goal(const State& s) const {
  if (goal_directed_) return is_goal(spec_.schema, s, task_.goal);
  for (const Box& b : termination_)
    if (box_contains(spec_.schema, b, s)) return true;
  return false;
}

StepOutcome OptionMdp::step(const State& s, int action, Rng& rng) {
  if (budget_) ++budget_->used;
  StepOutcome out = domain_step(spec_, task_, s, action, rng);
  if (goal_directed_) return out;
  if (at_goal(out.next_state)) {
    out.done = true;
    out.reward = intrinsic_;
  } else if (out.done) {
    // Task goal reached but this option does not end there.
    out.done = false;
    out.reward = spec_.step_reward;
  }
  return out;
}

ExecOutcome execute_option(const DomainSpec& spec, const Task& task, Cat& cat,
                           const QTable& policy,
                           const std::vector<Box>& termination,
                           bool goal_directed, const State& start, int stepmax,
                           StepBudget& budget, Rng& rng) {
  auto terminated = [&](const State& s) {
    if (goal_directed) return is_goal(spec.schema, s, task.goal);
    for (const Box& b : termination)
      if (box_contains(spec.schema, b, s)) return true;
    return false;
  };
  ExecOutcome out;
  out.end = start;
  if (terminated(start)) {
    out.success = true;
    return out;
  }
  for (int t = 0; t < stepmax; ++t) {
    if (budget.exhausted()) return out;
    int a = policy.greedy(cat, cat.leaf_of(out.end));
    ++budget.used;
    StepOutcome st = domain_step(spec, task, out.end, a, rng);
    out.end = st.next_state;
    ++out.steps;
    if (terminated(out.end)) {
      out.success = true;
      return out;
    }
  }
  return out;
}

ChirpAgent::ChirpAgent(DomainSpec spec, Hyper hyper, uint64_t seed)
    : spec_(std::move(spec)),
      hyper_(hyper),
      cat_(spec_.schema),
      rng_(seed) {
  validate_hyper(hyper_);
}

void ChirpAgent::restore(Cat cat, OptionModel model,
                         const std::string& rng_state) {
  cat_ = std::move(cat);
  model_ = std::move(model);
  rng_.load_state(rng_state);
}

namespace {

// A plan element executed successfully during the current solve attempt,
// replayable for the final evaluation.
struct LocalPolicy {
  Cat cat;
  QTable policy;
  std::vector<Box> termination;
  bool goal_directed = false;
  int stepmax = 0;
};

struct CompletedStep {
  int model_index = -1;  // >= 0: model option; else index into locals
  int local_index = -1;
};

}  // namespace

TaskResult ChirpAgent::solve_task(const Task& task, long budget) {
  TaskResult res;
  if (is_goal(spec_.schema, task.initial, task.goal)) {
    res.solved = true;
    return res;
  }
  StepBudget bud{budget, 0};
  State s = task.initial;
  std::vector<LocalPolicy> locals;
  std::vector<CompletedStep> completed;
  // After repeated plan failures (e.g. plans routed through abstract states
  // unreachable under this task's dynamics), fall back to learning the goal
  // directly, as a cold start would.
  int plan_failures = 0;
  const int max_plan_failures = 2;
  // Bridge signatures that already failed to train in this task; a replan
  // proposing one again fails immediately instead of re-spending budget.
  std::vector<std::pair<Box, Box>> failed_bridges;
  // Bridge signatures already trained in this task, mapped to their local
  // policy; a retry executes the cached policy instead of retraining.
  std::vector<std::pair<std::pair<Box, Box>, int>> trained_bridges;
  // Most recent goal-directed segment policy; reused as a warm start when a
  // near-miss final evaluation forces a retry.
  int last_goal_local = -1;
  bool strict_retry = false;  // after a near-miss evaluation, train to 20/20

  auto option_stepmax = [&](const AbstractOption& opt) {
    return std::max(1, static_cast<int>(std::lround(
                           hyper_.s_factor *
                           std::max(1, opt.recent_success_len))));
  };

  while (!bud.exhausted()) {
    // Materialize the start leaf and a leaf inside the goal region before
    // building the graph so every node id is a graph vertex.
    int start_node = cat_.leaf_of(s);
    State goal_probe = s;
    for (const GoalConstraint& c : task.goal.constraints)
      goal_probe.values[c.var] =
          spec_.schema[c.var].kind == VarKind::kContinuous
              ? c.lo
              : static_cast<double>(c.allowed.front());
    cat_.leaf_of(goal_probe);
    PlannableCat graph = build_plannable_cat(cat_, model_);
    std::vector<int> goals = goal_nodes_of(cat_, spec_.schema, task.goal);
    // Coarse CATs rarely have nodes fully inside a goal; plan toward the
    // leaves intersecting it and finish with a goal-directed segment.
    bool approx_goals = goals.empty();
    if (approx_goals)
      for (int leaf : cat_.leaves())
        if (box_intersects_goal(spec_.schema, cat_.node(leaf).box, task.goal))
          goals.push_back(leaf);
    OptionPlan plan;
    if (plan_failures < max_plan_failures)
      plan = compute_option_plan(graph, start_node, goals, hyper_);
    ++res.replans;
    if (trace_)
      (*trace_) << "[plan] start=" << start_node << " goals=" << goals.size()
                << " found=" << plan.found << " edges=" << plan.steps.size()
                << " budget_left=" << bud.left() << "\n";

    std::vector<RefinedStep> steps;
    if (plan.found) {
      steps = refine_plan(cat_, plan, model_);
      if (approx_goals) {
        RefinedStep last;
        last.signature.goal_directed = true;
        last.signature.initiation = {cat_.node(start_node).box};
        steps.push_back(std::move(last));
      }
    } else {
      RefinedStep rs;
      rs.signature = invent_option_signature(cat_, s, task.goal);
      steps.push_back(std::move(rs));
    }

    bool plan_failed = false;
    for (const RefinedStep& rs : steps) {
      if (bud.exhausted()) break;

      if (rs.option_index >= 0) {
        AbstractOption& opt = model_.option(rs.option_index);
        if (opt.needs_finetune) {
          OptionMdp view(spec_, task, s, opt.termination, false,
                         hyper_.stepmax, &bud, hyper_.intrinsic_reward);
          CatRlResult r = run_catrl(view, opt.cat, opt.policy, hyper_,
                                    /*option_mode=*/true, rng_);
          if (r.stats.recent_success_len > 0)
            opt.recent_success_len =
                std::max(opt.recent_success_len, r.stats.recent_success_len);
          opt.needs_finetune = !r.learned;
        }
        ExecOutcome out = execute_option(
            spec_, task, opt.cat, opt.policy, opt.termination, false, s,
            option_stepmax(opt), bud, rng_);
        if (trace_)
          (*trace_) << "[exec] option=" << rs.option_index
                    << " success=" << out.success << " steps=" << out.steps
                    << "\n";
        if (!out.success) {
          // Keep s where the last completed step ended so later segments
          // train from a state the replayed chain actually reaches.
          opt.needs_finetune = true;
          plan_failed = true;
          break;
        }
        s = out.end;
        opt.recent_success_len = std::max(opt.recent_success_len, out.steps);
        completed.push_back({rs.option_index, -1});
        ++res.plan_options_executed;
        continue;
      }

      // A step whose termination already holds (e.g. a tree hop to an
      // ancestor) is complete with no training.
      if (rs.signature.goal_directed) {
        if (is_goal(spec_.schema, s, task.goal)) continue;
      } else {
        bool already = false;
        for (const Box& b : rs.signature.termination)
          if (box_contains(spec_.schema, b, s)) already = true;
        if (already) continue;
      }

      std::pair<Box, Box> bridge_key;
      if (!rs.signature.goal_directed) {
        bridge_key = {rs.signature.initiation.front(),
                      rs.signature.termination.front()};
        if (std::find(failed_bridges.begin(), failed_bridges.end(),
                      bridge_key) != failed_bridges.end()) {
          plan_failed = true;
          break;
        }
        auto cached = std::find_if(
            trained_bridges.begin(), trained_bridges.end(),
            [&](const auto& tb) { return tb.first == bridge_key; });
        if (cached != trained_bridges.end()) {
          LocalPolicy& lp = locals[cached->second];
          ExecOutcome out =
              execute_option(spec_, task, lp.cat, lp.policy, lp.termination,
                             false, s, lp.stepmax, bud, rng_);
          if (trace_)
            (*trace_) << "[exec] bridge-cache success=" << out.success
                      << " steps=" << out.steps << "\n";
          if (out.success) {
            s = out.end;
            completed.push_back({-1, cached->second});
            continue;
          }
          trained_bridges.erase(cached);  // stale; retrain below
        }
      }

      // Train the missing segment on a private copy of the universal CAT.
      // A bridge may spend at most half the remaining budget so one segment
      // toward an unreachable abstract state cannot starve the rest.
      Cat train_cat = cat_;
      QTable q(static_cast<int>(spec_.actions.size()));
      if (rs.signature.goal_directed && last_goal_local >= 0)
        q = locals[last_goal_local].policy;
      long bridge_cap = std::min(
          bud.left() / 2, static_cast<long>(hyper_.e_max) * hyper_.stepmax / 5);
      StepBudget sub{rs.signature.goal_directed ? bud.left()
                                                : std::max(1L, bridge_cap),
                     0};
      OptionMdp view(spec_, task, s, rs.signature.termination,
                     rs.signature.goal_directed, hyper_.stepmax, &sub,
                     hyper_.intrinsic_reward);
      if (trace_ && !rs.signature.goal_directed)
        (*trace_) << "[bridge] "
                  << box_to_string(spec_.schema, rs.signature.initiation.front())
                  << " -> "
                  << box_to_string(spec_.schema, rs.signature.termination.front())
                  << "\n";
      // Bridging segments halt at e_max episodes so a plan through an
      // unreachable abstract state cannot absorb the whole budget; the
      // goal-directed cold start trains like the flat baseline would.
      bool halt_at_e_max = !rs.signature.goal_directed;
      Hyper train_hyper = hyper_;
      if (rs.signature.goal_directed && strict_retry)
        train_hyper.learned_threshold = 1.0;
      CatRlResult r =
          run_catrl(view, train_cat, q, train_hyper, halt_at_e_max, rng_);
      if (trace_)
        (*trace_) << "[train] goal_directed=" << rs.signature.goal_directed
                  << " learned=" << r.learned
                  << " episodes=" << r.stats.episodes
                  << " steps=" << r.stats.timesteps
                  << " budget_left=" << bud.left() - sub.used << "\n";

      Trajectory traj;
      bool advanced = false;
      if (r.learned) {
        try {
          traj = rollout(view, train_cat, q, rng_);
          advanced = true;
        } catch (const std::exception&) {
        }
      }
      bud.used += sub.used;
      if (!advanced) {
        if (!rs.signature.goal_directed) failed_bridges.push_back(bridge_key);
        plan_failed = true;
        break;
      }

      OptionViewFactory factory = [&](const std::vector<Box>& termination,
                                      const State& start, int stepmax) {
        return std::make_unique<OptionMdp>(spec_, task, start, termination,
                                           false, stepmax, &bud,
                                           hyper_.intrinsic_reward);
      };
      std::vector<AbstractOption> invented =
          invent_options(train_cat, q, traj, hyper_, factory, rng_);
      for (AbstractOption& opt : invented) {
        double quality = opt.needs_finetune ? 0.0 : 1.0;
        model_.update(std::move(opt), quality);
      }
      res.options_invented += static_cast<int>(invented.size());

      merge_cat(cat_, train_cat);

      locals.push_back({train_cat, q, rs.signature.termination,
                        rs.signature.goal_directed, hyper_.stepmax});
      completed.push_back({-1, static_cast<int>(locals.size()) - 1});
      if (rs.signature.goal_directed)
        last_goal_local = static_cast<int>(locals.size()) - 1;
      else
        trained_bridges.push_back(
            {bridge_key, static_cast<int>(locals.size()) - 1});
      s = traj.steps.back().s2;
    }

    if (plan_failed) ++plan_failures;
    if (plan_failed || bud.exhausted()) continue;
    if (!is_goal(spec_.schema, s, task.goal)) continue;

    // Full-plan evaluation from the task's initial state. Evaluation
    // measures the chained policy; it does not count against the budget.
    int successes = 0;
    const int n_eval = 100;
    const int need = static_cast<int>(
        std::ceil(hyper_.learned_threshold * n_eval));
    int failures = 0;
    StepBudget eval_bud{std::numeric_limits<long>::max(), 0};
    for (int run = 0; run < n_eval; ++run) {
      if (failures > n_eval - need) break;  // threshold already unreachable
      State es = task.initial;
      bool run_ok = true;
      for (const CompletedStep& cs : completed) {
        ExecOutcome out;
        if (cs.model_index >= 0) {
          AbstractOption& opt = model_.option(cs.model_index);
          out = execute_option(spec_, task, opt.cat, opt.policy,
                               opt.termination, false, es, option_stepmax(opt),
                               eval_bud, rng_);
        } else {
          LocalPolicy& lp = locals[cs.local_index];
          out = execute_option(spec_, task, lp.cat, lp.policy, lp.termination,
                               lp.goal_directed, es, lp.stepmax, eval_bud,
                               rng_);
        }
        es = out.end;
        if (!out.success) {
          // A brittle link drags the whole chain down; fine-tune it before
          // the retry instead of re-running it as is.
          if (cs.model_index >= 0)
            model_.option(cs.model_index).needs_finetune = true;
          run_ok = false;
          break;
        }
      }
      if (run_ok && is_goal(spec_.schema, es, task.goal))
        ++successes;
      else
        ++failures;
    }
    if (trace_)
      (*trace_) << "[eval] successes=" << successes << "/" << n_eval
                << " eval_steps=" << eval_bud.used
                << " budget_left=" << bud.left() << "\n";
    if (successes >= need) {
      res.solved = true;
      break;
    }
    // Evaluation failed: retry the whole task from its initial state,
    // warm-starting from the segment policies already learned.
    s = task.initial;
    completed.clear();
    strict_retry = true;
  }

  res.timesteps = bud.used;
  return res;
}

std::vector<TaskResult> ChirpAgent::solve_stream(
    const TaskStream& stream,
    const std::function<void(int, const TaskResult&)>& on_task) {
  std::vector<TaskResult> results;
  for (size_t i = 0; i < stream.tasks.size(); ++i) {
    TaskResult r = solve_task(stream.tasks[i], stream.per_task_budget);
    if (on_task) on_task(static_cast<int>(i), r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace chirp
