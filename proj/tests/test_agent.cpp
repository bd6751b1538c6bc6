#include <cstdio>

#include "chirp/harness.hpp"
#include "chirp/io.hpp"
#include "doctest.h"

using namespace chirp;

namespace {

DomainSpec open_maze(int side) {
  std::vector<std::string> grid(side, std::string(side, '.'));
  return make_domain_with_map("maze", grid);
}

Task goal_column_task(const DomainSpec& spec, double x0, double y0,
                      double gx_lo, double gx_hi) {
  Task task;
  task.initial = make_state(spec.schema, {x0, y0});
  GoalConstraint g;
  g.var = 0;
  g.lo = gx_lo;
  g.hi = gx_hi;
  task.goal.constraints.push_back(g);
  return task;
}

}  // namespace

TEST_CASE("a task whose start satisfies the goal costs zero steps") {
  DomainSpec spec = open_maze(5);
  Hyper h = default_hyper("maze", Method::kChirp);
  ChirpAgent agent(spec, h, 1);
  Task task = goal_column_task(spec, 4.5, 0.5, 4.0, 5.0);
  TaskResult r = agent.solve_task(task, 100000);
  CHECK(r.solved);
  CHECK(r.timesteps == 0);
  CHECK(r.options_invented == 0);
}

TEST_CASE("the agent solves a small maze and invents options") {
  DomainSpec spec = open_maze(6);
  Hyper h = default_hyper("maze", Method::kChirp);
  h.eps_decay = 0.99;
  h.stepmax = 200;
  ChirpAgent agent(spec, h, 7);
  // Corner goal: one abstract state cannot express the policy, so the CAT
  // must refine before the task is learned.
  Task task = goal_column_task(spec, 0.5, 0.5, 5.0, 6.0);
  GoalConstraint gy;
  gy.var = 1;
  gy.lo = 5.0;
  gy.hi = 6.0;
  task.goal.constraints.push_back(gy);
  TaskResult r = agent.solve_task(task, 400000);
  CHECK(r.solved);
  CHECK(r.timesteps > 0);
  CHECK(agent.model().size() >= 1);
  CHECK(agent.cat().leaf_count() > 1);

  // A repeat of the same task reuses the model instead of learning afresh.
  TaskResult again = agent.solve_task(task, 400000);
  CHECK(again.solved);
  CHECK(again.timesteps < r.timesteps);
}

TEST_CASE("checkpoints restore an equivalent agent") {
  DomainSpec spec = open_maze(6);
  Hyper h = default_hyper("maze", Method::kChirp);
  h.eps_decay = 0.99;
  h.stepmax = 200;
  ChirpAgent agent(spec, h, 7);
  Task task = goal_column_task(spec, 0.5, 0.5, 5.0, 6.0);
  REQUIRE(agent.solve_task(task, 400000).solved);

  std::string path = "test_ckpt_tmp.txt";
  save_checkpoint_file(path, agent, 1);
  Checkpoint cp = load_checkpoint_file(path);
  CHECK(cp.tasks_completed == 1);

  ChirpAgent twin(spec, h, 999);
  twin.restore(cp.cat, cp.model, cp.rng_state);
  CHECK(twin.cat().node_count() == agent.cat().node_count());
  CHECK(twin.model().size() == agent.model().size());

  // Both agents continue identically from the restored RNG state.
  TaskResult a = agent.solve_task(task, 400000);
  TaskResult b = twin.solve_task(task, 400000);
  CHECK(a.solved);
  CHECK(b.solved);
  CHECK(a.timesteps == b.timesteps);
  std::remove(path.c_str());
}
