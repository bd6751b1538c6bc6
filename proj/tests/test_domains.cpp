#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "chirp/domains.hpp"
#include "doctest.h"

using namespace chirp;

TEST_CASE("domain construction: sizes, schemas, rewards") {
  DomainSpec maze = make_domain("maze");
  CHECK(maze.width == 24);
  CHECK(maze.height == 24);
  CHECK(maze.schema.size() == 2);
  CHECK(maze.goal_reward == 500.0);
  CHECK(maze.step_reward == -1.0);

  DomainSpec rooms = make_domain("four_rooms");
  CHECK(rooms.width == 33);
  CHECK(rooms.height == 33);

  DomainSpec office = make_domain("office");
  CHECK(office.width == 11);
  CHECK(office.height == 15);
  CHECK(office.schema.size() == 4);
  CHECK(office.step_reward == 0.0);

  DomainSpec taxi = make_domain("taxi");
  CHECK(taxi.width == 30);
  CHECK(taxi.schema.size() == 4);
  CHECK(taxi.illegal_reward == -100.0);
  CHECK(taxi.landmarks.size() >= 2);

  DomainSpec mc = make_domain("minecraft");
  CHECK(mc.width == 22);
  CHECK(mc.schema.back().name == "axe");

  CHECK_THROWS(make_domain("bogus"));
}

TEST_CASE("size overrides scale the grid and landmark count") {
  DomainSpec t = make_domain("taxi", SizeConfig{10, 10, 2});
  CHECK(t.width == 10);
  CHECK(t.height == 10);
  CHECK(t.landmarks.size() == 2);
  CHECK(t.schema[2].values.size() == 3);  // l in {0, 1, 2}
}

TEST_CASE("map files load and reject ragged grids") {
  std::string path = "test_map_tmp.txt";
  {
    std::ofstream os(path);
    os << "....\n.##.\n....\n";
  }
  std::vector<std::string> grid = load_map_file(path);
  REQUIRE(grid.size() == 3);
  DomainSpec spec = make_domain_with_map("maze", grid);
  CHECK(spec.width == 4);
  CHECK(spec.wall(1, 1));
  CHECK_FALSE(spec.wall(0, 0));
  CHECK_THROWS(make_domain_with_map("maze", {"....", ".."}));
  std::remove(path.c_str());
}

TEST_CASE("sampled tasks are solvable and deterministic per seed") {
  DomainSpec spec = make_domain("maze");
  Rng a(99), b(99);
  for (int i = 0; i < 10; ++i) {
    Task ta = sample_task(spec, a);
    Task tb = sample_task(spec, b);
    CHECK(ta.initial == tb.initial);
    CHECK(state_in_domain(spec.schema, ta.initial));
    CHECK_FALSE(is_goal(spec.schema, ta.initial, ta.goal));
  }
}

TEST_CASE("moves keep the fractional offset and respect walls") {
  DomainSpec spec = make_domain_with_map("maze", {"...", ".#.", "..."});
  Task task;
  task.initial = make_state(spec.schema, {0.25, 0.75});
  GoalConstraint g;
  g.var = 0;
  g.lo = 2.0;
  g.hi = 3.0;
  task.goal.constraints.push_back(g);
  Rng rng(5);
  State s = task.initial;
  for (int i = 0; i < 200; ++i) {
    StepOutcome out = domain_step(spec, task, s, rng.uniform_int(4), rng);
    s = out.next_state;
    CHECK(s.values[0] - std::floor(s.values[0]) == doctest::Approx(0.25));
    CHECK(s.values[1] - std::floor(s.values[1]) == doctest::Approx(0.75));
    CHECK_FALSE(spec.wall(static_cast<int>(s.values[0]),
                          static_cast<int>(s.values[1])));
    if (out.done) break;
  }
}

TEST_CASE("taxi pickup and dropoff flip the passenger variable") {
  DomainSpec spec = make_domain("taxi", SizeConfig{10, 10, 2});
  Cell lm = spec.landmarks[0];
  Task task;
  task.initial =
      make_state(spec.schema, {lm.first + 0.5, lm.second + 0.5, 1, 0});
  // Goal on y, away from the landmark row, so no step here ends the episode.
  GoalConstraint g;
  g.var = 1;
  g.lo = lm.second + 1 < spec.height ? lm.second + 1.0 : lm.second - 1.0;
  g.hi = g.lo + 1.0;
  task.goal.constraints.push_back(g);
  Rng rng(3);
  StepOutcome up = domain_step(spec, task, task.initial,
                               spec.action_index("pickup"), rng);
  CHECK(up.next_state.values[3] == 1.0);  // passenger aboard
  CHECK(up.next_state.values[2] == 0.0);  // no longer waiting anywhere
  CHECK_FALSE(up.illegal);
  StepOutcome down = domain_step(spec, task, up.next_state,
                                 spec.action_index("dropoff"), rng);
  CHECK(down.next_state.values[3] == 0.0);
  CHECK(down.next_state.values[2] == 1.0);  // delivered at landmark 1
  // Pickup away from the waiting landmark is illegal.
  State wrong = task.initial;
  wrong.values[2] = 2;
  StepOutcome bad = domain_step(spec, task, wrong,
                                spec.action_index("pickup"), rng);
  CHECK(bad.illegal);
  CHECK(bad.reward == -100.0);
}

TEST_CASE("office pickups latch and the goal pays 500") {
  DomainSpec spec = make_domain("office");
  Task task;
  task.initial = make_state(
      spec.schema,
      {spec.coffee.first + 0.5, spec.coffee.second + 0.5, 0, 0});
  GoalConstraint g;
  g.var = 2;
  g.allowed = {1};
  task.goal.constraints.push_back(g);
  Rng rng(17);
  // Start on a free neighbour of the coffee cell and walk until stepping
  // onto it latches has_coffee and fires the goal.
  Cell start{-1, -1};
  const int dx[] = {1, -1, 0, 0}, dy[] = {0, 0, 1, -1};
  for (int d = 0; d < 4; ++d)
    if (!spec.wall(spec.coffee.first + dx[d], spec.coffee.second + dy[d]))
      start = {spec.coffee.first + dx[d], spec.coffee.second + dy[d]};
  REQUIRE(start.first >= 0);
  State s = make_state(spec.schema,
                       {start.first + 0.5, start.second + 0.5, 0, 0});
  bool done = false;
  for (int i = 0; i < 20000 && !done; ++i) {
    StepOutcome out = domain_step(spec, task, s, rng.uniform_int(4), rng);
    if (!out.done) CHECK(out.reward == 0.0);
    if (out.done) {
      CHECK(out.reward == 500.0);
      CHECK(out.next_state.values[2] == 1.0);
      done = true;
    }
    s = out.next_state;
  }
  CHECK(done);
}

TEST_CASE("cells_connected answers reachability on the grid") {
  DomainSpec spec = make_domain_with_map("maze", {"..#..", "..#..", "..#.."});
  CHECK(cells_connected(spec, {0, 0}, {1, 2}));
  CHECK_FALSE(cells_connected(spec, {0, 0}, {4, 0}));
}
