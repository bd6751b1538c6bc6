#include <cstdio>
#include <sstream>

#include "chirp/io.hpp"
#include "doctest.h"

using namespace chirp;

namespace {

Schema small_schema() {
  VariableSpec x{"x", VarKind::kContinuous, 0.0, 4.0, {}};
  VariableSpec l{"l", VarKind::kDiscrete, 0.0, 0.0, {0, 1, 2, 3}};
  return {x, l};
}

}  // namespace

TEST_CASE("fmt_double round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, -2.5, 1e-17, 12345678.875, 0.0})
    CHECK(std::stod(fmt_double(v)) == v);
}

TEST_CASE("schema save/load is lossless and deterministic") {
  Schema schema = small_schema();
  std::ostringstream os;
  save_schema(os, schema);
  std::istringstream is(os.str());
  Schema back = load_schema(is);
  REQUIRE(back.size() == 2);
  CHECK(back[0].name == "x");
  CHECK(back[0].kind == VarKind::kContinuous);
  CHECK(back[0].hi == 4.0);
  CHECK(back[1].values == std::vector<int>{0, 1, 2, 3});
  std::ostringstream os2;
  save_schema(os2, back);
  CHECK(os.str() == os2.str());
}

TEST_CASE("task streams round-trip through a file") {
  DomainSpec spec = make_domain("maze");
  Rng rng(21);
  TaskStream stream;
  stream.domain_id = "maze";
  stream.seed = 21;
  stream.per_task_budget = 1000;
  for (int i = 0; i < 3; ++i) stream.tasks.push_back(sample_task(spec, rng));

  std::string path = "test_stream_tmp.txt";
  save_task_stream_file(path, stream);
  TaskStream back = load_task_stream_file(path, spec.schema);
  REQUIRE(back.tasks.size() == 3);
  CHECK(back.domain_id == "maze");
  CHECK(back.per_task_budget == 1000);
  for (int i = 0; i < 3; ++i) {
    CHECK(back.tasks[i].initial == stream.tasks[i].initial);
    CHECK(back.tasks[i].goal.constraints.size() ==
          stream.tasks[i].goal.constraints.size());
  }
  std::remove(path.c_str());
}

TEST_CASE("CATs serialize byte-identically and reload to the same tree") {
  Cat cat(small_schema());
  cat.refine(cat.root());
  cat.refine(cat.leaf_of(State{{0.5, 0}}));
  std::ostringstream a, b;
  save_cat(a, cat);
  save_cat(b, cat);
  CHECK(a.str() == b.str());
  std::istringstream is(a.str());
  Cat back = load_cat(is);
  // Re-save before any lookup: leaf_of materializes lazy children.
  std::ostringstream c;
  save_cat(c, back);
  CHECK(c.str() == a.str());
  CHECK(back.node_count() == cat.node_count());
  CHECK(back.depth_max() == cat.depth_max());
  CHECK(back.leaf_of(State{{0.5, 0}}) == cat.leaf_of(State{{0.5, 0}}));
}

TEST_CASE("checkpoints restore the CAT, options, and RNG state") {
  Cat cat(small_schema());
  cat.refine(cat.root());
  int low = cat.leaf_of(State{{0.5, 0}});
  int high = cat.leaf_of(State{{3.5, 3}});
  OptionModel model;
  AbstractOption opt(cat, QTable(4));
  opt.initiation = {cat.node(low).box};
  opt.termination = {cat.node(high).box};
  opt.recent_success_len = 12;
  opt.termination_from_delta = true;
  opt.delta_changed_vars = {1};
  model.update(std::move(opt), 0.75);

  std::ostringstream os;
  CheckpointIo::save(os, cat, model, "rngstate123", 7);
  std::istringstream is(os.str());
  Checkpoint cp = CheckpointIo::load(is);
  CHECK(cp.tasks_completed == 7);
  CHECK(cp.rng_state == "rngstate123");
  CHECK(cp.cat.node_count() == cat.node_count());
  REQUIRE(cp.model.size() == 1);
  CHECK(cp.model.option(0).recent_success_len == 12);
  CHECK(cp.model.option(0).termination_from_delta);
  CHECK(cp.model.option(0).delta_changed_vars == std::vector<int>{1});
  CHECK(cp.model.quality(0) == 0.75);

  std::ostringstream os2;
  CheckpointIo::save(os2, cp.cat, cp.model, cp.rng_state, cp.tasks_completed);
  CHECK(os2.str() == os.str());
}

TEST_CASE("parse_state reads name=value lists") {
  Schema schema = small_schema();
  State s = parse_state(schema, "x=1.5,l=3");
  CHECK(s.values[0] == 1.5);
  CHECK(s.values[1] == 3.0);
  CHECK_THROWS(parse_state(schema, "x=1.5"));        // missing variable
  CHECK_THROWS(parse_state(schema, "x=9.0,l=0"));    // out of domain
  CHECK_THROWS(parse_state(schema, "x=1,z=0,l=0"));  // unknown variable
}

TEST_CASE("parse_goal reads intervals and value lists") {
  Schema schema = small_schema();
  GoalSpec g = parse_goal(schema, "x=[2,3);l=1,2");
  REQUIRE(g.constraints.size() == 2);
  CHECK(g.constraints[0].var == 0);
  CHECK(g.constraints[0].lo == 2.0);
  CHECK(g.constraints[0].hi == 3.0);
  CHECK(g.constraints[1].allowed == std::vector<int>{1, 2});
  CHECK(is_goal(schema, State{{2.5, 1}}, g));
  CHECK_FALSE(is_goal(schema, State{{3.5, 1}}, g));
  CHECK_THROWS(parse_goal(schema, "l=[0,1)"));  // interval on a discrete var
}
