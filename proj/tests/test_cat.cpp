#include <cmath>

#include "chirp/cat.hpp"
#include "doctest.h"

using namespace chirp;

namespace {

Schema fig2_schema() {
  VariableSpec x{"x", VarKind::kContinuous, 0.0, 5.0, {}};
  VariableSpec y{"y", VarKind::kContinuous, 0.0, 5.0, {}};
  VariableSpec l{"l", VarKind::kDiscrete, 0.0, 0.0, {0, 1, 2, 3, 4}};
  VariableSpec p{"p", VarKind::kDiscrete, 0.0, 0.0, {0, 1}};
  return {x, y, l, p};
}

Schema one_var_schema(int n_values) {
  VariableSpec v;
  v.name = "v";
  v.kind = VarKind::kDiscrete;
  for (int i = 0; i < n_values; ++i) v.values.push_back(i);
  return {v};
}

State sv(double value) { return State{{value}}; }

}  // namespace

TEST_CASE("leaf_of on the taxi-style tree matches the worked example") {
  Cat cat(fig2_schema());
  State s{{2.6, 0.9, 3, 0}};
  cat.refine(cat.leaf_of(s));
  int leaf = cat.leaf_of(s);
  const Box& b = cat.node(leaf).box;
  CHECK(b.ivs[0].lo == 2.5);  // x:[2.5,5)
  CHECK(b.ivs[0].hi == 5.0);
  CHECK(b.ivs[1].lo == 0.0);  // y:[0,2.5)
  CHECK(b.ivs[1].hi == 2.5);
  CHECK(b.ivs[2].ilo == 3);   // l:{3,4}
  CHECK(b.ivs[2].ihi == 4);
  CHECK(b.ivs[3].ilo == 0);   // p:{0}
  CHECK(b.ivs[3].ihi == 0);
}

TEST_CASE("refinement bisects every splittable variable exactly once") {
  Cat cat(fig2_schema());
  cat.refine(cat.root());
  // All four variables split: 2^4 logical children; only looked-up ones exist.
  State corner{{0.1, 4.9, 0, 1}};
  int leaf = cat.leaf_of(corner);
  CHECK(cat.node(leaf).depth == 1);
  const Box& b = cat.node(leaf).box;
  CHECK(b.ivs[0].hi == 2.5);
  CHECK(b.ivs[1].lo == 2.5);
  CHECK(b.ivs[2].ihi == 2);  // l:{0,1,2}
  CHECK(b.ivs[3].ilo == 1);  // p:{1}
}

TEST_CASE("continuous intervals below the minimum width do not split") {
  VariableSpec x{"x", VarKind::kContinuous, 0.0, 2.0, {}};
  Cat cat({x});
  cat.refine(cat.root());           // [0,1) / [1,2)
  int leaf = cat.leaf_of(State{{0.5}});
  CHECK_FALSE(cat.splittable(leaf));
  CHECK_THROWS(cat.refine(leaf));
}

TEST_CASE("delta distance matches the worked example (2 + 1 = 3)") {
  Cat cat(one_var_schema(8));
  cat.refine(cat.leaf_of(sv(0)));  // {0..3} / {4..7}
  cat.refine(cat.leaf_of(sv(0)));  // {0,1} / {2,3}
  cat.refine(cat.leaf_of(sv(0)));  // {0} / {1}
  cat.refine(cat.leaf_of(sv(4)));  // {4,5} / {6,7}
  cat.leaf_of(sv(0));              // materialize the depth-3 leaf {0}
  cat.leaf_of(sv(4));              // materialize {4,5}

  Ccat c0 = make_ccat(cat, sv(0), {0});
  Ccat c4 = make_ccat(cat, sv(4), {0});
  CHECK(delta_distance(c0, c4) == 3.0);
  CHECK(delta_distance(c4, c0) == 3.0);
  CHECK(delta_distance(c0, c0) == 0.0);
  CHECK(delta_distance(c4, c4) == 0.0);
}

TEST_CASE("sigma distance matches the worked examples") {
  Cat cat(one_var_schema(8));
  cat.refine(cat.leaf_of(sv(0)));
  cat.refine(cat.leaf_of(sv(0)));
  cat.refine(cat.leaf_of(sv(0)));  // depth_max becomes 3
  cat.refine(cat.leaf_of(sv(4)));

  int leaf0 = cat.leaf_of(sv(0));  // depth 3
  int leaf1 = cat.leaf_of(sv(1));  // depth 3, sibling of leaf0
  int leaf4 = cat.leaf_of(sv(4));  // depth 2
  cat.refine(leaf4);               // depth-3 leaf under the other root child
  int leaf4d = cat.leaf_of(sv(4));

  REQUIRE(cat.depth_max() == 3);
  CHECK(cat.node(leaf0).depth == 3);
  CHECK(cat.node(cat.lca(leaf0, leaf1)).depth == 2);
  CHECK(sigma_distance(cat, leaf0, leaf1) == 1.5);
  CHECK(cat.lca(leaf0, leaf4d) == cat.root());
  CHECK(sigma_distance(cat, leaf0, leaf4d) == 3.5);
  CHECK(sigma_distance(cat, leaf4d, leaf0) ==
        sigma_distance(cat, leaf0, leaf4d));
}

TEST_CASE("ccat retains exactly the nodes covering the context values") {
  Cat cat(one_var_schema(4));
  cat.refine(cat.root());          // {0,1} / {2,3}
  cat.refine(cat.leaf_of(sv(0)));  // {0} / {1}
  cat.leaf_of(sv(0));              // materialize {0}
  cat.leaf_of(sv(2));
  Ccat cc = make_ccat(cat, sv(0), {0});
  CHECK(cc.has(cat.root()));
  CHECK(cc.has(cat.leaf_of(sv(0))));
  CHECK_FALSE(cc.has(cat.leaf_of(sv(2))));
  // No context variables: everything is retained.
  Ccat all = make_ccat(cat, sv(0), {});
  for (int id = 0; id < cat.node_count(); ++id) CHECK(all.has(id));
}

TEST_CASE("merge_cat adopts refinements made on a copy") {
  Cat base(one_var_schema(8));
  base.refine(base.leaf_of(sv(0)));
  Cat copy = base;
  copy.refine(copy.leaf_of(sv(0)));
  copy.refine(copy.leaf_of(sv(6)));
  merge_cat(base, copy);
  CHECK(base.node_count() == copy.node_count());
  CHECK(base.leaf_of(sv(0)) == copy.leaf_of(sv(0)));
  CHECK(base.depth_max() == copy.depth_max());
}

TEST_CASE("merge_cat rejects a CAT from a different lineage") {
  Cat a(one_var_schema(8));
  Cat b(one_var_schema(8));
  a.refine(a.root());
  b.refine(b.root());
  CHECK_THROWS(merge_cat(a, b));
}

TEST_CASE("box helpers: containment, subset, goal tests") {
  Schema schema = fig2_schema();
  Cat cat(schema);
  cat.refine(cat.root());
  State s{{2.6, 0.9, 3, 0}};
  int leaf = cat.leaf_of(s);
  const Box& b = cat.node(leaf).box;
  CHECK(box_contains(schema, b, s));
  CHECK(box_subset(schema, b, cat.node(cat.root()).box));
  CHECK_FALSE(box_subset(schema, cat.node(cat.root()).box, b));

  GoalSpec goal;
  GoalConstraint g;
  g.var = 3;
  g.allowed = {0};
  goal.constraints.push_back(g);
  CHECK(box_within_goal(schema, b, goal));   // p:{0} subset of {0}
  CHECK(box_intersects_goal(schema, b, goal));
  GoalSpec other;
  g.allowed = {1};
  other.constraints = {g};
  CHECK_FALSE(box_within_goal(schema, b, other));
  CHECK_FALSE(box_intersects_goal(schema, b, other));
}
