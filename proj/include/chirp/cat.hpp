#pragma once

#include <string>
#include <vector>

#include "chirp/mdp.hpp"

namespace chirp {

// Per-variable slice of an abstract state. Continuous: [lo, hi).
// Discrete: inclusive index range [ilo, ihi] into the domain's value order
// (always contiguous in that order).
struct VarInterval {
  double lo = 0.0, hi = 0.0;
  int ilo = 0, ihi = 0;
  bool operator==(const VarInterval&) const = default;
};

struct Box {
  std::vector<VarInterval> ivs;
  bool operator==(const Box&) const = default;
};

Box full_box(const Schema& schema);
bool box_contains(const Schema& schema, const Box& b, const State& s);
bool box_subset(const Schema& schema, const Box& inner, const Box& outer);
bool box_within_goal(const Schema& schema, const Box& b, const GoalSpec& goal);
bool box_intersects_goal(const Schema& schema, const Box& b,
                         const GoalSpec& goal);
double interval_measure(const VariableSpec& var, const VarInterval& iv);
std::string box_to_string(const Schema& schema, const Box& b);

struct SplitPoint {
  bool split = false;
  double mid = 0.0;  // continuous: [lo, mid) / [mid, hi)
  int imid = 0;      // discrete: [ilo..imid] / [imid+1..ihi]
};

struct CatNode {
  int id = 0;
  int parent = -1;
  int depth = 0;
  Box box;
  bool refined = false;             // split points assigned
  std::vector<SplitPoint> splits;   // per variable, valid when refined
  std::vector<int> children;        // materialized children only
};

// Conditional Abstraction Tree. The root carries the full domain of every
// variable; refining a leaf bisects every splittable variable at once.
// Children materialize lazily on first lookup, so the materialized leaves
// are exactly the logical leaves that have been visited.
class Cat {
 public:
  explicit Cat(Schema schema);

  const Schema& schema() const { return schema_; }
  int root() const { return 0; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const CatNode& node(int id) const;
  bool is_leaf(int id) const { return !node(id).refined; }
  int depth_max() const { return depth_max_; }
  uint64_t lineage() const { return lineage_; }

  // The unique leaf containing the state (materializes along the path).
  int leaf_of(const State& s);

  // The node with exactly this box, materializing along the way; throws if
  // the box does not correspond to a node of this tree's split structure.
  int node_of_box(const Box& b);

  bool splittable(int leaf_id) const;

  // Split every splittable variable of the leaf once (continuous intervals
  // at the midpoint, discrete subsets at the median index). Throws
  // "unsplittable" when every variable interval is atomic.
  void refine(int leaf_id);

  int lca(int a, int b) const;

  std::vector<int> leaves() const;  // materialized, unrefined nodes
  int leaf_count() const;

  double min_continuous_width() const { return min_continuous_width_; }

 private:
  bool var_splittable(const VarInterval& iv, const VariableSpec& var) const;
  int materialize_child(int parent_id, const State& s);
  void check_id(int id) const;

  Schema schema_;
  std::vector<CatNode> nodes_;
  int depth_max_ = 0;
  uint64_t lineage_ = 0;
  double min_continuous_width_ = 1.0;

  friend void merge_cat(Cat& universal, const Cat& option_cat);
  friend struct CatIo;
};

// Adopt an option CAT produced by refining a copy of the universal CAT.
// Throws on a lineage violation.
void merge_cat(Cat& universal, const Cat& option_cat);

// Context-specific ablation of a CAT: retains exactly the nodes whose
// intervals on every context variable contain the conditioning state's
// values. Closure under ancestors holds by construction.
struct Ccat {
  const Cat* cat = nullptr;
  std::vector<char> retained;  // indexed by node id at creation time
  bool has(int id) const {
    return id >= 0 && id < static_cast<int>(retained.size()) && retained[id];
  }
};

Ccat make_ccat(const Cat& cat, const State& s,
               const std::vector<int>& context_vars);

namespace detail {
// After loading a serialized CAT, keep future lineage ids disjoint from it.
void ensure_lineage_floor(uint64_t used);
}  // namespace detail

// Recursive structural difference between two C-CATs from the same CAT:
// a subtree missing from one side contributes its max depth in the side
// that has it; shared nodes recurse over children and sum.
double delta_distance(const Ccat& a, const Ccat& b);

// LCA-based distance between two abstract states:
// w1 * (depth_max - depth(root, LCA) + 1) + w2 * (depth(LCA,a)+depth(LCA,b))/2.
double sigma_distance(const Cat& cat, int a, int b, double w1 = 0.5,
                      double w2 = 0.5);

}  // namespace chirp
