#include "chirp/cat.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace chirp {

namespace {
std::atomic<uint64_t> g_lineage_counter{1};
}

namespace detail {
void ensure_lineage_floor(uint64_t used) {
  uint64_t cur = g_lineage_counter.load();
  while (cur <= used && !g_lineage_counter.compare_exchange_weak(cur, used + 1)) {
  }
}
}  // namespace detail

Box full_box(const Schema& schema) {
  Box b;
  b.ivs.reserve(schema.size());
  for (const auto& v : schema) {
    VarInterval iv;
    if (v.kind == VarKind::kContinuous) {
      iv.lo = v.lo;
      iv.hi = v.hi;
    } else {
      iv.ilo = 0;
      iv.ihi = static_cast<int>(v.values.size()) - 1;
    }
    b.ivs.push_back(iv);
  }
  return b;
}

bool box_contains(const Schema& schema, const Box& b, const State& s) {
  if (b.ivs.size() != schema.size() || s.values.size() != schema.size())
    throw std::invalid_argument("box_contains: schema mismatch");
  for (size_t i = 0; i < schema.size(); ++i) {
    const auto& iv = b.ivs[i];
    double x = s.values[i];
    if (schema[i].kind == VarKind::kContinuous) {
      if (x < iv.lo || x >= iv.hi) return false;
    } else {
      int idx = schema[i].value_index(static_cast<int>(x));
      if (idx < iv.ilo || idx > iv.ihi) return false;
    }
  }
  return true;
}

bool box_subset(const Schema& schema, const Box& inner, const Box& outer) {
  if (inner.ivs.size() != schema.size() || outer.ivs.size() != schema.size())
    throw std::invalid_argument("box_subset: schema mismatch");
  for (size_t i = 0; i < schema.size(); ++i) {
    const auto& a = inner.ivs[i];
    const auto& b = outer.ivs[i];
    if (schema[i].kind == VarKind::kContinuous) {
      if (a.lo < b.lo || a.hi > b.hi) return false;
    } else {
      if (a.ilo < b.ilo || a.ihi > b.ihi) return false;
    }
  }
  return true;
}

bool box_within_goal(const Schema& schema, const Box& b, const GoalSpec& goal) {
  for (const auto& c : goal.constraints) {
    const auto& iv = b.ivs[c.var];
    if (schema[c.var].kind == VarKind::kContinuous) {
      if (iv.lo < c.lo || iv.hi > c.hi) return false;
    } else {
      for (int idx = iv.ilo; idx <= iv.ihi; ++idx) {
        int value = schema[c.var].values[idx];
        bool ok = false;
        for (int a : c.allowed)
          if (a == value) {
            ok = true;
            break;
          }
        if (!ok) return false;
      }
    }
  }
  return true;
}

bool box_intersects_goal(const Schema& schema, const Box& b,
                         const GoalSpec& goal) {
  for (const auto& c : goal.constraints) {
    const auto& iv = b.ivs[c.var];
    if (schema[c.var].kind == VarKind::kContinuous) {
      double lo = std::max(iv.lo, c.lo);
      double hi = std::min(iv.hi, c.hi);
      if (!(lo < hi)) return false;
    } else {
      bool any = false;
      for (int idx = iv.ilo; idx <= iv.ihi && !any; ++idx) {
        int value = schema[c.var].values[idx];
        for (int a : c.allowed)
          if (a == value) {
            any = true;
            break;
          }
      }
      if (!any) return false;
    }
  }
  return true;
}

double interval_measure(const VariableSpec& var, const VarInterval& iv) {
  return var.kind == VarKind::kContinuous
             ? iv.hi - iv.lo
             : static_cast<double>(iv.ihi - iv.ilo + 1);
}

std::string box_to_string(const Schema& schema, const Box& b) {
  std::ostringstream os;
  for (size_t i = 0; i < schema.size(); ++i) {
    if (i) os << ", ";
    os << schema[i].name << ":";
    const auto& iv = b.ivs[i];
    if (schema[i].kind == VarKind::kContinuous) {
      os << "[" << iv.lo << "," << iv.hi << ")";
    } else {
      os << "{";
      for (int idx = iv.ilo; idx <= iv.ihi; ++idx) {
        if (idx > iv.ilo) os << ",";
        os << schema[i].values[idx];
      }
      os << "}";
    }
  }
  return os.str();
}

Cat::Cat(Schema schema) : schema_(std::move(schema)) {
  validate_schema(schema_);
  lineage_ = g_lineage_counter.fetch_add(1);
  CatNode root;
  root.id = 0;
  root.parent = -1;
  root.depth = 0;
  root.box = full_box(schema_);
  nodes_.push_back(std::move(root));
}

const CatNode& Cat::node(int id) const {
  check_id(id);
  return nodes_[id];
}

void Cat::check_id(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("node id not in CAT");
}

bool Cat::var_splittable(const VarInterval& iv, const VariableSpec& var) const {
  if (var.kind == VarKind::kContinuous)
    return iv.hi - iv.lo > min_continuous_width_;
  return iv.ihi > iv.ilo;
}

bool Cat::splittable(int leaf_id) const {
  const CatNode& n = node(leaf_id);
  for (size_t i = 0; i < schema_.size(); ++i)
    if (var_splittable(n.box.ivs[i], schema_[i])) return true;
  return false;
}

void Cat::refine(int leaf_id) {
  check_id(leaf_id);
  CatNode& n = nodes_[leaf_id];
  if (n.refined) throw std::invalid_argument("refine: node is not a leaf");
  if (!splittable(leaf_id)) throw std::invalid_argument("unsplittable");
  n.splits.assign(schema_.size(), SplitPoint{});
  for (size_t i = 0; i < schema_.size(); ++i) {
    const auto& iv = n.box.ivs[i];
    if (!var_splittable(iv, schema_[i])) continue;
    SplitPoint sp;
    sp.split = true;
    if (schema_[i].kind == VarKind::kContinuous)
      sp.mid = 0.5 * (iv.lo + iv.hi);
    else
      sp.imid = (iv.ilo + iv.ihi) / 2;
    n.splits[i] = sp;
  }
  n.refined = true;
}

int Cat::materialize_child(int parent_id, const State& s) {
  const CatNode& p = nodes_[parent_id];
  Box child_box = p.box;
  for (size_t i = 0; i < schema_.size(); ++i) {
    const SplitPoint& sp = p.splits[i];
    if (!sp.split) continue;
    auto& iv = child_box.ivs[i];
    if (schema_[i].kind == VarKind::kContinuous) {
      if (s.values[i] < sp.mid)
        iv.hi = sp.mid;
      else
        iv.lo = sp.mid;
    } else {
      int idx = schema_[i].value_index(static_cast<int>(s.values[i]));
      if (idx <= sp.imid)
        iv.ihi = sp.imid;
      else
        iv.ilo = sp.imid + 1;
    }
  }
  for (int c : p.children)
    if (nodes_[c].box == child_box) return c;
  CatNode child;
  child.id = static_cast<int>(nodes_.size());
  child.parent = parent_id;
  child.depth = p.depth + 1;
  child.box = std::move(child_box);
  nodes_.push_back(child);
  nodes_[parent_id].children.push_back(child.id);
  if (child.depth > depth_max_) depth_max_ = child.depth;
  return child.id;
}

int Cat::leaf_of(const State& s) {
  if (!state_in_domain(schema_, s))
    throw std::invalid_argument("leaf_of: state outside domain");
  int cur = 0;
  while (nodes_[cur].refined) cur = materialize_child(cur, s);
  return cur;
}

int Cat::node_of_box(const Box& b) {
  if (b.ivs.size() != schema_.size())
    throw std::invalid_argument("node_of_box: schema mismatch");
  int cur = 0;
  while (true) {
    if (nodes_[cur].box == b) return cur;
    if (!nodes_[cur].refined)
      throw std::invalid_argument("node_of_box: box is not a node of this CAT");
    // Descend using a probe state at the box's lower corner.
    State probe;
    probe.values.reserve(schema_.size());
    for (size_t i = 0; i < schema_.size(); ++i) {
      const auto& iv = b.ivs[i];
      if (schema_[i].kind == VarKind::kContinuous)
        probe.values.push_back(iv.lo);
      else
        probe.values.push_back(
            static_cast<double>(schema_[i].values[iv.ilo]));
    }
    int next = materialize_child(cur, probe);
    if (!box_subset(schema_, b, nodes_[next].box))
      throw std::invalid_argument("node_of_box: box is not a node of this CAT");
    cur = next;
  }
}

int Cat::lca(int a, int b) const {
  check_id(a);
  check_id(b);
  while (nodes_[a].depth > nodes_[b].depth) a = nodes_[a].parent;
  while (nodes_[b].depth > nodes_[a].depth) b = nodes_[b].parent;
  while (a != b) {
    a = nodes_[a].parent;
    b = nodes_[b].parent;
  }
  return a;
}

std::vector<int> Cat::leaves() const {
  std::vector<int> out;
  for (const auto& n : nodes_)
    if (!n.refined) out.push_back(n.id);
  return out;
}

int Cat::leaf_count() const {
  int c = 0;
  for (const auto& n : nodes_)
    if (!n.refined) ++c;
  return c;
}

void merge_cat(Cat& universal, const Cat& option_cat) {
  if (universal.lineage_ != option_cat.lineage_)
    throw std::invalid_argument("merge_cat: CATs have different lineage");
  if (option_cat.node_count() < universal.node_count())
    throw std::invalid_argument("merge_cat: option CAT is not a refinement");
  for (int i = 0; i < universal.node_count(); ++i) {
    const CatNode& a = universal.nodes_[i];
    const CatNode& b = option_cat.nodes_[i];
    if (a.parent != b.parent || a.depth != b.depth || !(a.box == b.box))
      throw std::invalid_argument("merge_cat: node prefix diverged");
  }
  universal = option_cat;
}

Ccat make_ccat(const Cat& cat, const State& s,
               const std::vector<int>& context_vars) {
  const Schema& schema = cat.schema();
  if (s.values.size() != schema.size())
    throw std::invalid_argument("make_ccat: schema mismatch");
  Ccat c;
  c.cat = &cat;
  c.retained.assign(cat.node_count(), 1);
  for (int id = 0; id < cat.node_count(); ++id) {
    const Box& b = cat.node(id).box;
    for (int v : context_vars) {
      const auto& iv = b.ivs[v];
      double x = s.values[v];
      bool inside;
      if (schema[v].kind == VarKind::kContinuous) {
        inside = x >= iv.lo && x < iv.hi;
      } else {
        int idx = schema[v].value_index(static_cast<int>(x));
        inside = idx >= iv.ilo && idx <= iv.ihi;
      }
      if (!inside) {
        c.retained[id] = 0;
        break;
      }
    }
  }
  return c;
}

namespace {

// Max depth of the retained subtree under n, in edges; -1 if n not retained.
int subtree_depth(const Ccat& c, int n) {
  if (!c.has(n)) return -1;
  int best = 0;
  for (int ch : c.cat->node(n).children) {
    int d = subtree_depth(c, ch);
    if (d >= 0 && d + 1 > best) best = d + 1;
  }
  return best;
}

double delta_rec(const Ccat& a, const Ccat& b, int n) {
  bool in_a = a.has(n);
  bool in_b = b.has(n);
  if (!in_a && !in_b) return 0.0;
  if (in_a && !in_b) return static_cast<double>(subtree_depth(a, n));
  if (!in_a && in_b) return static_cast<double>(subtree_depth(b, n));
  double sum = 0.0;
  for (int ch : a.cat->node(n).children) sum += delta_rec(a, b, ch);
  return sum;
}

}  // namespace

double delta_distance(const Ccat& a, const Ccat& b) {
  if (a.cat == nullptr || a.cat != b.cat)
    throw std::invalid_argument("delta_distance: C-CATs from different CATs");
  return delta_rec(a, b, a.cat->root());
}

double sigma_distance(const Cat& cat, int a, int b, double w1, double w2) {
  int l = cat.lca(a, b);
  double term1 = cat.depth_max() - cat.node(l).depth + 1;
  double term2 =
      0.5 * ((cat.node(a).depth - cat.node(l).depth) +
             (cat.node(b).depth - cat.node(l).depth));
  return w1 * term1 + w2 * term2;
}

}  // namespace chirp
