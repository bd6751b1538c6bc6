#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chirp/rng.hpp"

namespace chirp {

enum class VarKind { kContinuous, kDiscrete };

// One state variable with an ordered domain: a half-open real interval
// [lo, hi) or a finite ordered value list.
struct VariableSpec {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lo = 0.0, hi = 0.0;  // continuous
  std::vector<int> values;    // discrete, ordered, duplicate-free

  double measure() const {
    return kind == VarKind::kContinuous ? hi - lo
                                        : static_cast<double>(values.size());
  }
  // Index of a discrete value in domain order; -1 if absent.
  int value_index(int v) const {
    for (size_t i = 0; i < values.size(); ++i)
      if (values[i] == v) return static_cast<int>(i);
    return -1;
  }
};

using Schema = std::vector<VariableSpec>;

void validate_schema(const Schema& schema);
int var_index(const Schema& schema, const std::string& name);

// One value per variable, in declaration order. Discrete values are stored
// as their (integer) value.
struct State {
  std::vector<double> values;
  bool operator==(const State&) const = default;
};

bool state_in_domain(const Schema& schema, const State& s);
// Validating constructor; throws on any out-of-domain value.
State make_state(const Schema& schema, std::vector<double> values);

// Conjunction of per-variable constraints: interval for continuous
// variables, value set for discrete ones.
struct GoalConstraint {
  int var = -1;
  double lo = 0.0, hi = 0.0;  // continuous: [lo, hi)
  std::vector<int> allowed;   // discrete
};

struct GoalSpec {
  std::vector<GoalConstraint> constraints;
};

bool is_goal(const Schema& schema, const State& s, const GoalSpec& goal);

struct Task {
  State initial;
  GoalSpec goal;
  std::string reward_id;
};

struct TaskStream {
  std::string domain_id;
  uint64_t seed = 0;
  long per_task_budget = 0;
  std::vector<Task> tasks;
};

struct Transition {
  State s;
  int action = 0;
  double reward = 0.0;
  State s2;
  bool done = false;
};

struct Trajectory {
  std::vector<Transition> steps;
  // Consecutive transitions chain: steps[t].s2 == steps[t+1].s.
  bool chained() const;
};

struct StepOutcome {
  State next_state;
  double reward = 0.0;
  bool done = false;
  bool illegal = false;
};

// Shared interaction budget; every simulator call made through a view
// counts against it.
struct StepBudget {
  long cap = 0;
  long used = 0;
  bool exhausted() const { return used >= cap; }
  long left() const { return cap - used; }
};

// Episodic view of an MDP: a full task or an option MDP.
class MdpView {
 public:
  virtual ~MdpView() = default;
  virtual State reset(Rng& rng) = 0;
  virtual StepOutcome step(const State& s, int action, Rng& rng) = 0;
  virtual bool at_goal(const State& s) const = 0;
  virtual int n_actions() const = 0;
  virtual int stepmax() const = 0;
  virtual long budget_left() const = 0;
};

}  // namespace chirp
