#include "chirp/mdp.hpp"

#include <set>
#include <stdexcept>

namespace chirp {

void validate_schema(const Schema& schema) {
  if (schema.empty()) throw std::invalid_argument("schema is empty");
  for (const auto& v : schema) {
    if (v.kind == VarKind::kContinuous) {
      if (!(v.lo < v.hi))
        throw std::invalid_argument("variable " + v.name +
                                    ": continuous domain needs min < max");
    } else {
      if (v.values.empty())
        throw std::invalid_argument("variable " + v.name +
                                    ": discrete domain is empty");
      std::set<int> uniq(v.values.begin(), v.values.end());
      if (uniq.size() != v.values.size())
        throw std::invalid_argument("variable " + v.name +
                                    ": duplicate discrete values");
    }
  }
}

int var_index(const Schema& schema, const std::string& name) {
  for (size_t i = 0; i < schema.size(); ++i)
    if (schema[i].name == name) return static_cast<int>(i);
  throw std::invalid_argument("unknown variable: " + name);
}

bool state_in_domain(const Schema& schema, const State& s) {
  if (s.values.size() != schema.size()) return false;
  for (size_t i = 0; i < schema.size(); ++i) {
    const auto& v = schema[i];
    double x = s.values[i];
    if (v.kind == VarKind::kContinuous) {
      if (x < v.lo || x >= v.hi) return false;
    } else {
      if (x != static_cast<double>(static_cast<int>(x))) return false;
      if (v.value_index(static_cast<int>(x)) < 0) return false;
    }
  }
  return true;
}

State make_state(const Schema& schema, std::vector<double> values) {
  State s{std::move(values)};
  if (!state_in_domain(schema, s))
    throw std::invalid_argument("state value outside variable domain");
  return s;
}

bool is_goal(const Schema& schema, const State& s, const GoalSpec& goal) {
  if (s.values.size() != schema.size())
    throw std::invalid_argument("is_goal: state does not match schema");
  for (const auto& c : goal.constraints) {
    if (c.var < 0 || c.var >= static_cast<int>(schema.size()))
      throw std::invalid_argument("is_goal: constraint on undeclared variable");
    double x = s.values[c.var];
    if (schema[c.var].kind == VarKind::kContinuous) {
      if (x < c.lo || x >= c.hi) return false;
    } else {
      bool found = false;
      for (int a : c.allowed)
        if (static_cast<int>(x) == a) {
          found = true;
          break;
        }
      if (!found) return false;
    }
  }
  return true;
}

bool Trajectory::chained() const {
  for (size_t t = 0; t + 1 < steps.size(); ++t)
    if (!(steps[t].s2 == steps[t + 1].s)) return false;
  return true;
}

}  // namespace chirp
