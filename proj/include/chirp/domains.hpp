#pragma once

#include <string>
#include <utility>
#include <vector>

#include "chirp/mdp.hpp"

namespace chirp {

// Overrides for desk-scale variants; zero fields keep the domain default.
struct SizeConfig {
  int width = 0;
  int height = 0;
  int n_landmarks = 0;  // taxi only
};

using Cell = std::pair<int, int>;  // (x, y)

struct DomainSpec {
  std::string id;
  Schema schema;
  std::vector<std::string> actions;
  int width = 0, height = 0;
  std::vector<std::string> grid;  // grid[y][x]: '#', '.', or a landmark char
  std::vector<Cell> landmarks;    // taxi pickup/dropoff cells
  Cell coffee{-1, -1}, mail{-1, -1};  // office
  std::vector<Cell> desks;            // office
  std::vector<Cell> wood, stone, iron;  // minecraft resource cells
  double p_move_success = 0.8;
  double p_slip = 0.1;  // each perpendicular direction
  double step_reward = -1.0;
  double goal_reward = 500.0;
  double illegal_reward = -100.0;

  bool in_bounds(int cx, int cy) const {
    return cx >= 0 && cx < width && cy >= 0 && cy < height;
  }
  bool wall(int cx, int cy) const {
    return !in_bounds(cx, cy) || grid[cy][cx] == '#';
  }
  int action_index(const std::string& name) const;
};

// domain_id in {maze, four_rooms, office, taxi, minecraft}.
DomainSpec make_domain(const std::string& domain_id,
                       const SizeConfig& size = {});

// Same, but with user-supplied geometry ('#' wall, '.' free, landmark
// letters per domain: taxi A..; office C/M/D; minecraft W/S/I).
DomainSpec make_domain_with_map(const std::string& domain_id,
                                const std::vector<std::string>& grid,
                                const SizeConfig& size = {});

std::vector<std::string> load_map_file(const std::string& path);

bool cells_connected(const DomainSpec& spec, Cell a, Cell b);

// Random solvable task: initial state uniform over free positions, goal
// sampled per domain. Throws after exhausting retries.
Task sample_task(const DomainSpec& spec, Rng& rng);

StepOutcome domain_step(const DomainSpec& spec, const Task& task,
                        const State& s, int action, Rng& rng);

// Episodic view of one task; steps count against the budget when set.
class TaskMdp : public MdpView {
 public:
  TaskMdp(const DomainSpec& spec, const Task& task, int stepmax,
          StepBudget* budget = nullptr)
      : spec_(spec), task_(task), stepmax_(stepmax), budget_(budget) {}

  State reset(Rng&) override { return task_.initial; }
  StepOutcome step(const State& s, int action, Rng& rng) override {
    if (budget_) ++budget_->used;
    return domain_step(spec_, task_, s, action, rng);
  }
  bool at_goal(const State& s) const override {
    return is_goal(spec_.schema, s, task_.goal);
  }
  int n_actions() const override {
    return static_cast<int>(spec_.actions.size());
  }
  int stepmax() const override { return stepmax_; }
  long budget_left() const override {
    return budget_ ? budget_->left() : 1'000'000'000L;
  }

 private:
  const DomainSpec& spec_;
  Task task_;
  int stepmax_;
  StepBudget* budget_;
};

}  // namespace chirp
