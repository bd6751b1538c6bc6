#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chirp/domains.hpp"
#include "chirp/planner.hpp"

namespace chirp {

// Episodic MDP for training one option: same dynamics as the task, but the
// episode ends with an intrinsic reward on entering the termination boxes
// (or the concrete goal set when goal-directed). Reaching the task goal
// mid-episode does not end a non-goal-directed option.
class OptionMdp : public MdpView {
 public:
  OptionMdp(const DomainSpec& spec, const Task& task, State start,
            std::vector<Box> termination, bool goal_directed, int stepmax,
            StepBudget* budget, double intrinsic_reward = 500.0);

  State reset(Rng&) override { return start_; }
  StepOutcome step(const State& s, int action, Rng& rng) override;
  bool at_goal(const State& s) const override;
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
  State start_;
  std::vector<Box> termination_;
  bool goal_directed_;
  int stepmax_;
  StepBudget* budget_;
  double intrinsic_;
};

struct ExecOutcome {
  bool success = false;
  State end;
  int steps = 0;
};

// Greedy closed-loop execution of a policy until the termination condition,
// the step cap, or budget exhaustion.
ExecOutcome execute_option(const DomainSpec& spec, const Task& task, Cat& cat,
                           const QTable& policy,
                           const std::vector<Box>& termination,
                           bool goal_directed, const State& start, int stepmax,
                           StepBudget& budget, Rng& rng);

struct TaskResult {
  bool solved = false;
  long timesteps = 0;
  int options_invented = 0;
  int replans = 0;
  int plan_options_executed = 0;  // pre-existing options run while solving
};

// Continual agent: universal CAT and option model persist across tasks;
// each task is solved by planning over invented options, training the
// missing segments, and inventing new options from their trajectories.
class ChirpAgent {
 public:
  ChirpAgent(DomainSpec spec, Hyper hyper, uint64_t seed);

  TaskResult solve_task(const Task& task, long budget);

  // Runs the stream in order; on_task (optional) fires after each task.
  std::vector<TaskResult> solve_stream(
      const TaskStream& stream,
      const std::function<void(int, const TaskResult&)>& on_task = nullptr);

  const DomainSpec& domain() const { return spec_; }
  const Hyper& hyper() const { return hyper_; }
  Cat& cat() { return cat_; }
  const Cat& cat() const { return cat_; }
  OptionModel& model() { return model_; }
  const OptionModel& model() const { return model_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  // Install checkpointed state.
  void restore(Cat cat, OptionModel model, const std::string& rng_state);

  // Optional diagnostic stream (nullptr: silent).
  void set_trace(std::ostream* os) { trace_ = os; }

 private:
  DomainSpec spec_;
  Hyper hyper_;
  Cat cat_;
  OptionModel model_;
  Rng rng_;
  std::ostream* trace_ = nullptr;
};

}  // namespace chirp
