#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "chirp/cat.hpp"
#include "chirp/catrl.hpp"

namespace chirp {

// A learned temporally extended action: private CAT, symbolic endpoints
// over its abstract states, and a Q-table-backed greedy policy.
struct AbstractOption {
  Cat cat;
  std::vector<Box> initiation;
  std::vector<Box> termination;
  QTable policy;
  int provenance_task = -1;
  int provenance_segment = -1;
  State train_start;            // concrete state opening the source segment
  int recent_success_len = 0;   // steps of the latest successful run
  bool needs_finetune = false;
  // Provenance of the terminating endpoint: set when it came from a
  // context-specific distance trigger, with the concrete variables that
  // changed across that transition.
  bool termination_from_delta = false;
  std::vector<int> delta_changed_vars;

  AbstractOption(Cat c, QTable p) : cat(std::move(c)), policy(std::move(p)) {}
};

// Declarative endpoints of an option before its CAT and policy exist.
struct OptionSignature {
  std::vector<Box> initiation;
  std::vector<Box> termination;
  // True when the termination stands for the task's concrete goal set
  // rather than intrinsic abstract terminations.
  bool goal_directed = false;
};

// Termination of a precedes initiation of b (box-set inclusion).
bool composable(const AbstractOption& a, const AbstractOption& b);

// Growing model of invented options with endpoint-based deduplication.
class OptionModel {
 public:
  int size() const { return static_cast<int>(options_.size()); }
  const AbstractOption& option(int i) const { return options_.at(i); }
  AbstractOption& option(int i) { return options_.at(i); }
  double quality(int i) const { return quality_.at(i); }

  // Insert or merge on equal signature; keeps the higher-quality policy.
  // Returns the option's index in the model.
  int update(AbstractOption opt, double quality);

 private:
  std::vector<AbstractOption> options_;
  std::vector<double> quality_;
  friend struct CheckpointIo;
};

// One greedy episode that reaches the view's goal; retried with fresh seeds
// up to the cap. Throws when every attempt fails.
Trajectory rollout(MdpView& view, Cat& cat, const QTable& policy, Rng& rng,
                   int retries = 20);

// 1 - mean over active leaves of measure(leaf interval on v)/measure(domain).
double refinement_degree(const Cat& cat, int var);

// Variables that change rarely along the trajectory yet are highly refined
// in the CAT.
std::vector<int> identify_context_variables(const Cat& cat,
                                            const Trajectory& traj,
                                            const Hyper& h);

struct Endpoint {
  int node = -1;       // abstract state id
  int path_index = -1; // position in the deduplicated abstract trajectory
  bool from_delta = false;
  bool from_sigma = false;
  std::vector<int> changed_vars;  // across the triggering concrete transition
};

struct EndpointSequence {
  std::vector<int> path;          // deduplicated abstract trajectory (leaves)
  std::vector<int> path_start;    // concrete index where each leaf begins
  std::vector<Endpoint> endpoints;  // ordered, includes start and goal
};

// ccats[i] is the C-CAT of the i-th trajectory state (steps.size()+1 total).
EndpointSequence identify_endpoints(Cat& cat, const std::vector<Ccat>& ccats,
                                    const Trajectory& traj, const Hyper& h);

// Builds the option MDP used to fine-tune one invented option.
using OptionViewFactory = std::function<std::unique_ptr<MdpView>(
    const std::vector<Box>& termination, const State& start, int stepmax)>;

// Alg.-level invention from one successful trajectory: context variables,
// C-CATs, endpoints, segment options, fine-tuning. The factory may be null
// to skip fine-tuning.
std::vector<AbstractOption> invent_options(Cat& cat, const QTable& policy,
                                           const Trajectory& traj,
                                           const Hyper& h,
                                           const OptionViewFactory& factory,
                                           Rng& rng);

// Convenience form that computes its own rollout from the view.
std::vector<AbstractOption> invent_options(Cat& cat, const QTable& policy,
                                           MdpView& view, const Hyper& h,
                                           const OptionViewFactory& factory,
                                           Rng& rng);

}  // namespace chirp
