#pragma once

#include <iosfwd>
#include <string>

#include "chirp/agent.hpp"

namespace chirp {

// Round-trip-exact decimal form of a double.
std::string fmt_double(double x);

void save_schema(std::ostream& os, const Schema& schema);
Schema load_schema(std::istream& is);

// Task streams are validated against the domain's schema on load.
void save_task_stream(std::ostream& os, const TaskStream& stream);
TaskStream load_task_stream(std::istream& is, const Schema& schema);
void save_task_stream_file(const std::string& path, const TaskStream& stream);
TaskStream load_task_stream_file(const std::string& path,
                                 const Schema& schema);

struct CatIo {
  static void save(std::ostream& os, const Cat& cat);
  static Cat load(std::istream& is);
};

void save_cat(std::ostream& os, const Cat& cat);
Cat load_cat(std::istream& is);

struct Checkpoint {
  int tasks_completed = 0;
  std::string rng_state;
  Cat cat;
  OptionModel model;

  explicit Checkpoint(Cat c) : cat(std::move(c)) {}
};

struct CheckpointIo {
  static void save(std::ostream& os, const Cat& cat, const OptionModel& model,
                   const std::string& rng_state, int tasks_completed);
  static Checkpoint load(std::istream& is);
};

void save_checkpoint_file(const std::string& path, const ChirpAgent& agent,
                          int tasks_completed);
Checkpoint load_checkpoint_file(const std::string& path);

// CLI helpers: "x=1.5,y=3,p=0" and "x=[2,3);l=3,4;p=0" (continuous
// constraints as half-open intervals, discrete as value lists).
State parse_state(const Schema& schema, const std::string& text);
GoalSpec parse_goal(const Schema& schema, const std::string& text);

}  // namespace chirp
