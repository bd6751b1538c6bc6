#include "chirp/domains.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <stdexcept>

namespace chirp {

namespace {

constexpr int kMoveN = 0, kMoveS = 1, kMoveE = 2, kMoveW = 3;

Cell cell_of(const State& s) {
  return {static_cast<int>(s.values[0]), static_cast<int>(s.values[1])};
}

VariableSpec cont_var(const std::string& name, double lo, double hi) {
  VariableSpec v;
  v.name = name;
  v.kind = VarKind::kContinuous;
  v.lo = lo;
  v.hi = hi;
  return v;
}

VariableSpec disc_var(const std::string& name, int n) {
  VariableSpec v;
  v.name = name;
  v.kind = VarKind::kDiscrete;
  for (int i = 0; i < n; ++i) v.values.push_back(i);
  return v;
}

std::vector<std::string> open_grid(int w, int h) {
  return std::vector<std::string>(h, std::string(w, '.'));
}

void carve_four_rooms(std::vector<std::string>& grid) {
  int h = static_cast<int>(grid.size());
  int w = static_cast<int>(grid[0].size());
  int cx = w / 2, cy = h / 2;
  for (int y = 0; y < h; ++y) grid[y][cx] = '#';
  for (int x = 0; x < w; ++x) grid[cy][x] = '#';
  grid[h / 4][cx] = '.';
  grid[(3 * h) / 4][cx] = '.';
  grid[cy][w / 4] = '.';
  grid[cy][(3 * w) / 4] = '.';
}

bool grid_connected(const std::vector<std::string>& grid) {
  int h = static_cast<int>(grid.size());
  int w = static_cast<int>(grid[0].size());
  int free_total = 0;
  Cell start{-1, -1};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (grid[y][x] != '#') {
        ++free_total;
        if (start.first < 0) start = {x, y};
      }
  if (free_total == 0) return false;
  std::vector<char> seen(w * h, 0);
  std::queue<Cell> q;
  q.push(start);
  seen[start.second * w + start.first] = 1;
  int reached = 0;
  while (!q.empty()) {
    auto [x, y] = q.front();
    q.pop();
    ++reached;
    const int dx[] = {0, 0, 1, -1};
    const int dy[] = {1, -1, 0, 0};
    for (int d = 0; d < 4; ++d) {
      int nx = x + dx[d], ny = y + dy[d];
      if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
      if (grid[ny][nx] == '#' || seen[ny * w + nx]) continue;
      seen[ny * w + nx] = 1;
      q.push({nx, ny});
    }
  }
  return reached == free_total;
}

void carve_maze_walls(std::vector<std::string>& grid) {
  int h = static_cast<int>(grid.size());
  int w = static_cast<int>(grid[0].size());
  // Fixed pseudo-random obstacle layout: walls are only kept when the free
  // space stays connected, so every free cell remains reachable.
  Rng rng(mix64(0x6d617a65ull ^ (static_cast<uint64_t>(w) * 131 + h)));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (rng.uniform() >= 0.15) continue;
      grid[y][x] = '#';
      if (!grid_connected(grid)) grid[y][x] = '.';
    }
  }
}

void place_landmark(std::vector<std::string>& grid, Cell c, char mark) {
  int h = static_cast<int>(grid.size());
  int w = static_cast<int>(grid[0].size());
  // Nudge onto the nearest free cell if the preferred one is a wall.
  for (int r = 0; r < w + h; ++r) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        int x = c.first + dx, y = c.second + dy;
        if (x < 0 || x >= w || y < 0 || y >= h) continue;
        if (grid[y][x] == '.') {
          grid[y][x] = mark;
          return;
        }
      }
    }
  }
  throw std::runtime_error("no free cell for landmark");
}

std::vector<Cell> find_cells(const std::vector<std::string>& grid, char mark) {
  std::vector<Cell> out;
  for (int y = 0; y < static_cast<int>(grid.size()); ++y)
    for (int x = 0; x < static_cast<int>(grid[y].size()); ++x)
      if (grid[y][x] == mark) out.push_back({x, y});
  return out;
}

void finish_spec(DomainSpec& spec) {
  spec.height = static_cast<int>(spec.grid.size());
  spec.width = static_cast<int>(spec.grid[0].size());
  for (const auto& row : spec.grid)
    if (static_cast<int>(row.size()) != spec.width)
      throw std::invalid_argument("map grid rows have unequal length");
  double w = spec.width, h = spec.height;
  if (spec.id == "maze" || spec.id == "four_rooms") {
    spec.schema = {cont_var("x", 0, w), cont_var("y", 0, h)};
    spec.actions = {"north", "south", "east", "west"};
  } else if (spec.id == "office") {
    spec.schema = {cont_var("x", 0, w), cont_var("y", 0, h),
                   disc_var("has_coffee", 2), disc_var("has_mail", 2)};
    spec.actions = {"north", "south", "east", "west"};
    spec.step_reward = 0.0;
    auto coffee = find_cells(spec.grid, 'C');
    auto mail = find_cells(spec.grid, 'M');
    spec.desks = find_cells(spec.grid, 'D');
    if (coffee.size() != 1 || mail.size() != 1 || spec.desks.empty())
      throw std::invalid_argument("office map needs one C, one M, >=1 D");
    spec.coffee = coffee[0];
    spec.mail = mail[0];
  } else if (spec.id == "taxi") {
    for (char m = 'A'; m <= 'H'; ++m)
      for (Cell c : find_cells(spec.grid, m)) spec.landmarks.push_back(c);
    if (spec.landmarks.size() < 2)
      throw std::invalid_argument("taxi map needs >= 2 landmarks");
    spec.schema = {cont_var("x", 0, w), cont_var("y", 0, h),
                   disc_var("l", static_cast<int>(spec.landmarks.size()) + 1),
                   disc_var("p", 2)};
    spec.actions = {"north", "south", "east", "west", "pickup", "dropoff"};
  } else if (spec.id == "minecraft") {
    spec.wood = find_cells(spec.grid, 'W');
    spec.stone = find_cells(spec.grid, 'S');
    spec.iron = find_cells(spec.grid, 'I');
    if (spec.wood.empty() || spec.stone.empty() || spec.iron.empty())
      throw std::invalid_argument("minecraft map needs W, S and I cells");
    spec.schema = {cont_var("x", 0, w),        cont_var("y", 0, h),
                   disc_var("has_wood", 2),    disc_var("has_stick", 2),
                   disc_var("has_stone", 2),   disc_var("has_iron", 2),
                   disc_var("axe", 2)};
    spec.actions = {"north", "south", "east", "west", "gather", "craft"};
  } else {
    throw std::invalid_argument("unknown domain_id: " + spec.id);
  }
  for (Cell c : spec.landmarks)
    if (!spec.in_bounds(c.first, c.second))
      throw std::invalid_argument("landmark outside map bounds");
}

}  // namespace

int DomainSpec::action_index(const std::string& name) const {
  for (size_t i = 0; i < actions.size(); ++i)
    if (actions[i] == name) return static_cast<int>(i);
  throw std::invalid_argument("unknown action: " + name);
}

DomainSpec make_domain(const std::string& domain_id, const SizeConfig& size) {
  DomainSpec spec;
  spec.id = domain_id;
  int w = size.width, h = size.height;
  if (domain_id == "maze") {
    if (w == 0) w = 24;
    if (h == 0) h = w == 24 ? 24 : w;
    spec.grid = open_grid(w, h);
    carve_maze_walls(spec.grid);
  } else if (domain_id == "four_rooms") {
    if (w == 0) w = 33;
    if (h == 0) h = w == 33 ? 33 : w;
    spec.grid = open_grid(w, h);
    carve_four_rooms(spec.grid);
  } else if (domain_id == "office") {
    if (w == 0) w = 11;
    if (h == 0) h = 15;
    spec.grid = open_grid(w, h);
    carve_four_rooms(spec.grid);
    place_landmark(spec.grid, {1, 1}, 'C');
    place_landmark(spec.grid, {w - 2, h - 2}, 'M');
    place_landmark(spec.grid, {1, h - 2}, 'D');
    place_landmark(spec.grid, {w - 2, 1}, 'D');
  } else if (domain_id == "taxi") {
    if (w == 0) w = 30;
    if (h == 0) h = w == 30 ? 30 : w;
    int n = size.n_landmarks == 0 ? 4 : size.n_landmarks;
    if (n < 2 || n > 8)
      throw std::invalid_argument("taxi supports 2..8 landmarks");
    spec.grid = open_grid(w, h);
    std::vector<Cell> spots = {{0, 0},     {w - 1, h - 1}, {0, h - 1},
                               {w - 1, 0}, {w / 2, 0},     {w / 2, h - 1},
                               {0, h / 2}, {w - 1, h / 2}};
    for (int i = 0; i < n; ++i)
      place_landmark(spec.grid, spots[i], static_cast<char>('A' + i));
  } else if (domain_id == "minecraft") {
    if (w == 0) w = 22;
    if (h == 0) h = w == 22 ? 22 : w;
    spec.grid = open_grid(w, h);
    place_landmark(spec.grid, {2, 2}, 'W');
    place_landmark(spec.grid, {3, 2}, 'W');
    place_landmark(spec.grid, {w - 3, 2}, 'S');
    place_landmark(spec.grid, {w - 3, 3}, 'S');
    place_landmark(spec.grid, {2, h - 3}, 'I');
    place_landmark(spec.grid, {3, h - 3}, 'I');
  } else {
    throw std::invalid_argument("unknown domain_id: " + domain_id);
  }
  finish_spec(spec);
  return spec;
}

DomainSpec make_domain_with_map(const std::string& domain_id,
                                const std::vector<std::string>& grid,
                                const SizeConfig&) {
  if (grid.empty() || grid[0].empty())
    throw std::invalid_argument("empty map grid");
  DomainSpec spec;
  spec.id = domain_id;
  spec.grid = grid;
  finish_spec(spec);
  return spec;
}

std::vector<std::string> load_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file: " + path);
  std::vector<std::string> grid;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) grid.push_back(line);
  }
  return grid;
}

bool cells_connected(const DomainSpec& spec, Cell a, Cell b) {
  if (spec.wall(a.first, a.second) || spec.wall(b.first, b.second))
    return false;
  std::vector<char> seen(spec.width * spec.height, 0);
  std::queue<Cell> q;
  q.push(a);
  seen[a.second * spec.width + a.first] = 1;
  while (!q.empty()) {
    auto [x, y] = q.front();
    q.pop();
    if (Cell{x, y} == b) return true;
    const int dx[] = {0, 0, 1, -1};
    const int dy[] = {1, -1, 0, 0};
    for (int d = 0; d < 4; ++d) {
      int nx = x + dx[d], ny = y + dy[d];
      if (spec.wall(nx, ny) || seen[ny * spec.width + nx]) continue;
      seen[ny * spec.width + nx] = 1;
      q.push({nx, ny});
    }
  }
  return false;
}

namespace {

std::vector<Cell> free_cells(const DomainSpec& spec) {
  std::vector<Cell> out;
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x)
      if (!spec.wall(x, y)) out.push_back({x, y});
  return out;
}

void add_cell_goal(GoalSpec& goal, Cell c) {
  GoalConstraint gx;
  gx.var = 0;
  gx.lo = c.first;
  gx.hi = c.first + 1;
  GoalConstraint gy;
  gy.var = 1;
  gy.lo = c.second;
  gy.hi = c.second + 1;
  goal.constraints.push_back(gx);
  goal.constraints.push_back(gy);
}

void add_value_goal(GoalSpec& goal, int var, int value) {
  GoalConstraint g;
  g.var = var;
  g.allowed = {value};
  goal.constraints.push_back(g);
}

}  // namespace

Task sample_task(const DomainSpec& spec, Rng& rng) {
  auto cells = free_cells(spec);
  if (cells.empty()) throw std::runtime_error("sample_task: no free cells");
  const int kRetries = 200;
  for (int attempt = 0; attempt < kRetries; ++attempt) {
    Cell start = cells[rng.uniform_int(static_cast<int>(cells.size()))];
    double ox = rng.uniform(), oy = rng.uniform();
    Task task;
    task.reward_id = "default";
    double sx = start.first + ox, sy = start.second + oy;
    if (spec.id == "maze" || spec.id == "four_rooms") {
      Cell goal = cells[rng.uniform_int(static_cast<int>(cells.size()))];
      if (goal == start || !cells_connected(spec, start, goal)) continue;
      task.initial = make_state(spec.schema, {sx, sy});
      add_cell_goal(task.goal, goal);
      return task;
    }
    if (spec.id == "taxi") {
      int n = static_cast<int>(spec.landmarks.size());
      int pickup = rng.uniform_int(n);
      int dest = rng.uniform_int(n);
      if (pickup == dest) continue;
      if (!cells_connected(spec, start, spec.landmarks[pickup]) ||
          !cells_connected(spec, spec.landmarks[pickup],
                           spec.landmarks[dest]))
        continue;
      task.initial =
          make_state(spec.schema, {sx, sy, static_cast<double>(pickup + 1), 0});
      add_value_goal(task.goal, 2, dest + 1);
      add_value_goal(task.goal, 3, 0);
      return task;
    }
    if (spec.id == "office") {
      Cell desk = spec.desks[rng.uniform_int(static_cast<int>(spec.desks.size()))];
      if (!cells_connected(spec, start, spec.coffee) ||
          !cells_connected(spec, spec.coffee, spec.mail) ||
          !cells_connected(spec, spec.mail, desk))
        continue;
      task.initial = make_state(spec.schema, {sx, sy, 0, 0});
      add_cell_goal(task.goal, desk);
      add_value_goal(task.goal, 2, 1);
      add_value_goal(task.goal, 3, 1);
      return task;
    }
    if (spec.id == "minecraft") {
      bool iron_axe = rng.uniform_int(2) == 1;
      task.reward_id = iron_axe ? "iron_axe" : "stone_axe";
      const auto& resource = iron_axe ? spec.iron : spec.stone;
      if (!cells_connected(spec, start, spec.wood[0]) ||
          !cells_connected(spec, spec.wood[0], resource[0]))
        continue;
      task.initial = make_state(spec.schema, {sx, sy, 0, 0, 0, 0, 0});
      add_value_goal(task.goal, 6, 1);
      return task;
    }
    throw std::invalid_argument("unknown domain_id: " + spec.id);
  }
  throw std::runtime_error("sample_task: no solvable task found for " +
                           spec.id);
}

namespace {

// Resolve a movement with 0.8 success and 0.1 slip to each perpendicular
// direction; blocked moves leave the position unchanged.
State apply_move(const DomainSpec& spec, const State& s, int action, Rng& rng) {
  int dir = action;
  double u = rng.uniform();
  if (u >= spec.p_move_success) {
    bool first = u < spec.p_move_success + spec.p_slip;
    if (action == kMoveN || action == kMoveS)
      dir = first ? kMoveE : kMoveW;
    else
      dir = first ? kMoveN : kMoveS;
  }
  double dx = dir == kMoveE ? 1.0 : dir == kMoveW ? -1.0 : 0.0;
  double dy = dir == kMoveN ? 1.0 : dir == kMoveS ? -1.0 : 0.0;
  double nx = s.values[0] + dx, ny = s.values[1] + dy;
  State next = s;
  if (!spec.wall(static_cast<int>(std::floor(nx)),
                 static_cast<int>(std::floor(ny)))) {
    next.values[0] = nx;
    next.values[1] = ny;
  }
  return next;
}

int landmark_at(const DomainSpec& spec, Cell c) {
  for (size_t i = 0; i < spec.landmarks.size(); ++i)
    if (spec.landmarks[i] == c) return static_cast<int>(i);
  return -1;
}

bool cell_in(const std::vector<Cell>& cells, Cell c) {
  return std::find(cells.begin(), cells.end(), c) != cells.end();
}

}  // namespace

StepOutcome domain_step(const DomainSpec& spec, const Task& task,
                        const State& s, int action, Rng& rng) {
  if (action < 0 || action >= static_cast<int>(spec.actions.size()))
    throw std::invalid_argument("domain_step: action not in spec");
  if (!state_in_domain(spec.schema, s))
    throw std::invalid_argument("domain_step: state outside domain");

  StepOutcome out;
  out.reward = spec.step_reward;
  if (action <= kMoveW) {
    out.next_state = apply_move(spec, s, action, rng);
  } else {
    out.next_state = s;
    Cell c = cell_of(s);
    if (spec.id == "taxi") {
      int at = landmark_at(spec, c);
      if (spec.actions[action] == "pickup") {
        int l = static_cast<int>(s.values[2]);
        if (s.values[3] == 0 && l >= 1 && at == l - 1) {
          out.next_state.values[2] = 0;
          out.next_state.values[3] = 1;
        } else {
          out.reward = spec.illegal_reward;
          out.illegal = true;
        }
      } else {  // dropoff
        if (s.values[3] == 1 && at >= 0) {
          out.next_state.values[2] = at + 1;
          out.next_state.values[3] = 0;
        } else {
          out.reward = spec.illegal_reward;
          out.illegal = true;
        }
      }
    } else if (spec.id == "minecraft") {
      if (spec.actions[action] == "gather") {
        if (cell_in(spec.wood, c)) out.next_state.values[2] = 1;
        if (cell_in(spec.stone, c)) out.next_state.values[4] = 1;
        if (cell_in(spec.iron, c)) out.next_state.values[5] = 1;
      } else {  // craft
        bool want_iron = task.reward_id == "iron_axe";
        if (s.values[2] == 1 && s.values[3] == 0) {
          out.next_state.values[3] = 1;  // wood -> stick
        } else if (s.values[3] == 1 &&
                   ((want_iron && s.values[5] == 1) ||
                    (!want_iron && s.values[4] == 1))) {
          out.next_state.values[6] = 1;
        }
      }
    } else {
      throw std::invalid_argument("domain_step: action not in spec");
    }
  }

  if (spec.id == "office") {
    Cell c = cell_of(out.next_state);
    if (c == spec.coffee) out.next_state.values[2] = 1;
    if (c == spec.mail) out.next_state.values[3] = 1;
  }

  out.done = is_goal(spec.schema, out.next_state, task.goal);
  if (out.done) out.reward = spec.goal_reward;
  return out;
}

}  // namespace chirp
