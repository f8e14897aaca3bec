#include "coex/world.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace coex::world {

namespace {

constexpr double kWall[3] = {0.12, 0.12, 0.12};
constexpr double kDoor[3] = {0.70, 0.50, 0.20};
constexpr double kItem[3] = {0.95, 0.85, 0.10};
constexpr double kDistractor[3] = {0.40, 0.95, 0.90};
constexpr double kAvatar[3] = {1.00, 0.95, 1.00};
// Two-tone checkerboard palettes, one pair per room (cycled past 6 rooms).
// Floor hues are chosen far apart in RGB so rooms are strongly identifiable,
// while every tone's gray mean stays in [0.31, 0.49] — well below the
// distractor (0.75) and avatar (0.98) brightness so sprites remain salient
// in grayscale observations.
constexpr double kPalettes[6][2][3] = {
    {{0.54, 0.62, 0.04}, {0.64, 0.74, 0.05}}, {{0.76, 0.09, 0.36}, {0.90, 0.11, 0.43}},
    {{0.22, 0.04, 0.68}, {0.26, 0.05, 0.81}}, {{0.04, 0.61, 0.47}, {0.05, 0.73, 0.56}},
    {{0.55, 0.35, 0.12}, {0.66, 0.42, 0.14}}, {{0.25, 0.35, 0.55}, {0.30, 0.42, 0.66}}};

constexpr int kMoveDr[kNumActions] = {0, -1, 1, 0, 0};
constexpr int kMoveDc[kNumActions] = {0, 0, 0, -1, 1};

constexpr int kVelocities[8][2] = {{0, 1},  {0, -1}, {1, 0},  {-1, 0},
                                   {1, 1},  {1, -1}, {-1, 1}, {-1, -1}};

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("world state: truncated stream reading ") + what);
  return v;
}

}  // namespace

World::World(WorldConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.grid < 3) throw std::invalid_argument("world: grid must be at least 3 cells");
  if (cfg_.frame_px <= 0 || cfg_.frame_px % cfg_.grid != 0) {
    throw std::invalid_argument("world: frame size " + std::to_string(cfg_.frame_px) +
                                " not divisible by grid " + std::to_string(cfg_.grid));
  }
  if (cfg_.p_sticky < 0.0 || cfg_.p_sticky > 1.0) {
    throw std::invalid_argument("world: p_sticky must lie in [0,1]");
  }
  if (cfg_.max_steps < 1) throw std::invalid_argument("world: max_steps must be positive");
  if (cfg_.rooms.empty()) throw std::invalid_argument("world: no rooms configured");
  if (cfg_.start_room < 0 || cfg_.start_room >= static_cast<int>(cfg_.rooms.size())) {
    throw std::invalid_argument("world: start_room out of range");
  }

  for (size_t r = 0; r < cfg_.rooms.size(); ++r) {
    const auto& rows = cfg_.rooms[r];
    if (static_cast<int>(rows.size()) != cfg_.grid) {
      throw std::invalid_argument("world: room " + std::to_string(r) + " has " +
                                  std::to_string(rows.size()) + " rows, expected " +
                                  std::to_string(cfg_.grid));
    }
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != cfg_.grid) {
        throw std::invalid_argument("world: room " + std::to_string(r) +
                                    " has a row of width " + std::to_string(row.size()) +
                                    ", expected " + std::to_string(cfg_.grid));
      }
      for (char c : row) {
        if (c != '#' && c != '.' && c != 'K' && c != 'D' && c != 'S') {
          throw std::invalid_argument(std::string("world: unknown map character '") + c + "'");
        }
      }
    }
  }

  // items in room-major, row-major scan order
  for (size_t r = 0; r < cfg_.rooms.size(); ++r) {
    for (int i = 0; i < cfg_.grid; ++i) {
      for (int j = 0; j < cfg_.grid; ++j) {
        if (tile(static_cast<int>(r), i, j) == 'K') {
          ItemSpec item;
          item.room = static_cast<int>(r);
          item.row = i;
          item.col = j;
          const size_t idx = items_.size();
          if (idx < cfg_.item_values.size()) item.value = cfg_.item_values[idx];
          if (idx < cfg_.item_terminal.size()) item.terminal = cfg_.item_terminal[idx];
          if (item.value < 0.0) {
            throw std::invalid_argument("world: item values must be nonnegative");
          }
          items_.push_back(item);
        }
      }
    }
  }

  // the door graph must pair every 'D' cell with exactly one link
  for (const auto& d : cfg_.doors) {
    if (d.room < 0 || d.room >= static_cast<int>(cfg_.rooms.size()) || !in_grid(d.row, d.col) ||
        tile(d.room, d.row, d.col) != 'D') {
      throw std::invalid_argument("world: door link does not sit on a 'D' cell");
    }
    if (d.to_room < 0 || d.to_room >= static_cast<int>(cfg_.rooms.size()) ||
        !in_grid(d.to_row, d.to_col)) {
      throw std::invalid_argument("world: door link target out of range");
    }
    const char t = tile(d.to_room, d.to_row, d.to_col);
    if (t == '#' || t == 'D') {
      throw std::invalid_argument("world: door link target must be a walkable non-door cell");
    }
    for (int idx : d.required_items) {
      if (idx < 0 || idx >= static_cast<int>(items_.size())) {
        throw std::invalid_argument("world: door requires unknown item index " +
                                    std::to_string(idx));
      }
    }
  }
  for (size_t r = 0; r < cfg_.rooms.size(); ++r) {
    for (int i = 0; i < cfg_.grid; ++i) {
      for (int j = 0; j < cfg_.grid; ++j) {
        if (tile(static_cast<int>(r), i, j) != 'D') continue;
        int links = 0;
        for (const auto& d : cfg_.doors) {
          if (d.room == static_cast<int>(r) && d.row == i && d.col == j) ++links;
        }
        if (links != 1) {
          throw std::invalid_argument("world: door cell in room " + std::to_string(r) + " at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ") has " +
                                      std::to_string(links) + " links, expected 1");
        }
      }
    }
  }

  // spawn candidates: 'S' cells of the start room, else all its floor cells
  spawn_cells_.resize(cfg_.rooms.size());
  for (size_t r = 0; r < cfg_.rooms.size(); ++r) {
    std::vector<int> marked, floors;
    for (int i = 0; i < cfg_.grid; ++i) {
      for (int j = 0; j < cfg_.grid; ++j) {
        const char t = tile(static_cast<int>(r), i, j);
        if (t == 'S') marked.push_back(i * cfg_.grid + j);
        if (t == '.') floors.push_back(i * cfg_.grid + j);
      }
    }
    spawn_cells_[r] = marked.empty() ? floors : marked;
  }
  if (spawn_cells_[cfg_.start_room].empty()) {
    throw std::invalid_argument("world: start room has no spawnable cell");
  }
}

bool World::in_grid(int row, int col) const {
  return row >= 0 && row < cfg_.grid && col >= 0 && col < cfg_.grid;
}

bool World::distractor_blocked(int room, int row, int col) const {
  if (!in_grid(row, col)) return true;
  const char t = tile(room, row, col);
  return t == '#' || t == 'D';
}

const DoorLink* World::door_at(int room, int row, int col) const {
  for (const auto& d : cfg_.doors) {
    if (d.room == room && d.row == row && d.col == col) return &d;
  }
  return nullptr;
}

int World::item_at(int room, int row, int col) const {
  for (size_t k = 0; k < items_.size(); ++k) {
    if (items_[k].room == room && items_[k].row == row && items_[k].col == col) {
      return static_cast<int>(k);
    }
  }
  return -1;
}

double World::max_episode_reward() const {
  double total = 0.0;
  for (const auto& it : items_) total += it.value;
  return total;
}

Frame World::reset(uint64_t seed) {
  state_ = WorldState{};
  state_.rng = Rng(seed);
  state_.room = cfg_.start_room;
  const auto& cells = spawn_cells_[cfg_.start_room];
  const int pick = cells[state_.rng.next_int(static_cast<int>(cells.size()))];
  state_.avatar_row = pick / cfg_.grid;
  state_.avatar_col = pick % cfg_.grid;

  for (size_t r = 0; r < cfg_.rooms.size(); ++r) {
    std::vector<int> floors;
    for (int i = 0; i < cfg_.grid; ++i) {
      for (int j = 0; j < cfg_.grid; ++j) {
        const char t = tile(static_cast<int>(r), i, j);
        if (t == '.' || t == 'S') floors.push_back(i * cfg_.grid + j);
      }
    }
    for (int k = 0; k < cfg_.distractors_per_room && !floors.empty(); ++k) {
      Distractor d;
      d.room = static_cast<int>(r);
      const int cell = floors[state_.rng.next_int(static_cast<int>(floors.size()))];
      d.row = cell / cfg_.grid;
      d.col = cell % cfg_.grid;
      const auto& v = kVelocities[state_.rng.next_int(8)];
      d.dr = v[0];
      d.dc = v[1];
      state_.distractors.push_back(d);
    }
  }
  state_.collected.assign(items_.size(), 0);
  started_ = true;
  return render();
}

void World::advance_distractors() {
  for (auto& d : state_.distractors) {
    if (distractor_blocked(d.room, d.row + d.dr, d.col)) d.dr = -d.dr;
    if (distractor_blocked(d.room, d.row, d.col + d.dc)) d.dc = -d.dc;
    const int nr = d.row + d.dr, nc = d.col + d.dc;
    if (!distractor_blocked(d.room, nr, nc)) {
      d.row = nr;
      d.col = nc;
    }
  }
}

StepResult World::step(int action) {
  if (!started_) throw std::logic_error("world: step before reset");
  if (state_.done) throw std::logic_error("world: step after episode end");
  if (action < 0 || action >= kNumActions) {
    throw std::invalid_argument("world: action " + std::to_string(action) + " outside 0.." +
                                std::to_string(kNumActions - 1));
  }

  // sticky actions: with probability p_sticky the previous executed action
  // replaces the issued one (the draw is consumed every step so trajectories
  // depend only on config, seed, and the action sequence)
  const double u = state_.rng.next_double();
  const int exec = (u < cfg_.p_sticky) ? state_.last_action : action;

  const int nr = state_.avatar_row + kMoveDr[exec];
  const int nc = state_.avatar_col + kMoveDc[exec];
  if (in_grid(nr, nc)) {
    const char t = tile(state_.room, nr, nc);
    if (t == 'D') {
      const DoorLink* link = door_at(state_.room, nr, nc);
      bool open = true;
      for (int idx : link->required_items) {
        if (!state_.collected[idx]) open = false;
      }
      if (open) {
        state_.room = link->to_room;
        state_.avatar_row = link->to_row;
        state_.avatar_col = link->to_col;
      }
    } else if (t != '#') {
      state_.avatar_row = nr;
      state_.avatar_col = nc;
    }
  }

  double reward = 0.0;
  const int item = item_at(state_.room, state_.avatar_row, state_.avatar_col);
  if (item >= 0 && !state_.collected[item]) {
    state_.collected[item] = 1;
    reward += items_[item].value;
    if (items_[item].terminal) state_.done = true;
  }

  advance_distractors();

  state_.last_action = exec;
  ++state_.step_count;
  if (state_.step_count >= cfg_.max_steps) state_.done = true;

  StepResult res;
  res.obs = render();
  res.r_ext = reward;
  res.done = state_.done;
  res.info.avatar_row = state_.avatar_row;
  res.info.avatar_col = state_.avatar_col;
  res.info.room = state_.room;
  res.info.executed_action = exec;
  return res;
}

Frame World::render_state(const WorldState& s) const {
  const int px = cell_px();
  Frame f({cfg_.frame_px, cfg_.frame_px, 3});

  auto fill_cell = [&](int row, int col, const double* color) {
    for (int y = row * px; y < (row + 1) * px; ++y) {
      double* base = f.data() + (static_cast<size_t>(y) * cfg_.frame_px + col * px) * 3;
      for (int x = 0; x < px; ++x) {
        base[x * 3 + 0] = color[0];
        base[x * 3 + 1] = color[1];
        base[x * 3 + 2] = color[2];
      }
    }
  };

  const auto& palette = kPalettes[s.room % 6];
  // walls pick up a faint tint of the room hue: still clearly dark, but each
  // room's large border area reinforces its identity
  const double wall[3] = {kWall[0] + 0.30 * palette[0][0], kWall[1] + 0.30 * palette[0][1],
                          kWall[2] + 0.30 * palette[0][2]};
  for (int i = 0; i < cfg_.grid; ++i) {
    for (int j = 0; j < cfg_.grid; ++j) {
      const char t = tile(s.room, i, j);
      const double* color;
      if (t == '#') {
        color = wall;
      } else if (t == 'D') {
        color = kDoor;
      } else {
        color = palette[(i + j) % 2];
        const int item = item_at(s.room, i, j);
        if (item >= 0 && !s.collected[item]) color = kItem;
      }
      fill_cell(i, j, color);
    }
  }
  for (const auto& d : s.distractors) {
    if (d.room == s.room) fill_cell(d.row, d.col, kDistractor);
  }
  fill_cell(s.avatar_row, s.avatar_col, kAvatar);
  return f;
}

void World::save_state(std::ostream& os) const {
  write_pod<int32_t>(os, state_.avatar_row);
  write_pod<int32_t>(os, state_.avatar_col);
  write_pod<int32_t>(os, state_.room);
  write_pod<int32_t>(os, state_.step_count);
  write_pod<int32_t>(os, state_.last_action);
  write_pod<uint8_t>(os, state_.done ? 1 : 0);
  write_pod<uint8_t>(os, started_ ? 1 : 0);
  write_pod<uint32_t>(os, static_cast<uint32_t>(state_.distractors.size()));
  for (const auto& d : state_.distractors) {
    write_pod<int32_t>(os, d.room);
    write_pod<int32_t>(os, d.row);
    write_pod<int32_t>(os, d.col);
    write_pod<int32_t>(os, d.dr);
    write_pod<int32_t>(os, d.dc);
  }
  write_pod<uint32_t>(os, static_cast<uint32_t>(state_.collected.size()));
  for (char c : state_.collected) write_pod<uint8_t>(os, static_cast<uint8_t>(c));
  state_.rng.save(os);
}

void World::load_state(std::istream& is) {
  WorldState s;
  s.avatar_row = read_pod<int32_t>(is, "avatar row");
  s.avatar_col = read_pod<int32_t>(is, "avatar col");
  s.room = read_pod<int32_t>(is, "room");
  s.step_count = read_pod<int32_t>(is, "step count");
  s.last_action = read_pod<int32_t>(is, "last action");
  s.done = read_pod<uint8_t>(is, "done flag") != 0;
  const bool started = read_pod<uint8_t>(is, "started flag") != 0;
  const auto nd = read_pod<uint32_t>(is, "distractor count");
  s.distractors.resize(nd);
  for (auto& d : s.distractors) {
    d.room = read_pod<int32_t>(is, "distractor room");
    d.row = read_pod<int32_t>(is, "distractor row");
    d.col = read_pod<int32_t>(is, "distractor col");
    d.dr = read_pod<int32_t>(is, "distractor velocity");
    d.dc = read_pod<int32_t>(is, "distractor velocity");
  }
  const auto ni = read_pod<uint32_t>(is, "item flag count");
  if (ni != items_.size()) {
    throw std::runtime_error("world state: item flag count " + std::to_string(ni) +
                             " does not match configured items " + std::to_string(items_.size()));
  }
  s.collected.resize(ni);
  for (auto& c : s.collected) c = static_cast<char>(read_pod<uint8_t>(is, "item flag"));
  s.rng.load(is);
  state_ = std::move(s);
  started_ = started;
}

}  // namespace coex::world
