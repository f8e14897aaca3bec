#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "coex/rng.hpp"
#include "coex/tensor.hpp"

namespace coex::world {

// A frame is an H x W x 3 tensor of values in [0,1].
using Frame = nd::Tensor;

enum Action : int { kNoop = 0, kUp = 1, kDown = 2, kLeft = 3, kRight = 4 };
constexpr int kNumActions = 5;

// Door cells live on a room's wall ring; stepping onto one teleports the
// avatar to (to_room, to_row, to_col). A door with unmet item requirements
// blocks like a wall.
struct DoorLink {
  int room = 0, row = 0, col = 0;
  int to_room = 0, to_row = 0, to_col = 0;
  std::vector<int> required_items;  // indices into the item list
};

struct ItemSpec {
  int room = 0, row = 0, col = 0;
  double value = 1.0;
  bool terminal = false;
};

// Rooms are square ASCII maps over the alphabet: '#' wall, '.' floor,
// 'K' item, 'D' door, 'S' spawn candidate.
struct WorldConfig {
  int frame_px = 64;
  int grid = 8;  // cells per side; frame_px must divide evenly
  std::vector<std::vector<std::string>> rooms;
  std::vector<DoorLink> doors;
  std::vector<double> item_values;   // by K-scan order (room-major, row-major); default 1.0
  std::vector<bool> item_terminal;   // same order; default false
  int start_room = 0;
  int distractors_per_room = 0;
  double p_sticky = 0.0;
  int max_steps = 500;
};

struct Distractor {
  int room = 0, row = 0, col = 0;
  int dr = 0, dc = 0;  // one-cell velocity, reflected off walls
};

struct WorldState {
  int avatar_row = 0, avatar_col = 0;
  int room = 0;
  std::vector<Distractor> distractors;
  std::vector<char> collected;  // one flag per item
  int step_count = 0;
  int last_action = kNoop;  // last *executed* action (sticky repeats this)
  bool done = false;
  Rng rng{0};
};

struct StepInfo {
  int avatar_row = 0, avatar_col = 0;  // ground truth, for evaluation only
  int room = 0;
  int executed_action = kNoop;  // post-sticky action that actually ran
};

struct StepResult {
  Frame obs;
  double r_ext = 0.0;
  bool done = false;
  StepInfo info;
};

class World {
 public:
  explicit World(WorldConfig cfg);  // validates; throws on malformed layout

  Frame reset(uint64_t seed);
  StepResult step(int action);

  Frame render() const { return render_state(state_); }
  Frame render_state(const WorldState& s) const;

  const WorldConfig& config() const { return cfg_; }
  const WorldState& state() const { return state_; }
  const std::vector<ItemSpec>& items() const { return items_; }
  int cell_px() const { return cfg_.frame_px / cfg_.grid; }
  double max_episode_reward() const;

  // state serialization for exact run resume
  void save_state(std::ostream& os) const;
  void load_state(std::istream& is);

 private:
  char tile(int room, int row, int col) const { return cfg_.rooms[room][row][col]; }
  bool in_grid(int row, int col) const;
  bool distractor_blocked(int room, int row, int col) const;
  const DoorLink* door_at(int room, int row, int col) const;
  int item_at(int room, int row, int col) const;  // -1 if none
  void advance_distractors();

  WorldConfig cfg_;
  std::vector<ItemSpec> items_;
  std::vector<std::vector<int>> spawn_cells_;  // per room: row*grid+col candidates
  WorldState state_;
  bool started_ = false;
};

}  // namespace coex::world
