#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "coex/world.hpp"
#include "coex/world_presets.hpp"
#include "doctest.h"

using namespace coex;
using namespace coex::world;

namespace {

bool frames_equal(const Frame& a, const Frame& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

double frame_diff_fraction(const Frame& a, const Frame& b) {
  REQUIRE(a.same_shape(b));
  const int hw = a.dim(0) * a.dim(1);
  int differing = 0;
  for (int p = 0; p < hw; ++p) {
    for (int c = 0; c < 3; ++c) {
      if (a[p * 3 + c] != b[p * 3 + c]) {
        ++differing;
        break;
      }
    }
  }
  return static_cast<double>(differing) / hw;
}

// walk the avatar to a target cell in its current room (open-floor worlds)
void drive_to(World& w, int row, int col) {
  for (int guard = 0; guard < 64; ++guard) {
    const auto& s = w.state();
    if (s.avatar_row == row && s.avatar_col == col) return;
    int a = kNoop;
    if (s.avatar_row > row) a = kUp;
    else if (s.avatar_row < row) a = kDown;
    else if (s.avatar_col > col) a = kLeft;
    else a = kRight;
    w.step(a);
  }
  REQUIRE(false);
}

WorldConfig boxed_config() {  // 3x3 room, single floor cell in the middle
  WorldConfig cfg;
  cfg.frame_px = 12;
  cfg.grid = 3;
  cfg.rooms = {{"###", "#.#", "###"}};
  cfg.max_steps = 50;
  return cfg;
}

}  // namespace

TEST_CASE("identical config and seed reproduce trajectories bitwise") {
  WorldConfig cfg = four_rooms_sparse_config();
  cfg.p_sticky = 0.25;
  World w1(cfg), w2(cfg);
  Frame f1 = w1.reset(77), f2 = w2.reset(77);
  CHECK(frames_equal(f1, f2));

  Rng actions(9);
  for (int t = 0; t < 200; ++t) {
    const int a = actions.next_int(kNumActions);
    StepResult r1 = w1.step(a), r2 = w2.step(a);
    REQUIRE(frames_equal(r1.obs, r2.obs));
    REQUIRE(r1.r_ext == r2.r_ext);
    REQUIRE(r1.done == r2.done);
    REQUIRE(r1.info.avatar_row == r2.info.avatar_row);
    REQUIRE(r1.info.executed_action == r2.info.executed_action);
    if (r1.done) {
      f1 = w1.reset(1000 + t);
      f2 = w2.reset(1000 + t);
      REQUIRE(frames_equal(f1, f2));
    }
  }
}

TEST_CASE("seeded spawns are valid and varied") {
  WorldConfig cfg;
  cfg.frame_px = 48;
  cfg.grid = 12;
  cfg.rooms = {{
      "############",
      "#..........#",
      "#..........#",
      "#..........#",
      "#.....K....#",
      "#..........#",
      "#..........#",
      "#..........#",
      "#..........#",
      "#..........#",
      "#..........#",
      "############",
  }};
  cfg.max_steps = 10;
  World w(cfg);

  std::map<std::pair<int, int>, int> spawns;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    w.reset(seed);
    const auto& s = w.state();
    const char t = cfg.rooms[0][s.avatar_row][s.avatar_col];
    REQUIRE(t != '#');
    REQUIRE(t != 'K');
    spawns[{s.avatar_row, s.avatar_col}]++;
  }
  CHECK(spawns.size() >= 2);
}

TEST_CASE("noop leaves the avatar still while distractors move") {
  World w(corridor_config());
  w.reset(5);
  const auto before = w.state();
  REQUIRE(before.distractors.size() == 3);
  StepResult r = w.step(kNoop);
  CHECK(r.r_ext == 0.0);
  CHECK(w.state().avatar_row == before.avatar_row);
  CHECK(w.state().avatar_col == before.avatar_col);
  bool any_moved = false;
  for (size_t i = 0; i < before.distractors.size(); ++i) {
    const auto &d0 = before.distractors[i], &d1 = w.state().distractors[i];
    if (d0.row != d1.row || d0.col != d1.col) any_moved = true;
  }
  CHECK(any_moved);
}

TEST_CASE("walls block every direction") {
  World w(boxed_config());
  w.reset(0);
  REQUIRE(w.state().avatar_row == 1);
  REQUIRE(w.state().avatar_col == 1);
  for (int a : {kUp, kDown, kLeft, kRight, kNoop}) {
    StepResult r = w.step(a);
    CHECK(r.r_ext == 0.0);
    CHECK(w.state().avatar_row == 1);
    CHECK(w.state().avatar_col == 1);
  }
}

TEST_CASE("items pay their configured value once") {
  WorldConfig cfg;
  cfg.frame_px = 16;
  cfg.grid = 4;
  cfg.rooms = {{"####", "#SK#", "#..#", "####"}};
  cfg.item_values = {100.0};
  cfg.max_steps = 50;
  World w(cfg);
  w.reset(3);
  REQUIRE(w.state().avatar_row == 1);
  REQUIRE(w.state().avatar_col == 1);

  StepResult r = w.step(kRight);
  CHECK(r.r_ext == 100.0);
  CHECK(!r.done);  // not terminal by default
  // walking off and back on pays nothing further
  w.step(kDown);
  StepResult again = w.step(kUp);
  CHECK(again.r_ext == 0.0);

  // the collected item is no longer drawn: its cell now shows floor
  const Frame f = w.render();
  const int px = w.cell_px();
  const double gold = 0.95;
  bool any_gold = false;
  for (int y = 1 * px; y < 2 * px; ++y) {
    for (int x = 2 * px; x < 3 * px; ++x) {
      if (f[(static_cast<size_t>(y) * 16 + x) * 3] == gold) any_gold = true;
    }
  }
  CHECK(!any_gold);
}

TEST_CASE("locked doors block until the key is collected") {
  World w(key_door_config());
  w.reset(11);
  drive_to(w, 3, 6);  // in front of the locked door at (3,7)
  StepResult blocked = w.step(kRight);
  CHECK(w.state().room == 0);
  CHECK(w.state().avatar_col == 6);
  CHECK(blocked.r_ext == 0.0);

  drive_to(w, 5, 1);  // fetch the key
  double key_reward = 0.0;
  // the drive itself collects it on arrival; re-check via collected flag
  REQUIRE(w.state().collected.size() == 2);
  CHECK(w.state().collected[0] == 1);
  (void)key_reward;

  drive_to(w, 3, 6);
  w.step(kRight);
  CHECK(w.state().room == 1);
  CHECK(w.state().avatar_row == 3);
  CHECK(w.state().avatar_col == 1);

  // terminal item ends the episode and further steps are rejected
  drive_to(w, 3, 4);
  StepResult fin = w.step(kRight);
  CHECK(fin.r_ext == 10.0);
  CHECK(fin.done);
  CHECK_THROWS_AS(w.step(kNoop), std::logic_error);
}

TEST_CASE("door crossings land on the linked cell") {
  World w(four_rooms_sparse_config());
  w.reset(21);
  drive_to(w, 3, 6);
  w.step(kRight);  // through the east door of room 0
  CHECK(w.state().room == 1);
  CHECK(w.state().avatar_row == 3);
  CHECK(w.state().avatar_col == 1);
}

TEST_CASE("episodes cap at max steps and conserve reward") {
  WorldConfig cfg = four_rooms_sparse_config();
  cfg.max_steps = 60;
  World w(cfg);
  double total = 0.0;
  w.reset(17);
  Rng actions(55);
  int steps = 0;
  while (true) {
    StepResult r = w.step(actions.next_int(kNumActions));
    total += r.r_ext;
    ++steps;
    REQUIRE(steps <= 60);
    if (r.done) break;
  }
  CHECK(total <= w.max_episode_reward());
  if (total < 1.0) CHECK(steps == 60);  // no terminal reached: cap must fire
}

TEST_CASE("rendering is pure and bounded") {
  World w(four_rooms_sparse_config());
  w.reset(31);
  for (int t = 0; t < 5; ++t) w.step(kRight);
  const Frame a = w.render();
  const Frame b = w.render();
  CHECK(frames_equal(a, b));
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i] >= 0.0);
    REQUIRE(a[i] <= 1.0);
  }
}

TEST_CASE("avatar sprite fills exactly its cell block") {
  World w(corridor_config());
  w.reset(2);
  const auto& s = w.state();
  const Frame f = w.render();
  const int px = w.cell_px();
  const int fs = w.config().frame_px;

  // inside the block: the avatar color everywhere
  for (int y = s.avatar_row * px; y < (s.avatar_row + 1) * px; ++y) {
    for (int x = s.avatar_col * px; x < (s.avatar_col + 1) * px; ++x) {
      const size_t p = (static_cast<size_t>(y) * fs + x) * 3;
      REQUIRE(f[p] == 1.00);
      REQUIRE(f[p + 1] == 0.95);
      REQUIRE(f[p + 2] == 1.00);
    }
  }
  // immediately outside (when in bounds): not the avatar color
  const int y_above = s.avatar_row * px - 1;
  if (y_above >= 0) {
    const size_t p = (static_cast<size_t>(y_above) * fs + s.avatar_col * px) * 3;
    CHECK((f[p] != 1.00 || f[p + 1] != 0.95 || f[p + 2] != 1.00));
  }
}

TEST_CASE("rooms are visually distinct at matched avatar positions") {
  WorldConfig cfg = four_rooms_sparse_config();
  cfg.distractors_per_room = 0;
  World w(cfg);
  w.reset(1);
  WorldState s = w.state();
  s.avatar_row = 2;
  s.avatar_col = 2;
  WorldState other = s;
  other.room = 1;
  const Frame f0 = w.render_state(s);
  const Frame f1 = w.render_state(other);
  CHECK(frame_diff_fraction(f0, f1) >= 0.10);
}

TEST_CASE("distractor motion carries no information about actions") {
  WorldConfig cfg = corridor_config();
  World w(cfg);
  Rng actions(99);
  uint64_t seed = 500;
  w.reset(seed++);

  // joint histogram of (issued action, distractor-0 displacement)
  double joint[5][9] = {};
  int n = 0;
  while (n < 1000) {
    const auto before = w.state().distractors[0];
    const int a = actions.next_int(kNumActions);
    StepResult r = w.step(a);
    const auto after = w.state().distractors[0];
    const int dr = after.row - before.row, dc = after.col - before.col;
    REQUIRE(std::abs(dr) <= 1);
    REQUIRE(std::abs(dc) <= 1);
    joint[a][(dr + 1) * 3 + (dc + 1)] += 1.0;
    ++n;
    if (r.done) w.reset(seed++);
  }

  double pa[5] = {}, pd[9] = {};
  for (int a = 0; a < 5; ++a) {
    for (int d = 0; d < 9; ++d) {
      joint[a][d] /= n;
      pa[a] += joint[a][d];
      pd[d] += joint[a][d];
    }
  }
  double mi = 0.0;
  for (int a = 0; a < 5; ++a) {
    for (int d = 0; d < 9; ++d) {
      if (joint[a][d] > 0.0) mi += joint[a][d] * std::log(joint[a][d] / (pa[a] * pd[d]));
    }
  }
  CHECK(mi < 0.05);
}

TEST_CASE("sticky actions repeat the previous executed action at the configured rate") {
  WorldConfig cfg = corridor_config();
  cfg.p_sticky = 0.25;
  cfg.max_steps = 1000000;
  World w(cfg);
  w.reset(123);
  int sticky_events = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    // always issue the opposite of the last executed action, so any match
    // with the previous executed action can only come from stickiness
    const int prev = w.state().last_action;
    const int issued = (prev == kLeft) ? kRight : kLeft;
    StepResult r = w.step(issued);
    if (r.info.executed_action != issued) {
      ++sticky_events;
      CHECK(r.info.executed_action == prev);
    }
  }
  const double rate = static_cast<double>(sticky_events) / trials;
  CHECK(rate > 0.22);
  CHECK(rate < 0.28);

  // p_sticky = 0 never repeats
  WorldConfig plain = corridor_config();
  World w0(plain);
  w0.reset(4);
  for (int t = 0; t < 200; ++t) {
    StepResult r = w0.step(t % kNumActions);
    REQUIRE(r.info.executed_action == t % kNumActions);
    if (r.done) w0.reset(t);
  }
}

TEST_CASE("world state serialization resumes trajectories exactly") {
  WorldConfig cfg = key_door_config();
  cfg.p_sticky = 0.25;
  World w(cfg);
  w.reset(88);
  Rng actions(13);
  for (int t = 0; t < 50; ++t) {
    if (w.state().done) w.reset(200 + t);
    w.step(actions.next_int(kNumActions));
  }

  std::stringstream buf;
  w.save_state(buf);
  Rng tail(14);
  std::vector<int> seq;
  for (int t = 0; t < 30; ++t) seq.push_back(tail.next_int(kNumActions));

  std::vector<double> rewards1;
  std::vector<Frame> frames1;
  for (int a : seq) {
    if (w.state().done) break;
    StepResult r = w.step(a);
    rewards1.push_back(r.r_ext);
    frames1.push_back(r.obs);
  }

  World w2(cfg);
  w2.load_state(buf);
  for (size_t i = 0; i < rewards1.size(); ++i) {
    StepResult r = w2.step(seq[i]);
    REQUIRE(r.r_ext == rewards1[i]);
    REQUIRE(frames_equal(r.obs, frames1[i]));
  }

  std::stringstream truncated(buf.str().substr(0, 10));
  World w3(cfg);
  CHECK_THROWS_WITH_AS(w3.load_state(truncated), doctest::Contains("truncated"),
                       std::runtime_error);
}

TEST_CASE("malformed configurations are rejected") {
  SUBCASE("frame not divisible by grid") {
    WorldConfig cfg = corridor_config();
    cfg.frame_px = 65;
    CHECK_THROWS_AS(World{cfg}, std::invalid_argument);
  }
  SUBCASE("sticky probability out of range") {
    WorldConfig cfg = corridor_config();
    cfg.p_sticky = 1.5;
    CHECK_THROWS_AS(World{cfg}, std::invalid_argument);
  }
  SUBCASE("door cell without a link") {
    WorldConfig cfg = boxed_config();
    cfg.rooms = {{"#D#", "#.#", "###"}};
    CHECK_THROWS_AS(World{cfg}, std::invalid_argument);
  }
  SUBCASE("link not on a door cell") {
    WorldConfig cfg = boxed_config();
    cfg.doors = {{0, 1, 1, 0, 1, 1, {}}};
    CHECK_THROWS_AS(World{cfg}, std::invalid_argument);
  }
  SUBCASE("negative item value") {
    WorldConfig cfg = boxed_config();
    cfg.rooms = {{"###", "#K#", "###"}};
    cfg.item_values = {-1.0};
    CHECK_THROWS_AS(World{cfg}, std::invalid_argument);
  }
  SUBCASE("bad row width") {
    WorldConfig cfg = boxed_config();
    cfg.rooms = {{"###", "#.##", "###"}};
    CHECK_THROWS_AS(World{cfg}, std::invalid_argument);
  }
  SUBCASE("unknown map character") {
    WorldConfig cfg = boxed_config();
    cfg.rooms = {{"###", "#x#", "###"}};
    CHECK_THROWS_AS(World{cfg}, std::invalid_argument);
  }
  SUBCASE("unknown preset name") {
    CHECK_THROWS_AS(preset_config("no-such-world"), std::invalid_argument);
  }
  SUBCASE("step before reset") {
    World w(boxed_config());
    CHECK_THROWS_AS(w.step(kNoop), std::logic_error);
  }
  SUBCASE("out-of-range action") {
    World w(boxed_config());
    w.reset(0);
    CHECK_THROWS_AS(w.step(17), std::invalid_argument);
  }
}

TEST_CASE("grayscale averages the channels") {
  World w(corridor_config());
  Frame f = w.reset(9);
  nd::Tensor g = grayscale(f);
  CHECK(g.shape() == std::vector<int>{64, 64});
  for (size_t i = 0; i < g.size(); ++i) {
    const double want = (f[i * 3] + f[i * 3 + 1] + f[i * 3 + 2]) / 3.0;
    REQUIRE(g[i] == want);
  }
  CHECK_THROWS_AS(grayscale(nd::Tensor({4, 4})), std::invalid_argument);
}
