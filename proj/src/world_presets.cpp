#include "coex/world_presets.hpp"

#include <stdexcept>

namespace coex::world {

WorldConfig corridor_config() {
  WorldConfig cfg;
  cfg.frame_px = 64;
  cfg.grid = 8;
  cfg.rooms = {{
      "########",
      "#......#",
      "#......#",
      "#......#",
      "#......#",
      "#......#",
      "#......#",
      "########",
  }};
  cfg.distractors_per_room = 3;
  cfg.max_steps = 128;
  return cfg;
}

WorldConfig corridor_large_config() {
  WorldConfig cfg = corridor_config();
  cfg.frame_px = 160;
  return cfg;
}

WorldConfig four_rooms_sparse_config() {
  WorldConfig cfg;
  cfg.frame_px = 48;
  cfg.grid = 8;
  // each room carries a distinct pair of interior pillars (confined to rows
  // 1 and 6 so the door corridors along row 3 and column 3 stay open)
  cfg.rooms = {
      {
          "########",
          "#....#.#",
          "#......#",
          "#......D",
          "#......#",
          "#......#",
          "##.....#",
          "###D####",
      },
      {
          "########",
          "##.....#",
          "#......#",
          "D......#",
          "#......#",
          "#......#",
          "#.....##",
          "###D####",
      },
      {
          "###D####",
          "#.....##",
          "#......#",
          "#......D",
          "#......#",
          "#......#",
          "#.#....#",
          "########",
      },
      {
          "###D####",
          "#.#....#",
          "#......#",
          "D......#",
          "#......#",
          "#....K.#",
          "#...#..#",
          "########",
      },
  };
  cfg.doors = {
      {0, 3, 7, 1, 3, 1, {}}, {1, 3, 0, 0, 3, 6, {}},  // rooms 0 <-> 1
      {0, 7, 3, 2, 1, 3, {}}, {2, 0, 3, 0, 6, 3, {}},  // rooms 0 <-> 2
      {1, 7, 3, 3, 1, 3, {}}, {3, 0, 3, 1, 6, 3, {}},  // rooms 1 <-> 3
      {2, 3, 7, 3, 3, 1, {}}, {3, 3, 0, 2, 3, 6, {}},  // rooms 2 <-> 3
  };
  cfg.item_values = {1.0};
  cfg.item_terminal = {true};
  cfg.distractors_per_room = 1;
  cfg.max_steps = 300;
  return cfg;
}

WorldConfig key_door_config() {
  WorldConfig cfg;
  cfg.frame_px = 48;
  cfg.grid = 8;
  cfg.rooms = {
      {
          "########",
          "#......#",
          "#......#",
          "#......D",
          "#......#",
          "#K.....#",
          "#......#",
          "########",
      },
      {
          "########",
          "#......#",
          "#......#",
          "D....K.#",
          "#......#",
          "#......#",
          "#......#",
          "########",
      },
  };
  // item 0 is the key (scan order: room 0 first); the right-hand door only
  // opens once it has been collected
  cfg.doors = {
      {0, 3, 7, 1, 3, 1, {0}},
      {1, 3, 0, 0, 3, 6, {}},
  };
  cfg.item_values = {1.0, 10.0};
  cfg.item_terminal = {false, true};
  cfg.distractors_per_room = 2;
  cfg.max_steps = 300;
  return cfg;
}

WorldConfig preset_config(const std::string& name) {
  if (name == "corridor") return corridor_config();
  if (name == "corridor-large") return corridor_large_config();
  if (name == "four-rooms-sparse") return four_rooms_sparse_config();
  if (name == "key-door") return key_door_config();
  throw std::invalid_argument("unknown world preset '" + name + "'");
}

nd::Tensor grayscale(const Frame& frame) {
  if (frame.rank() != 3 || frame.dim(2) != 3) {
    throw std::invalid_argument("grayscale: expected [H,W,3], got " + frame.shape_str());
  }
  nd::Tensor g({frame.dim(0), frame.dim(1)});
  const size_t n = g.size();
  for (size_t i = 0; i < n; ++i) {
    g[i] = (frame[i * 3] + frame[i * 3 + 1] + frame[i * 3 + 2]) / 3.0;
  }
  return g;
}

}  // namespace coex::world
