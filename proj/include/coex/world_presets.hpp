#pragma once

#include <string>

#include "coex/world.hpp"

namespace coex::world {

// Single open room with bouncing distractors and no rewards; the localization
// testbed (a moving controllable sprite among moving uncontrollable ones).
WorldConfig corridor_config();

// Same layout at the large observation scale (160px frames, 20px cells).
WorldConfig corridor_large_config();

// Four rooms behind doors with one terminal reward two door-crossings from the
// start room; the sparse-reward exploration testbed.
WorldConfig four_rooms_sparse_config();

// Two rooms where a key item unlocks the door to a terminal reward, so the
// cumulative-reward context distinguishes pre- and post-key exploration.
WorldConfig key_door_config();

WorldConfig preset_config(const std::string& name);  // throws on unknown name

// Mean over RGB channels: [H,W,3] -> [H,W].
nd::Tensor grayscale(const Frame& frame);

}  // namespace coex::world
