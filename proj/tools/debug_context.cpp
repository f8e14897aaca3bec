#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "coex/abstraction.hpp"
#include "coex/rng.hpp"
#include "coex/world_presets.hpp"

using namespace coex;
using namespace coex::abstraction;
using nd::Tensor;

int main() {
  world::World w(world::four_rooms_sparse_config());
  Projector p(ProjectorConfig{}, 7);
  Rng rng(11);
  const auto& cfg = w.config();

  std::vector<Tensor> emb;
  std::vector<int> room_of;
  for (int r = 0; r < 4; ++r) {
    std::vector<int> floors;
    for (int i = 0; i < cfg.grid; ++i)
      for (int j = 0; j < cfg.grid; ++j)
        if (cfg.rooms[r][i][j] == '.' || cfg.rooms[r][i][j] == 'S')
          floors.push_back(i * cfg.grid + j);
    for (int k = 0; k < 60; ++k) {
      world::WorldState s;
      s.room = r;
      int cell = floors[rng.next_int((int)floors.size())];
      s.avatar_row = cell / cfg.grid;
      s.avatar_col = cell % cfg.grid;
      s.collected.assign(w.items().size(), 0);
      for (int d = 0; d < cfg.distractors_per_room; ++d) {
        world::Distractor dd;
        dd.room = r;
        int dc = floors[rng.next_int((int)floors.size())];
        dd.row = dc / cfg.grid;
        dd.col = dc % cfg.grid;
        s.distractors.push_back(dd);
      }
      emb.push_back(p.embed(w.render_state(s)));
      room_of.push_back(r);
    }
  }

  double max_within = 0;
  double min_across[4][4];
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) min_across[a][b] = std::numeric_limits<double>::infinity();
  double max_within_room[4] = {0, 0, 0, 0};

  for (size_t i = 0; i < emb.size(); ++i) {
    for (size_t j = i + 1; j < emb.size(); ++j) {
      double sq = 0;
      for (int k = 0; k < 64; ++k) {
        double d = emb[i][k] - emb[j][k];
        sq += d * d;
      }
      double dist = std::sqrt(sq);
      int a = room_of[i], b = room_of[j];
      if (a == b) {
        max_within = std::max(max_within, dist);
        max_within_room[a] = std::max(max_within_room[a], dist);
      } else {
        min_across[a][b] = std::min(min_across[a][b], dist);
        min_across[b][a] = min_across[a][b];
      }
    }
  }

  std::printf("max_within overall %.3f (per room: %.3f %.3f %.3f %.3f)\n", max_within,
              max_within_room[0], max_within_room[1], max_within_room[2], max_within_room[3]);
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      std::printf("min across rooms %d-%d: %.3f\n", a, b, min_across[a][b]);
  return 0;
}
