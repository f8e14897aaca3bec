#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <sstream>

#include "coex/abstraction.hpp"
#include "coex/rng.hpp"
#include "coex/world_presets.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace coex;
using namespace coex::abstraction;
using nd::Tensor;

namespace {

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

Tensor random_frame(int h, int w, Rng& rng) {
  Tensor t({h, w, 3});
  for (size_t i = 0; i < t.size(); ++i) t[i] = rng.next_double();
  return t;
}

// a world snapshot with sprites scattered anywhere walkable in `room`
world::WorldState scattered_state(const world::World& w, int room, Rng& rng) {
  const auto& cfg = w.config();
  std::vector<int> floors;
  for (int i = 0; i < cfg.grid; ++i) {
    for (int j = 0; j < cfg.grid; ++j) {
      const char t = cfg.rooms[room][i][j];
      if (t == '.' || t == 'S') floors.push_back(i * cfg.grid + j);
    }
  }
  world::WorldState s;
  s.room = room;
  const int cell = floors[rng.next_int(static_cast<int>(floors.size()))];
  s.avatar_row = cell / cfg.grid;
  s.avatar_col = cell % cfg.grid;
  s.collected.assign(w.items().size(), 0);
  for (int d = 0; d < cfg.distractors_per_room; ++d) {
    world::Distractor dd;
    dd.room = room;
    const int dc = floors[rng.next_int(static_cast<int>(floors.size()))];
    dd.row = dc / cfg.grid;
    dd.col = dc % cfg.grid;
    s.distractors.push_back(dd);
  }
  return s;
}

}  // namespace

TEST_CASE("nearest-neighbor resize replicates and samples pixels") {
  Tensor small({2, 2, 3});
  for (size_t i = 0; i < small.size(); ++i) small[i] = static_cast<double>(i);

  Tensor up = resize_nearest(small, 4, 4);
  REQUIRE(up.shape() == std::vector<int>{4, 4, 3});
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double want = small[(static_cast<size_t>(y / 2) * 2 + x / 2) * 3 + c];
        REQUIRE(up[(static_cast<size_t>(y) * 4 + x) * 3 + c] == want);
      }
    }
  }

  Tensor down = resize_nearest(up, 2, 2);
  CHECK(bit_equal(down, small));

  Rng rng(1);
  Tensor f = random_frame(5, 5, rng);
  CHECK(bit_equal(resize_nearest(f, 5, 5), f));

  CHECK_THROWS_AS(resize_nearest(Tensor({4, 4}), 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(resize_nearest(f, 0, 2), std::invalid_argument);
}

TEST_CASE("projection is linear, seeded, and size-independent") {
  ProjectorConfig cfg;
  Projector p(cfg, 99), q(cfg, 99), other(cfg, 100);
  Rng rng(2);

  const Tensor zero({48, 48, 3});
  const Tensor ez = p.embed(zero);
  REQUIRE(ez.shape() == std::vector<int>{64});
  for (size_t i = 0; i < ez.size(); ++i) REQUIRE(ez[i] == 0.0);

  const Tensor a = random_frame(48, 48, rng);
  const Tensor b = random_frame(48, 48, rng);
  Tensor ab({48, 48, 3});
  for (size_t i = 0; i < ab.size(); ++i) ab[i] = a[i] + b[i];
  const Tensor ea = p.embed(a), eb = p.embed(b), eab = p.embed(ab);
  for (int i = 0; i < 64; ++i) {
    REQUIRE(ea[i] + eb[i] == doctest::Approx(eab[i]).epsilon(1e-9));
  }

  CHECK(bit_equal(p.embed(a), q.embed(a)));   // same seed, fresh construction
  CHECK(!bit_equal(p.embed(a), other.embed(a)));

  // larger frames are shrunk to the projection shape before flattening
  const Tensor big = random_frame(64, 64, rng);
  CHECK(bit_equal(p.embed(big), p.embed(resize_nearest(big, 48, 48))));

  CHECK_THROWS_AS(p.embed(Tensor({48, 48, 2})), std::invalid_argument);
}

TEST_CASE("threshold clustering follows the nearest-within-tau rule") {
  SUBCASE("first embedding founds cluster 0") {
    ClusterSet cs(0.5);
    Tensor v({3}, {1.0, 2.0, 3.0});
    CHECK(cs.assign(v) == 0);
    CHECK(cs.size() == 1);
    CHECK(cs.members(0) == 1);
    CHECK(bit_equal(cs.mean(0), v));
  }
  SUBCASE("a neighbor within tau joins and shifts the mean to the midpoint") {
    ClusterSet cs(0.5);
    Tensor m({2}, {1.0, 1.0});
    Tensor v({2}, {1.3, 1.0});
    cs.assign(m);
    CHECK(cs.assign(v) == 0);
    CHECK(cs.members(0) == 2);
    CHECK(cs.mean(0)[0] == doctest::Approx(1.15).epsilon(1e-15));
    CHECK(cs.mean(0)[1] == 1.0);
  }
  SUBCASE("a faraway embedding founds a new cluster") {
    ClusterSet cs(0.5);
    cs.assign(Tensor({2}, {0.0, 0.0}));
    CHECK(cs.assign(Tensor({2}, {5.0, 0.0})) == 1);
    CHECK(cs.size() == 2);
  }
  SUBCASE("with several clusters in range the nearest one wins") {
    ClusterSet cs(0.35);
    cs.assign(Tensor({1}, {0.0}));
    cs.assign(Tensor({1}, {0.4}));
    REQUIRE(cs.size() == 2);
    // 0.3 sits 0.3 from cluster 0 and 0.1 from cluster 1: both in range
    CHECK(cs.assign(Tensor({1}, {0.3})) == 1);
    CHECK(cs.members(1) == 2);
  }
  SUBCASE("distance exactly tau still joins") {
    ClusterSet cs(0.25);
    cs.assign(Tensor({2}, {0.0, 0.0}));
    CHECK(cs.assign(Tensor({2}, {0.25, 0.0})) == 0);
  }
  SUBCASE("means stay exact arithmetic means") {
    ClusterSet cs(100.0);
    Rng rng(3);
    Tensor sum({8});
    for (int k = 1; k <= 10; ++k) {
      Tensor v({8});
      for (int i = 0; i < 8; ++i) v[i] = rng.next_gaussian();
      REQUIRE(cs.assign(v) == 0);
      for (int i = 0; i < 8; ++i) sum[i] += v[i];
      const Tensor m = cs.mean(0);
      for (int i = 0; i < 8; ++i) REQUIRE(m[i] == sum[i] / k);
    }
    CHECK(cs.members(0) == 10);
  }
  SUBCASE("cluster count never decreases and ids stay dense") {
    ClusterSet cs(0.1);
    Rng rng(4);
    int last_size = 0;
    for (int t = 0; t < 200; ++t) {
      Tensor v({4});
      for (int i = 0; i < 4; ++i) v[i] = rng.next_gaussian() * 3.0;
      const int id = cs.assign(v);
      REQUIRE(id >= 0);
      REQUIRE(id < cs.size());
      REQUIRE(cs.size() >= last_size);
      REQUIRE(cs.size() - last_size <= 1);
      last_size = cs.size();
    }
  }
  SUBCASE("serialization preserves assignment behavior") {
    ClusterSet cs(0.4);
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
      Tensor v({4});
      for (int i = 0; i < 4; ++i) v[i] = rng.next_gaussian();
      cs.assign(v);
    }
    std::stringstream buf;
    cs.save(buf);
    ClusterSet loaded(1.0);
    loaded.load(buf);
    CHECK(loaded.tau() == cs.tau());
    REQUIRE(loaded.size() == cs.size());
    for (int k = 0; k < cs.size(); ++k) {
      CHECK(loaded.members(k) == cs.members(k));
      CHECK(bit_equal(loaded.mean(k), cs.mean(k)));
    }
    for (int t = 0; t < 20; ++t) {
      Tensor v({4});
      for (int i = 0; i < 4; ++i) v[i] = rng.next_gaussian();
      REQUIRE(cs.assign(v) == loaded.assign(v));
    }

    std::stringstream cut(buf.str().substr(0, 6));
    ClusterSet broken(1.0);
    CHECK_THROWS_WITH_AS(broken.load(cut), doctest::Contains("truncated"), std::runtime_error);
  }
  SUBCASE("nonpositive thresholds are rejected") {
    CHECK_THROWS_AS(ClusterSet{0.0}, std::invalid_argument);
    CHECK_THROWS_AS(ClusterSet{-1.0}, std::invalid_argument);
  }
}

TEST_CASE("abstract states floor the cumulative reward") {
  AbstractState s = abstract_state(3, 5, 2, 2.7);
  CHECK(s.x == 3);
  CHECK(s.y == 5);
  CHECK(s.c == 2);
  CHECK(s.R == 2);

  CHECK(abstract_state(0, 0, -1, 0.0).R == 0);
  CHECK(abstract_state(0, 0, -1, -0.5).R == -1);
  CHECK(abstract_state(0, 0, -1, 10.0).R == 10);
  CHECK(abstract_state(0, 0, -1, 0.999).R == 0);

  CHECK(abstract_state(1, 2, 3, 4.0) == abstract_state(1, 2, 3, 4.5));
  CHECK(abstract_state(1, 2, 3, 4.0) != abstract_state(2, 2, 3, 4.0));
  CHECK(AbstractState{}.c == -1);  // no visual context by default
}

TEST_CASE("visit bonuses follow the inverse-square-root schedule") {
  VisitCounter counter;
  AbstractState s = abstract_state(4, 2, 0, 0.0);

  const double expected[5] = {1.0, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(3.0), 0.5,
                              1.0 / std::sqrt(5.0)};
  for (int k = 0; k < 5; ++k) {
    REQUIRE(counter.count_and_bonus(s) == expected[k]);
    REQUIRE(counter.count(s) == k + 1);
  }

  // strictly decreasing for a long run of revisits
  double last = counter.count_and_bonus(s);
  for (int k = 0; k < 100; ++k) {
    const double b = counter.count_and_bonus(s);
    REQUIRE(b < last);
    last = b;
  }

  // other tuples are independent
  AbstractState t = abstract_state(4, 2, 0, 1.0);  // differs in R only
  CHECK(counter.count(t) == 0);
  CHECK(counter.count_and_bonus(t) == 1.0);
  CHECK(counter.distinct() == 2);

  std::stringstream buf;
  counter.save(buf);
  VisitCounter loaded;
  loaded.load(buf);
  CHECK(loaded.distinct() == counter.distinct());
  CHECK(loaded.count(s) == counter.count(s));
  CHECK(loaded.count_and_bonus(t) == 1.0 / std::sqrt(2.0));

  std::stringstream cut(buf.str().substr(0, 3));
  VisitCounter broken;
  CHECK_THROWS_WITH_AS(broken.load(cut), doctest::Contains("truncated"), std::runtime_error);
}

TEST_CASE("calibrated clustering recovers the rooms of rendered frames") {
  world::World w(world::four_rooms_sparse_config());
  Projector p(ProjectorConfig{}, 7);

  const double tau = calibrate_tau(w, p, 50, 11);
  REQUIRE(tau > 0.0);

  ClusterSet cs(tau);
  Rng rng(13);
  std::vector<int> labels, rooms;
  for (int n = 0; n < 500; ++n) {
    const int room = rng.next_int(4);
    world::WorldState s = scattered_state(w, room, rng);
    labels.push_back(cs.assign(p.embed(w.render_state(s))));
    rooms.push_back(room);
  }
  CHECK(cs.size() >= 4);
  const double ari = oracles::ari_pair_counting(labels, rooms);
  INFO("clusters ", cs.size(), " ari ", ari);
  CHECK(ari >= 0.9);
}

TEST_CASE("single-room worlds collapse to one context") {
  world::World w(world::corridor_config());
  Projector p(ProjectorConfig{}, 7);
  const double tau = calibrate_tau(w, p, 30, 17);

  ClusterSet cs(tau);
  Rng rng(19);
  for (int n = 0; n < 50; ++n) {
    world::WorldState s = scattered_state(w, 0, rng);
    REQUIRE(cs.assign(p.embed(w.render_state(s))) == 0);
  }
  CHECK(cs.size() == 1);
}

TEST_CASE("cluster audit rows are plain CSV") {
  CHECK(cluster_csv_header() == "step,actor,cluster,room");
  std::ostringstream os;
  cluster_csv_row(os, 400, 2, 3, 1);
  CHECK(os.str() == "400,2,3,1\n");
}
