#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace coex {

// One master seed fans out to named child streams so that adding or removing
// a consumer does not reshuffle unrelated streams.
uint64_t splitmix64(uint64_t& state);
uint64_t child_seed(uint64_t master, const std::string& stream_name);

// xoshiro256++ with hand-rolled distributions. Distributions are written out
// explicitly (instead of <random> ones) so that sequences are identical across
// standard library implementations and trivially serializable.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0);

  uint64_t next_u64();
  double next_double();        // uniform in [0, 1)
  int next_int(int n);         // uniform in [0, n)
  double next_gaussian();      // standard normal, Box-Muller (two draws per call)

  void save(std::ostream& out) const;
  void load(std::istream& in);
  bool operator==(const Rng& o) const;

 private:
  uint64_t s_[4];
};

}  // namespace coex
