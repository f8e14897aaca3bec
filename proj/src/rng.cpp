#include "coex/rng.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace coex {

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t child_seed(uint64_t master, const std::string& stream_name) {
  // FNV-1a over the stream name, then mixed with the master seed.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stream_name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  uint64_t state = master ^ h;
  splitmix64(state);
  return splitmix64(state);
}

namespace {
inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Rng::Rng(uint64_t seed) {
  uint64_t sm = seed;
  for (auto& w : s_) w = splitmix64(sm);
}

uint64_t Rng::next_u64() {
  uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int Rng::next_int(int n) {
  if (n <= 0) throw std::invalid_argument("Rng::next_int: n must be positive");
  return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
}

double Rng::next_gaussian() {
  // Box-Muller; always consumes two uniforms so the stream position does not
  // depend on caller history.
  double u1 = 0.0;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

void Rng::save(std::ostream& out) const {
  out.write(reinterpret_cast<const char*>(s_), sizeof(s_));
}

void Rng::load(std::istream& in) {
  in.read(reinterpret_cast<char*>(s_), sizeof(s_));
  if (!in) throw std::runtime_error("Rng::load: truncated stream");
}

bool Rng::operator==(const Rng& o) const {
  for (int i = 0; i < 4; ++i)
    if (s_[i] != o.s_[i]) return false;
  return true;
}

}  // namespace coex
