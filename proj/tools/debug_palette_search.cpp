// random search for four two-tone room palettes: maximize the worst pairwise
// floor color separation subject to grayscale bounds that keep sprites salient
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "coex/rng.hpp"

using coex::Rng;

struct Color {
  double r, g, b;
  double gray() const { return (r + g + b) / 3.0; }
};

static double d2(const Color& a, const Color& b) {
  return (a.r - b.r) * (a.r - b.r) + (a.g - b.g) * (a.g - b.g) + (a.b - b.b) * (a.b - b.b);
}

int main() {
  Rng rng(123);
  double best_score = 0;
  Color best[4];

  for (long long trial = 0; trial < 4000000; ++trial) {
    Color c[4];
    bool ok = true;
    for (int i = 0; i < 4 && ok; ++i) {
      c[i] = {rng.next_double(), rng.next_double(), rng.next_double()};
      // base tone; the lighter tone is base*1.2 clamped, so keep headroom
      if (c[i].r > 0.8 || c[i].g > 0.8 || c[i].b > 0.8) ok = false;
      const double gy = c[i].gray();
      if (gy < 0.22 || gy > 0.45) ok = false;
      // stay clearly below the distractor's 0.75 gray even for the light tone
      if (gy * 1.2 > 0.52) ok = false;
    }
    if (!ok) continue;
    double worst = 1e9;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) worst = std::min(worst, d2(c[i], c[j]));
    if (worst > best_score) {
      best_score = worst;
      for (int i = 0; i < 4; ++i) best[i] = c[i];
    }
  }

  std::printf("worst pairwise d2 = %.4f\n", best_score);
  for (int i = 0; i < 4; ++i) {
    std::printf("room %d: base {%.2f, %.2f, %.2f} gray %.3f light {%.2f, %.2f, %.2f} gray %.3f\n",
                i, best[i].r, best[i].g, best[i].b, best[i].gray(),
                std::min(1.0, best[i].r * 1.2), std::min(1.0, best[i].g * 1.2),
                std::min(1.0, best[i].b * 1.2), best[i].gray() * 1.2);
  }
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      std::printf("d2 %d-%d: %.4f\n", i, j, d2(best[i], best[j]));
  return 0;
}
