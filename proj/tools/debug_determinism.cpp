#include <cstdio>
#include <cstring>

#include "coex/adm.hpp"
#include "coex/rng.hpp"

using namespace coex;
using namespace coex::adm;
using nd::Tensor;

static AdmConfig tiny_config() {
  AdmConfig cfg;
  cfg.frame_px = 20;
  cfg.encoder = {{4, 3, 2}, {4, 3, 1}, {8, 3, 1}, {8, 3, 1}};
  cfg.action_hidden1 = 12;
  cfg.action_hidden2 = 8;
  cfg.attn_hidden1 = 8;
  cfg.attn_hidden2 = 6;
  return cfg;
}

static void diff(nd::ParameterSet& a, nd::ParameterSet& b, const char* when) {
  for (size_t i = 0; i < a.size(); ++i) {
    const auto& va = a.entry(i).value;
    const auto& vb = b.entry(i).value;
    for (size_t j = 0; j < va.size(); ++j) {
      if (va[j] != vb[j]) {
        std::printf("%s: %s[%zu] %.17g vs %.17g\n", when, a.entry(i).name.c_str(), j, va[j],
                    vb[j]);
        return;
      }
    }
  }
  std::printf("%s: identical\n", when);
}

int main() {
  Rng rng(15);
  AdmBatch batch;
  std::vector<Tensor> ps, cs;
  for (int b = 0; b < 3; ++b) {
    Tensor p({20, 20, 3}), c({20, 20, 3});
    for (size_t i = 0; i < p.size(); ++i) p[i] = rng.next_double();
    for (size_t i = 0; i < c.size(); ++i) c[i] = rng.next_double();
    ps.push_back(p);
    cs.push_back(c);
  }
  batch.prev = stack_frames(ps);
  batch.cur = stack_frames(cs);
  batch.actions = {1, 2, 0};

  AdmModel a(tiny_config(), 41), b(tiny_config(), 41);
  diff(a.params(), b.params(), "init");
  for (int t = 0; t < 3; ++t) {
    LossParts pa = a.train_step(batch);
    LossParts pb = b.train_step(batch);
    std::printf("step %d: total %.17g vs %.17g\n", t, pa.total, pb.total);
    diff(a.params(), b.params(), "after");
  }
  return 0;
}
