#include <cstdio>
#include <vector>

#include "coex/adm.hpp"

using namespace coex;
using namespace coex::adm;
using nd::Tensor;

int main() {
  for (double lr : {7e-4, 4e-4, 2e-4, 1e-4}) {
    AdmConfig cfg;
    cfg.frame_px = 20;
    cfg.encoder = {{4, 3, 2}, {4, 3, 1}, {8, 3, 1}, {8, 3, 1}};
    cfg.action_hidden1 = 12;
    cfg.action_hidden2 = 8;
    cfg.attn_hidden1 = 8;
    cfg.attn_hidden2 = 6;
    cfg.lambda_ent = 0.0;
    cfg.optimizer.lr = lr;
    AdmModel m(cfg, 43);

    const int spots[5][2] = {{2, 2}, {2, 14}, {14, 2}, {14, 14}, {8, 8}};
    std::vector<Tensor> prev_frames, cur_frames;
    for (int a = 0; a < 5; ++a) {
      Tensor p({20, 20, 3}), c({20, 20, 3});
      for (int dy = 0; dy < 4; ++dy) {
        for (int dx = 0; dx < 4; ++dx) {
          const int y = spots[a][0] + dy, x = spots[a][1] + dx;
          for (int ch = 0; ch < 3; ++ch) c[(static_cast<size_t>(y) * 20 + x) * 3 + ch] = 1.0;
        }
      }
      prev_frames.push_back(p);
      cur_frames.push_back(c);
    }
    AdmBatch batch;
    batch.prev = stack_frames(prev_frames);
    batch.cur = stack_frames(cur_frames);
    batch.actions = {0, 1, 2, 3, 4};

    double last = 1e300;
    int first_uptick = -1;
    double final_loss = 0.0;
    for (int step = 0; step < 50; ++step) {
      LossParts parts = m.train_step(batch);
      if (parts.action >= last && first_uptick < 0) first_uptick = step;
      last = parts.action;
      final_loss = parts.action;
    }
    std::printf("lr %.0e: first_uptick %d final %.6f\n", lr, first_uptick, final_loss);
  }
  return 0;
}
