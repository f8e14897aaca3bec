#include "coex/adm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ostream>
#include <stdexcept>

#include "coex/rng.hpp"

namespace coex::adm {

using nd::Graph;
using nd::Tensor;
using nd::Var;

int encoder_grid(const AdmConfig& cfg) {
  if (cfg.encoder.empty()) throw std::invalid_argument("adm: empty encoder stack");
  int d = cfg.frame_px;
  for (const auto& l : cfg.encoder) {
    if (l.out_ch < 1 || l.kernel < 1 || l.stride < 1) {
      throw std::invalid_argument("adm: conv layers need positive channels, kernel, stride");
    }
    if (l.kernel > d) {
      throw std::invalid_argument("adm: conv kernel " + std::to_string(l.kernel) +
                                  " exceeds running frame size " + std::to_string(d));
    }
    d = (d - l.kernel) / l.stride + 1;
  }
  if (d < 1) throw std::invalid_argument("adm: encoder collapses the frame to nothing");
  return d;
}

AdmConfig adm_config_for_frame(int frame_px) {
  AdmConfig cfg;
  cfg.frame_px = frame_px;
  if (frame_px == 160) return cfg;  // the default stack is sized for 160
  if (frame_px == 64) {
    // 64 -> 31 -> 15 -> 13 -> 9
    cfg.encoder = {{8, 4, 2}, {8, 3, 2}, {16, 3, 1}, {16, 5, 1}};
    cfg.action_hidden1 = 128;
    cfg.action_hidden2 = 64;
    return cfg;
  }
  if (frame_px == 48) {
    // 48 -> 23 -> 21 -> 10 -> 8: cell grid matches the 8x8 world layouts
    cfg.encoder = {{8, 4, 2}, {8, 3, 1}, {16, 3, 2}, {16, 3, 1}};
    cfg.action_hidden1 = 128;
    cfg.action_hidden2 = 64;
    return cfg;
  }
  throw std::invalid_argument("adm: no stock configuration for frame size " +
                              std::to_string(frame_px));
}

Tensor stack_frames(const std::vector<Tensor>& frames) {
  if (frames.empty()) throw std::invalid_argument("stack_frames: empty list");
  const auto& s0 = frames[0].shape();
  std::vector<int> shape = {static_cast<int>(frames.size())};
  shape.insert(shape.end(), s0.begin(), s0.end());
  Tensor out(shape);
  const size_t per = frames[0].size();
  for (size_t b = 0; b < frames.size(); ++b) {
    if (!frames[b].same_shape(frames[0])) {
      throw std::invalid_argument("stack_frames: frame " + std::to_string(b) + " has shape " +
                                  frames[b].shape_str() + ", expected " + frames[0].shape_str());
    }
    std::memcpy(out.data() + b * per, frames[b].data(), sizeof(double) * per);
  }
  return out;
}

AdmModel::AdmModel(AdmConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
  if (cfg_.num_actions < 2) throw std::invalid_argument("adm: need at least two actions");
  if (cfg_.frame_channels < 1) throw std::invalid_argument("adm: frame_channels must be positive");
  if (cfg_.action_hidden1 < 1 || cfg_.action_hidden2 < 1 || cfg_.attn_hidden1 < 1 ||
      cfg_.attn_hidden2 < 1) {
    throw std::invalid_argument("adm: MLP widths must be positive");
  }
  grid_ = encoder_grid(cfg_);

  Rng rng(child_seed(seed, "adm/init"));
  int in_ch = cfg_.frame_channels;
  for (size_t l = 0; l < cfg_.encoder.size(); ++l) {
    const auto& spec = cfg_.encoder[l];
    const int fan_in = spec.kernel * spec.kernel * in_ch;
    const std::string base = "adm/enc" + std::to_string(l);
    params_.add(base + "/W",
                nd::he_uniform({spec.kernel, spec.kernel, in_ch, spec.out_ch}, fan_in, rng));
    params_.add(base + "/b", Tensor({spec.out_ch}));
    in_ch = spec.out_ch;
  }
  const int feat = 2 * in_ch;  // difference plus current feature, per cell

  auto mlp = [&](const std::string& base, int d0, int d1, int d2, int d3) {
    params_.add(base + "0/W", nd::he_uniform({d0, d1}, d0, rng));
    params_.add(base + "0/b", Tensor({d1}));
    params_.add(base + "1/W", nd::he_uniform({d1, d2}, d1, rng));
    params_.add(base + "1/b", Tensor({d2}));
    params_.add(base + "2/W", nd::he_uniform({d2, d3}, d2, rng));
    params_.add(base + "2/b", Tensor({d3}));
  };
  mlp("adm/act", feat, cfg_.action_hidden1, cfg_.action_hidden2, cfg_.num_actions);
  mlp("adm/attn", feat, cfg_.attn_hidden1, cfg_.attn_hidden2, 1);
}

Var AdmModel::encode(Graph& g, const Tensor& frames) {
  Var h = g.input(frames);
  for (size_t l = 0; l < cfg_.encoder.size(); ++l) {
    const std::string base = "adm/enc" + std::to_string(l);
    h = leaky_relu(
        conv2d(h, g.param(params_.at(base + "/W")), g.param(params_.at(base + "/b")),
               cfg_.encoder[l].stride));
  }
  return h;
}

AdmGraphVars AdmModel::build(Graph& g, const Tensor& prev, const Tensor& cur) {
  for (const Tensor* t : {&prev, &cur}) {
    if (t->rank() != 4 || t->dim(1) != cfg_.frame_px || t->dim(2) != cfg_.frame_px ||
        t->dim(3) != cfg_.frame_channels) {
      throw std::invalid_argument("adm: frame batch " + t->shape_str() +
                                  " does not match encoder input [B," +
                                  std::to_string(cfg_.frame_px) + "," +
                                  std::to_string(cfg_.frame_px) + "," +
                                  std::to_string(cfg_.frame_channels) + "]");
    }
  }
  if (prev.dim(0) != cur.dim(0)) {
    throw std::invalid_argument("adm: frame batches disagree on batch size");
  }

  const int B = prev.dim(0);
  const int HW = cells();
  const int K = cfg_.encoder.back().out_ch;
  const int A = cfg_.num_actions;

  AdmGraphVars v;
  Var h_prev = encode(g, prev);
  Var h_cur = encode(g, cur);
  v.diff = sub(h_cur, h_prev);
  v.features = concat_last(v.diff, h_cur);  // [B,H,W,2K]

  Var flat = reshape(v.features, {B * HW, 2 * K});

  auto dense3 = [&](const std::string& base, Var x) {
    x = relu(dense(x, g.param(params_.at(base + "0/W")), g.param(params_.at(base + "0/b"))));
    x = relu(dense(x, g.param(params_.at(base + "1/W")), g.param(params_.at(base + "1/b"))));
    return dense(x, g.param(params_.at(base + "2/W")), g.param(params_.at(base + "2/b")));
  };

  v.cells_flat = dense3("adm/act", flat);  // [B*HW, A]
  v.e = reshape(v.cells_flat, {B, HW, A});

  Var scores = reshape(dense3("adm/attn", flat), {B, HW});
  v.alpha = cfg_.use_softmax ? softmax(scores) : sparsemax(scores);
  v.combined = grid_weighted_sum(v.alpha, v.e);
  return v;
}

ForwardResult AdmModel::forward(const Tensor& prev, const Tensor& cur) {
  Graph g;
  AdmGraphVars v = build(g, prev, cur);
  ForwardResult out;
  out.e = v.e.value();
  out.alpha = v.alpha.value();
  out.p = softmax(v.combined).value();
  return out;
}

Var AdmModel::loss_graph(Graph& g, const AdmBatch& batch, LossParts* parts) {
  const int B = batch.prev.rank() > 0 ? batch.prev.dim(0) : 0;
  if (B < 1) throw std::invalid_argument("adm: empty batch");
  if (static_cast<int>(batch.actions.size()) != B) {
    throw std::invalid_argument("adm: batch has " + std::to_string(batch.actions.size()) +
                                " labels for " + std::to_string(B) + " frame pairs");
  }
  for (int a : batch.actions) {
    if (a < 0 || a >= cfg_.num_actions) {
      throw std::invalid_argument("adm: action label " + std::to_string(a) + " outside 0.." +
                                  std::to_string(cfg_.num_actions - 1));
    }
  }
  if (!batch.prev_episode.empty() || !batch.cur_episode.empty()) {
    if (static_cast<int>(batch.prev_episode.size()) != B ||
        static_cast<int>(batch.cur_episode.size()) != B) {
      throw std::invalid_argument("adm: episode id lists do not cover the batch");
    }
    for (int b = 0; b < B; ++b) {
      if (batch.prev_episode[b] != batch.cur_episode[b]) {
        throw std::invalid_argument("adm: cross-episode frame pair at row " + std::to_string(b));
      }
    }
  }

  const int HW = cells();
  AdmGraphVars v = build(g, batch.prev, batch.cur);

  Var l_action = mean(cross_entropy_with_logits(v.combined, batch.actions));
  Var total = l_action;

  Var l_cell, l_ent;
  if (cfg_.use_cell_loss) {
    std::vector<int> cell_targets(static_cast<size_t>(B) * HW);
    for (int b = 0; b < B; ++b) {
      std::fill_n(cell_targets.begin() + static_cast<size_t>(b) * HW, HW, batch.actions[b]);
    }
    l_cell = scale(sum(cross_entropy_with_logits(v.cells_flat, cell_targets)), 1.0 / B);
    total = add(total, l_cell);
  }
  if (cfg_.use_ent_loss) {
    l_ent = scale(mean(entropy_from_probs(v.alpha)), -1.0);
    total = add(total, scale(l_ent, cfg_.lambda_ent));
  }

  if (parts) {
    parts->total = total.value().item();
    parts->action = l_action.value().item();
    parts->cell = cfg_.use_cell_loss ? l_cell.value().item() : 0.0;
    parts->ent = cfg_.use_ent_loss ? l_ent.value().item() : 0.0;
    int hits = 0;
    const Tensor& logits = v.combined.value();
    for (int b = 0; b < B; ++b) {
      if (nd::argmax_last(logits.data() + static_cast<size_t>(b) * cfg_.num_actions,
                          cfg_.num_actions) == batch.actions[b]) {
        ++hits;
      }
    }
    parts->accuracy = static_cast<double>(hits) / B;
  }
  return total;
}

LossParts AdmModel::train_step(const AdmBatch& batch) {
  Graph g;
  LossParts parts;
  Var total = loss_graph(g, batch, &parts);
  params_.zero_grads();
  g.backward(total);
  rmsprop_step(params_, cfg_.optimizer);
  return parts;
}

std::pair<int, int> Localizer::update(const Tensor& alpha) {
  const int hw = h_ * w_;
  if (static_cast<int>(alpha.size()) != hw) {
    throw std::invalid_argument("localizer: got " + std::to_string(alpha.size()) +
                                " weights for a " + std::to_string(h_) + "x" +
                                std::to_string(w_) + " grid");
  }
  if (!has_) {
    bar_ = Tensor({hw}, std::vector<double>(alpha.data(), alpha.data() + hw));
    has_ = true;
  } else {
    double omega = alpha[0];
    for (int i = 1; i < hw; ++i) omega = std::max(omega, alpha[i]);
    for (int i = 0; i < hw; ++i) bar_[i] = (1.0 - omega) * bar_[i] + omega * alpha[i];
  }
  const int idx = nd::argmax_last(bar_.data(), hw);
  return {idx % w_, idx / w_};  // x = column, y = row
}

std::string heatmap_csv_header(int h, int w) {
  std::string s = "step,actor";
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      s += ",a" + std::to_string(i) + "_" + std::to_string(j);
    }
  }
  return s;
}

void heatmap_csv_row(std::ostream& os, long long step, int actor, const Tensor& alpha) {
  os << step << ',' << actor;
  char buf[32];
  for (size_t i = 0; i < alpha.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", alpha[i]);
    os << ',' << buf;
  }
  os << '\n';
}

}  // namespace coex::adm
