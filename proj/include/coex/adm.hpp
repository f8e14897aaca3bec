#pragma once
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "coex/graph.hpp"
#include "coex/optim.hpp"
#include "coex/params.hpp"

namespace coex::adm {

struct ConvSpec {
  int out_ch = 0, kernel = 0, stride = 1;
};

// Inverse-dynamics model: a shared conv encoder feeds two small per-cell MLPs,
// one producing action logits per grid cell and one producing an attention
// score per cell. Attention is normalized with sparsemax (softmax optional)
// and the attended combination of cell logits predicts the executed action.
struct AdmConfig {
  int frame_px = 160;
  int frame_channels = 3;
  std::vector<ConvSpec> encoder = {{8, 4, 2}, {8, 3, 2}, {16, 3, 2}, {16, 3, 2}};
  int num_actions = 5;
  int action_hidden1 = 256, action_hidden2 = 128;
  int attn_hidden1 = 64, attn_hidden2 = 64;
  bool use_softmax = false;  // sparsemax by default
  double lambda_ent = 0.001;
  bool use_cell_loss = true;  // per-cell action prediction term
  bool use_ent_loss = true;   // attention entropy regularizer
  nd::RmsPropConfig optimizer;
};

// side length of the square feature grid the encoder yields; throws if the
// stack does not fit the configured frame
int encoder_grid(const AdmConfig& cfg);

// stock configurations keyed by frame size (160, 64, 48)
AdmConfig adm_config_for_frame(int frame_px);

struct AdmBatch {
  nd::Tensor prev, cur;      // [B,F,F,C] consecutive frame pairs
  std::vector<int> actions;  // executed action per pair
  // optional provenance: episode id of each frame; rows whose two frames come
  // from different episodes are rejected by the loss
  std::vector<long long> prev_episode, cur_episode;
};

// stack equally-shaped [H,W,C] frames into one [B,H,W,C] tensor
nd::Tensor stack_frames(const std::vector<nd::Tensor>& frames);

struct ForwardResult {
  nd::Tensor e;      // [B,HW,A] per-cell action logits
  nd::Tensor alpha;  // [B,HW] attention weights (each row on the simplex)
  nd::Tensor p;      // [B,A] combined action distribution
};

struct LossParts {
  double total = 0.0;
  double action = 0.0;    // cross-entropy of the attended prediction
  double cell = 0.0;      // per-cell cross-entropies summed over the grid
  double ent = 0.0;       // negative attention entropy (before weighting)
  double accuracy = 0.0;  // argmax(combined) agreement with the labels
};

// tape handles for the intermediate stages, for tests and composition
struct AdmGraphVars {
  nd::Var diff;        // [B,H,W,K] feature difference
  nd::Var features;    // [B,H,W,2K] concatenated per-cell MLP input
  nd::Var cells_flat;  // [B*HW,A] per-cell logits
  nd::Var e;           // [B,HW,A]
  nd::Var alpha;       // [B,HW]
  nd::Var combined;    // [B,A] attended logits
};

class AdmModel {
 public:
  AdmModel(AdmConfig cfg, uint64_t seed);

  const AdmConfig& config() const { return cfg_; }
  nd::ParameterSet& params() { return params_; }
  int grid() const { return grid_; }
  int cells() const { return grid_ * grid_; }

  // records the full forward computation for a batch of frame pairs
  AdmGraphVars build(nd::Graph& g, const nd::Tensor& prev, const nd::Tensor& cur);

  ForwardResult forward(const nd::Tensor& prev, const nd::Tensor& cur);

  // scalar training objective: action loss + summed cell losses + weighted
  // negative attention entropy, averaged over the batch
  nd::Var loss_graph(nd::Graph& g, const AdmBatch& batch, LossParts* parts = nullptr);

  LossParts train_step(const AdmBatch& batch);

 private:
  nd::Var encode(nd::Graph& g, const nd::Tensor& frames);

  AdmConfig cfg_;
  int grid_ = 0;
  nd::ParameterSet params_;
};

// Per-actor attention tracker: exponentially smooths attention maps with the
// map's own confidence (its max entry) as the mixing weight, and reads the
// avatar location off the smoothed map's argmax. Coordinates are returned as
// (x, y) = (column, row). Reset at every episode start.
class Localizer {
 public:
  Localizer(int h, int w) : h_(h), w_(w) {}

  void reset() { has_ = false; }
  bool has_history() const { return has_; }

  // alpha: [HW] or [H,W]; returns (x, y) of the smoothed argmax
  std::pair<int, int> update(const nd::Tensor& alpha);

  const nd::Tensor& smoothed() const { return bar_; }

 private:
  int h_, w_;
  bool has_ = false;
  nd::Tensor bar_;
};

// attention heatmap CSV rows: step,actor,<HW cell weights row-major>
std::string heatmap_csv_header(int h, int w);
void heatmap_csv_row(std::ostream& os, long long step, int actor, const nd::Tensor& alpha);

}  // namespace coex::adm
