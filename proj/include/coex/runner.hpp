#pragma once
#include <functional>
#include <string>
#include <vector>

#include "coex/config.hpp"
#include "coex/eval.hpp"

namespace coex::cli {

// One row of the metrics log: everything measured after one outer-loop
// iteration (collect -> count/bonus -> policy update -> dynamics update).
struct IterationStats {
  long long iter = 0;  // 1-based
  long long env_steps = 0;
  agent::UpdateMetrics policy;
  adm::LossParts adm;
  double reward_ext_mean = 0.0;
  double reward_shaped_mean = 0.0;
  double rplus_mean = 0.0, rplus_min = 0.0, rplus_max = 0.0;
  long long episodes = 0;  // completed since the start of the run
  double score_window_mean = 0.0;
  double score_max_mean = 0.0;
  double distance_mean = 0.0;  // this iteration's localizations, attention-grid cells
  double distance_w100 = 0.0;  // trailing 100 localizations
  double ari = 0.0;            // clustering vs true rooms; refreshed at the eval cadence
  int clusters = 0;
  long long distinct_psi = 0;
};

struct RunSummary {
  double max_mean_score = 0.0;  // max over training of the 40-episode mean return
  double final_distance = 0.0;  // trailing-100 localization mean at the end
  double final_ari = 0.0;
  long long iterations = 0;
  long long env_steps = 0;
  long long episodes = 0;
  bool completed = false;  // reached the step budget (not stopped by a callback)
  double tau = 0.0;        // clustering threshold actually used
};

struct RunArtifacts {
  std::string metrics_path;
  std::string walltime_path;  // wall-clock sidecar; the metrics file stays deterministic
  std::string checkpoint_path;
  std::string config_path;
  std::string summary_path;
  RunSummary summary;
};

// Owns every piece of mutable experiment state and executes the outer
// training loop until the configured step budget. Fully deterministic given
// the config (wall-clock times live in a sidecar file).
class Runner {
 public:
  explicit Runner(const ExperimentConfig& cfg);

  // Observer called after each iteration; returning false ends the run early.
  using Callback = std::function<bool(const IterationStats&)>;

  RunArtifacts run(const Callback& cb = {});

  // Full-state snapshot: config, progress, parameters with optimizer slots,
  // clustering, counter, collector, and score/distance windows.
  void save_checkpoint(const std::string& path);
  // Restores a snapshot. The stored config must match the current one in all
  // but the step budget, output directory, and checkpoint cadence.
  void load_checkpoint(const std::string& path);

  struct EvalReport {
    double mean_return = 0.0;
    long long episodes = 0;
    double distance_mean = 0.0;
    double ari = 0.0;
    long long env_steps = 0;
  };
  // Frozen-parameter rollouts on a fresh collector; training state (counter,
  // clusters, environments) is copied, not touched.
  EvalReport evaluate(long long env_steps);

  // Steps a single environment with uniform-random actions and writes, per
  // step, the raw attention map (attention.csv), the localization summary
  // (localization.csv), and a frame overlay (frame_NNN.ppm) into dir.
  void export_attention(const std::string& dir, int steps);

  const ExperimentConfig& config() const { return cfg_; }
  double tau() const { return tau_; }
  long long iterations() const { return iter_; }
  long long env_steps() const;

 private:
  IterationStats train_iteration();
  void refresh_ari();
  int truth_to_attention_cell(int world_cell) const;
  RunSummary current_summary(bool completed) const;

  ExperimentConfig cfg_;
  world::WorldConfig world_cfg_;
  agent::TrainerConfig trainer_;
  agent::PolicyModel policy_;
  adm::AdmModel adm_;
  abstraction::Projector projector_;
  double tau_;
  abstraction::ClusterSet clusters_;
  abstraction::VisitCounter counter_;
  abstraction::PsiConfig psi_;
  agent::Collector collector_;
  Rng shuffle_rng_;
  eval::ScoreTracker tracker_;
  eval::RollingWindow dist_window_{100};
  // trailing (cluster id, true room) labels for the clustering-quality metric
  std::vector<int> ari_clusters_, ari_rooms_;
  int ari_next_ = 0;
  double last_ari_ = 0.0;
  long long iter_ = 0;
};

// Appendix-style ablation sweeps. axis "psi-components" toggles the (x,y) and
// R components of the counting key; axis "adm-losses" toggles the per-cell
// and entropy terms of the dynamics loss. Each axis yields exactly four
// variants, run for every seed, with per-run artifacts under
// <base out_dir>/<variant>/seed-<s> and a comparison table at
// <base out_dir>/ablation.csv.
struct AblationRow {
  std::string variant;
  uint64_t seed = 0;
  RunSummary summary;
};

struct AblationResult {
  std::string axis;
  std::vector<AblationRow> rows;
  std::string table_path;
};

std::vector<std::string> ablation_variants(const std::string& axis);
ExperimentConfig apply_ablation_variant(const ExperimentConfig& base, const std::string& axis,
                                        const std::string& variant);
AblationResult run_ablation_suite(const ExperimentConfig& base, const std::string& axis,
                                  const std::vector<uint64_t>& seeds);

}  // namespace coex::cli
