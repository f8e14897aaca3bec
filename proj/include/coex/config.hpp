#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coex/abstraction.hpp"
#include "coex/adm.hpp"
#include "coex/agent.hpp"
#include "coex/world.hpp"

namespace coex::cli {

// A run is described by one JSON document with five fixed sections. Parsing
// is strict: unknown keys anywhere are rejected, missing keys take the
// defaults below, and any leaf can be overridden from the command line with
// a dotted path ("trainer.beta2=0").

struct EnvSection {
  std::string preset = "four-rooms-sparse";  // corridor | four-rooms-sparse | key-door
  // unset fields keep the preset's own value
  std::optional<double> p_sticky;
  std::optional<int> max_steps;
  std::optional<int> distractors_per_room;
  bool operator==(const EnvSection&) const = default;
};

struct TrainerSection {
  std::string algorithm = "a2c";  // a2c | ppo | random (uniform actions, no policy updates)
  double gamma = 0.99;
  double entropy_weight = 0.01;
  double beta1 = 2.0;  // clipped external reward weight
  double beta2 = 1.0;  // exploration bonus weight
  int actors = 16;
  int rollout = 5;
  double rmsprop_lr = 7e-4;  // a2c optimizer
  double adam_lr = 1e-5;     // ppo optimizer
  double gae_lambda = 0.95;
  double clip_eps = 0.1;
  int ppo_epochs = 4;
  int ppo_minibatches = 4;
  bool normalize_advantage = true;
  bool normalize_reward = false;
  double grad_clip = 0.0;
  bool operator==(const TrainerSection&) const = default;
};

struct AdmSection {
  double lambda_ent = 0.001;
  bool use_softmax = false;  // sparsemax attention by default
  bool use_cell_loss = true;
  bool use_ent_loss = true;
  double learning_rate = 7e-4;
  bool operator==(const AdmSection&) const = default;
};

struct AbstractionSection {
  double tau = 0.0;  // <= 0: calibrate from rendered room frames at startup
  int tau_frames_per_room = 40;
  int dim = 64;
  bool psi_xy = true;      // include the attention-grid location in psi
  bool psi_reward = true;  // include the floored cumulative reward in psi
  bool operator==(const AbstractionSection&) const = default;
};

struct RunSection {
  long long total_env_steps = 200000;
  int eval_cadence = 10;       // iterations between clustering-quality refreshes
  int checkpoint_cadence = 0;  // iterations between checkpoints; 0 keeps only the final one
  uint64_t seed = 1;
  std::string out_dir = "run-out";
  bool operator==(const RunSection&) const = default;
};

struct ExperimentConfig {
  EnvSection env;
  TrainerSection trainer;
  AdmSection adm;
  AbstractionSection abstraction;
  RunSection run;
  bool operator==(const ExperimentConfig&) const = default;
};

// Pretty-printed JSON with every key present (round-trips to an equal config).
std::string serialize_config(const ExperimentConfig& cfg);

// Strict parse: text must be a JSON object; unknown keys raise with the full
// dotted path; overrides ("a.b=value") are applied after parsing, where the
// value is read as JSON when it parses and as a bare string otherwise.
ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides = {});

ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides = {});

// Range/consistency checks beyond parsing (preset exists, positive budgets,
// component configs constructible). Throws std::invalid_argument.
void validate_config(const ExperimentConfig& cfg);

// Resolved component configurations.
world::WorldConfig make_world_config(const ExperimentConfig& cfg);
agent::TrainerConfig make_trainer_config(const ExperimentConfig& cfg);
adm::AdmConfig make_adm_config(const ExperimentConfig& cfg);  // stock stack for the env frame
abstraction::ProjectorConfig make_projector_config(const ExperimentConfig& cfg);
abstraction::PsiConfig make_psi_config(const ExperimentConfig& cfg);

}  // namespace coex::cli
