#pragma once
#include <iosfwd>
#include <utility>
#include <vector>

#include "coex/abstraction.hpp"
#include "coex/adm.hpp"
#include "coex/graph.hpp"
#include "coex/optim.hpp"
#include "coex/params.hpp"
#include "coex/world.hpp"

namespace coex::agent {

// ---------------------------------------------------------------------------
// Policy network: conv torso over a stack of grayscale frames, one fully
// connected trunk, and two heads (action logits and a state value).
// ---------------------------------------------------------------------------

struct PolicyConfig {
  int frame_px = 84;
  int stack = 4;  // grayscale frames stacked along the channel axis, oldest first
  std::vector<adm::ConvSpec> torso = {{32, 8, 4}, {64, 4, 2}, {64, 3, 1}};
  int fc = 512;
  int num_actions = 5;
};

// side length of the torso's output grid; throws if the stack does not fit
int torso_grid(const PolicyConfig& cfg);

// the stock torso applied at an environment's native frame size
PolicyConfig policy_config_for_frame(int frame_px, int num_actions = world::kNumActions);

struct PolicyGraphVars {
  nd::Var logits;  // [B,A]
  nd::Var value;   // [B,1]
};

struct PolicyForward {
  nd::Tensor logits;  // [B,A]
  nd::Tensor probs;   // [B,A] softmax rows
  nd::Tensor value;   // [B]
};

class PolicyModel {
 public:
  PolicyModel(PolicyConfig cfg, uint64_t seed);

  const PolicyConfig& config() const { return cfg_; }
  nd::ParameterSet& params() { return params_; }
  int grid() const { return grid_; }

  PolicyGraphVars build(nd::Graph& g, const nd::Tensor& obs);  // [B,H,W,stack]
  PolicyForward forward(const nd::Tensor& obs);

 private:
  PolicyConfig cfg_;
  int grid_ = 0;
  nd::ParameterSet params_;
};

struct ActResult {
  std::vector<int> actions;      // sampled from softmax(logits), one per row
  std::vector<double> values;    // V(s) from the same forward pass
  std::vector<double> log_probs; // log pi(a|s) of the sampled action
};

ActResult act(PolicyModel& policy, const nd::Tensor& obs, Rng& rng);

// ---------------------------------------------------------------------------
// Frame stack: the policy observes the last `depth` grayscale frames.
// ---------------------------------------------------------------------------

class FrameStack {
 public:
  FrameStack(int h, int w, int depth = 4);

  void reset(const nd::Tensor& gray);  // fills every slot with the first frame
  void push(const nd::Tensor& gray);   // drops the oldest
  nd::Tensor observation() const;      // [H,W,depth], oldest channel first

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  int h_, w_, depth_;
  std::vector<nd::Tensor> frames_;  // oldest first
};

// ---------------------------------------------------------------------------
// Trainer configuration shared by A2C and PPO.
// ---------------------------------------------------------------------------

// kRandom acts uniformly without touching the policy network (no updates);
// used to study the dynamics model in isolation
enum class Algorithm { kA2C, kPpo, kRandom };

struct TrainerConfig {
  Algorithm algorithm = Algorithm::kA2C;
  double gamma = 0.99;
  double entropy_weight = 0.01;
  double beta1 = 2.0;  // weight of the clipped external reward
  double beta2 = 1.0;  // weight of the exploration bonus
  int actors = 16;
  int rollout = 5;
  nd::RmsPropConfig rmsprop;  // A2C optimizer
  nd::AdamConfig adam;        // PPO optimizer
  double gae_lambda = 0.95;
  double clip_eps = 0.1;
  int ppo_epochs = 4;
  int ppo_minibatches = 4;
  bool normalize_advantage = true;  // PPO: standardize advantages per batch
  bool normalize_reward = false;    // PPO: divide shaped rewards by a running return std
  double grad_clip = 0.0;           // max global gradient norm; 0 disables
};

void validate_trainer_config(const TrainerConfig& cfg);  // throws on bad ranges

// beta1 * clip(r_ext, -1, 1) + beta2 * r_plus
double shape_reward(double r_ext, double r_plus, const TrainerConfig& cfg);

// Running standard deviation of per-actor discounted returns of the shaped
// reward stream; used to normalize rewards when the flag is set.
class ReturnNormalizer {
 public:
  ReturnNormalizer(double gamma, int actors);

  // folds the reward into actor k's running return, updates the variance
  // estimate, and returns the reward divided by the current std (1 until the
  // estimate is meaningful); `done` resets actor k's return accumulator
  double normalize(double reward, int actor, bool done);
  double std_estimate() const;

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  double gamma_;
  std::vector<double> returns_;  // per-actor discounted return accumulator
  long long count_ = 0;          // Welford running variance over all returns
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// ---------------------------------------------------------------------------
// Rollout storage: K actors x n steps, flattened step-major (index t*K + k).
// ---------------------------------------------------------------------------

struct RolloutBuffer {
  int actors = 0;
  int rollout = 0;

  // policy-gradient material
  std::vector<nd::Tensor> obs;       // stacked grayscale input per transition
  std::vector<int> actions;          // issued (sampled) action
  std::vector<double> shaped_rewards;
  std::vector<double> values;
  std::vector<double> log_probs;
  std::vector<char> dones;

  // exploration bookkeeping
  std::vector<abstraction::AbstractState> psi;
  std::vector<double> r_ext;   // raw external reward
  std::vector<double> r_plus;  // exploration bonus

  // inverse-dynamics material (RGB frame pair around the transition)
  std::vector<nd::Tensor> rgb_prev, rgb_cur;
  std::vector<int> executed;         // post-sticky action that actually ran
  std::vector<long long> episode;    // episode id the transition belongs to

  // ground truth and localization output, for evaluation only
  std::vector<int> truth_row, truth_col, truth_room;
  std::vector<int> pred_x, pred_y;

  // state values of the post-rollout observations (for bootstrapping)
  std::vector<double> bootstrap;

  size_t size() const { return actions.size(); }
  nd::Tensor stacked_obs() const;        // [K*n, H, W, stack]
  adm::AdmBatch adm_batch() const;       // frame pairs + executed actions + episode ids
};

enum class ReturnMode { kNStep, kGae };

struct Returns {
  std::vector<double> returns;
  std::vector<double> advantages;
};

// n-step bootstrapped returns or GAE, with termination masking: a done flag
// cuts the recursion so no value leaks across an episode boundary.
Returns compute_returns(const RolloutBuffer& buffer, double gamma, ReturnMode mode,
                        double lambda = 0.95);

// ---------------------------------------------------------------------------
// Updates.
// ---------------------------------------------------------------------------

struct UpdateMetrics {
  double policy_loss = 0.0;  // mean(-log pi(a|s) * advantage)  (PPO: -mean surrogate)
  double value_loss = 0.0;   // coefficient-weighted value regression term
  double entropy = 0.0;      // mean policy entropy
  double total_loss = 0.0;
};

// L = mean[-log pi(a|s) * A] - alpha*mean[H(pi)] + 0.25*mean[(V - R)^2], with
// the advantage held constant (no gradient through its value term).
nd::Var a2c_loss_graph(PolicyModel& policy, nd::Graph& g, const nd::Tensor& obs,
                       const std::vector<int>& actions, const std::vector<double>& returns,
                       const std::vector<double>& advantages, const TrainerConfig& cfg,
                       UpdateMetrics* metrics = nullptr);

// clipped-surrogate objective with value term 0.5*mean[(V - R)^2] and entropy
// bonus; ratio = pi_new(a|s) / pi_old(a|s) from the stored log-probs
nd::Var ppo_loss_graph(PolicyModel& policy, nd::Graph& g, const nd::Tensor& obs,
                       const std::vector<int>& actions, const std::vector<double>& old_log_probs,
                       const std::vector<double>& returns, const std::vector<double>& advantages,
                       const TrainerConfig& cfg, UpdateMetrics* metrics = nullptr);

// one RMSProp step on the full buffer
UpdateMetrics a2c_update(PolicyModel& policy, const RolloutBuffer& buffer, const Returns& ret,
                         const TrainerConfig& cfg);

// epochs x minibatches Adam passes with a seeded shuffle; advantages are
// standardized over the whole batch first when the flag is set; metrics are
// averaged over all passes
UpdateMetrics ppo_update(PolicyModel& policy, const RolloutBuffer& buffer, const Returns& ret,
                         const TrainerConfig& cfg, Rng& shuffle_rng);

// standardize to zero mean / unit variance in place (no-op on zero variance)
void normalize_advantages(std::vector<double>& advantages);

// scales all gradients so their global norm is at most max_norm (when > 0);
// returns the pre-clip norm
double clip_gradients(nd::ParameterSet& params, double max_norm);

// ---------------------------------------------------------------------------
// Collector: K synchronized environments driven by the policy, producing
// rollout buffers with localization, clustering, counting, and shaping
// applied inline per transition.
// ---------------------------------------------------------------------------

class Collector {
 public:
  // `attention_grid` is the side length of the inverse-dynamics model's
  // attention map (the localizer's coordinate system)
  Collector(const world::WorldConfig& env_cfg, const TrainerConfig& cfg, int attention_grid,
            uint64_t seed);

  RolloutBuffer collect(PolicyModel& policy, adm::AdmModel& adm,
                        const abstraction::Projector& projector,
                        abstraction::ClusterSet& clusters, abstraction::VisitCounter& counter,
                        const abstraction::PsiConfig& psi_cfg);

  long long env_steps() const { return env_steps_; }
  long long episodes_started() const { return next_episode_; }

  // completed-episode raw returns (paired with the env-step count at
  // completion) accumulated since the previous drain
  std::vector<std::pair<double, long long>> drain_episode_returns();

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  TrainerConfig cfg_;
  int attn_grid_;
  std::vector<world::World> envs_;
  std::vector<FrameStack> stacks_;
  std::vector<adm::Localizer> localizers_;
  std::vector<nd::Tensor> prev_rgb_;   // last observed RGB frame per actor
  std::vector<double> episode_rext_;   // cumulative raw external reward
  std::vector<long long> episode_id_;
  long long next_episode_ = 0;
  long long env_steps_ = 0;
  Rng act_rng_;
  Rng reseed_rng_;
  ReturnNormalizer normalizer_;
  std::vector<std::pair<double, long long>> finished_;
};

}  // namespace coex::agent
