#include "coex/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace coex::agent {

using nd::Graph;
using nd::Tensor;
using nd::Var;

namespace {

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("agent state: truncated stream reading ") + what);
  return v;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  write_pod(os, static_cast<int>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) write_pod(os, t.dim(i));
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(sizeof(double) * t.size()));
}

Tensor read_tensor(std::istream& is, const char* what) {
  const int rank = read_pod<int>(is, what);
  if (rank < 0 || rank > 8) throw std::runtime_error(std::string("agent state: corrupt rank of ") + what);
  std::vector<int> shape;
  for (int i = 0; i < rank; ++i) shape.push_back(read_pod<int>(is, what));
  Tensor t(shape);
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(sizeof(double) * t.size()));
  if (!is) throw std::runtime_error(std::string("agent state: truncated stream reading ") + what);
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Policy network.
// ---------------------------------------------------------------------------

int torso_grid(const PolicyConfig& cfg) {
  if (cfg.torso.empty()) throw std::invalid_argument("policy: empty torso stack");
  int d = cfg.frame_px;
  for (const auto& l : cfg.torso) {
    if (l.out_ch < 1 || l.kernel < 1 || l.stride < 1) {
      throw std::invalid_argument("policy: conv layers need positive channels, kernel, stride");
    }
    if (l.kernel > d) {
      throw std::invalid_argument("policy: conv kernel " + std::to_string(l.kernel) +
                                  " exceeds running frame size " + std::to_string(d) +
                                  " (frame " + std::to_string(cfg.frame_px) + " too small)");
    }
    d = (d - l.kernel) / l.stride + 1;
  }
  if (d < 1) throw std::invalid_argument("policy: torso collapses the frame to nothing");
  return d;
}

PolicyConfig policy_config_for_frame(int frame_px, int num_actions) {
  PolicyConfig cfg;
  cfg.frame_px = frame_px;
  cfg.num_actions = num_actions;
  torso_grid(cfg);  // validates the stock torso fits this frame
  return cfg;
}

PolicyModel::PolicyModel(PolicyConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
  if (cfg_.num_actions < 2) throw std::invalid_argument("policy: need at least two actions");
  if (cfg_.stack < 1) throw std::invalid_argument("policy: frame stack must be positive");
  if (cfg_.fc < 1) throw std::invalid_argument("policy: trunk width must be positive");
  grid_ = torso_grid(cfg_);

  Rng rng(child_seed(seed, "policy/init"));
  int in_ch = cfg_.stack;
  for (size_t l = 0; l < cfg_.torso.size(); ++l) {
    const auto& spec = cfg_.torso[l];
    const int fan_in = spec.kernel * spec.kernel * in_ch;
    const std::string base = "policy/conv" + std::to_string(l);
    params_.add(base + "/W",
                nd::he_uniform({spec.kernel, spec.kernel, in_ch, spec.out_ch}, fan_in, rng));
    params_.add(base + "/b", Tensor({spec.out_ch}));
    in_ch = spec.out_ch;
  }
  const int flat = grid_ * grid_ * in_ch;
  params_.add("policy/fc/W", nd::he_uniform({flat, cfg_.fc}, flat, rng));
  params_.add("policy/fc/b", Tensor({cfg_.fc}));

  // the action head starts near zero so the initial policy is near-uniform:
  // early exploration should not inherit a bias from initialization noise
  Tensor pi_w = nd::he_uniform({cfg_.fc, cfg_.num_actions}, cfg_.fc, rng);
  for (size_t i = 0; i < pi_w.size(); ++i) pi_w[i] *= 0.01;
  params_.add("policy/pi/W", pi_w);
  params_.add("policy/pi/b", Tensor({cfg_.num_actions}));
  params_.add("policy/v/W", nd::he_uniform({cfg_.fc, 1}, cfg_.fc, rng));
  params_.add("policy/v/b", Tensor({1}));
}

PolicyGraphVars PolicyModel::build(Graph& g, const Tensor& obs) {
  if (obs.rank() != 4 || obs.dim(1) != cfg_.frame_px || obs.dim(2) != cfg_.frame_px ||
      obs.dim(3) != cfg_.stack) {
    throw std::invalid_argument("policy: observation batch " + obs.shape_str() +
                                " does not match input [B," + std::to_string(cfg_.frame_px) +
                                "," + std::to_string(cfg_.frame_px) + "," +
                                std::to_string(cfg_.stack) + "]");
  }
  const int B = obs.dim(0);

  Var h = g.input(obs);
  for (size_t l = 0; l < cfg_.torso.size(); ++l) {
    const std::string base = "policy/conv" + std::to_string(l);
    h = relu(conv2d(h, g.param(params_.at(base + "/W")), g.param(params_.at(base + "/b")),
                    cfg_.torso[l].stride));
  }
  const int flat = grid_ * grid_ * cfg_.torso.back().out_ch;
  h = reshape(h, {B, flat});
  h = relu(dense(h, g.param(params_.at("policy/fc/W")), g.param(params_.at("policy/fc/b"))));

  PolicyGraphVars v;
  v.logits = dense(h, g.param(params_.at("policy/pi/W")), g.param(params_.at("policy/pi/b")));
  v.value = dense(h, g.param(params_.at("policy/v/W")), g.param(params_.at("policy/v/b")));
  return v;
}

PolicyForward PolicyModel::forward(const Tensor& obs) {
  Graph g;
  PolicyGraphVars v = build(g, obs);
  PolicyForward out;
  out.logits = v.logits.value();
  out.probs = softmax(v.logits).value();
  const Tensor& val = v.value.value();
  out.value = Tensor({val.dim(0)});
  for (int b = 0; b < val.dim(0); ++b) out.value[static_cast<size_t>(b)] = val[static_cast<size_t>(b)];
  return out;
}

ActResult act(PolicyModel& policy, const Tensor& obs, Rng& rng) {
  const PolicyForward fwd = policy.forward(obs);
  const int B = fwd.logits.dim(0);
  const int A = fwd.logits.dim(1);

  ActResult out;
  out.actions.resize(static_cast<size_t>(B));
  out.values.resize(static_cast<size_t>(B));
  out.log_probs.resize(static_cast<size_t>(B));
  for (int b = 0; b < B; ++b) {
    const double* p = fwd.probs.data() + static_cast<size_t>(b) * A;
    const double u = rng.next_double();
    int a = A - 1;  // numerical fallback: probabilities sum to 1 up to rounding
    double cum = 0.0;
    for (int i = 0; i < A; ++i) {
      cum += p[i];
      if (u < cum) {
        a = i;
        break;
      }
    }
    // exact log-softmax of the chosen action
    const double* l = fwd.logits.data() + static_cast<size_t>(b) * A;
    double m = l[0];
    for (int i = 1; i < A; ++i) m = std::max(m, l[i]);
    double lse = 0.0;
    for (int i = 0; i < A; ++i) lse += std::exp(l[i] - m);
    out.actions[static_cast<size_t>(b)] = a;
    out.log_probs[static_cast<size_t>(b)] = l[a] - (m + std::log(lse));
    out.values[static_cast<size_t>(b)] = fwd.value[static_cast<size_t>(b)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frame stack.
// ---------------------------------------------------------------------------

FrameStack::FrameStack(int h, int w, int depth) : h_(h), w_(w), depth_(depth) {
  if (h < 1 || w < 1 || depth < 1) throw std::invalid_argument("frame stack: bad dimensions");
}

void FrameStack::reset(const Tensor& gray) {
  if (gray.rank() != 2 || gray.dim(0) != h_ || gray.dim(1) != w_) {
    throw std::invalid_argument("frame stack: frame " + gray.shape_str() + " does not match [" +
                                std::to_string(h_) + "," + std::to_string(w_) + "]");
  }
  frames_.assign(static_cast<size_t>(depth_), gray);
}

void FrameStack::push(const Tensor& gray) {
  if (frames_.empty()) throw std::logic_error("frame stack: push before reset");
  if (gray.rank() != 2 || gray.dim(0) != h_ || gray.dim(1) != w_) {
    throw std::invalid_argument("frame stack: frame " + gray.shape_str() + " does not match [" +
                                std::to_string(h_) + "," + std::to_string(w_) + "]");
  }
  frames_.erase(frames_.begin());
  frames_.push_back(gray);
}

Tensor FrameStack::observation() const {
  if (frames_.empty()) throw std::logic_error("frame stack: read before reset");
  Tensor out({h_, w_, depth_});
  for (int s = 0; s < depth_; ++s) {
    const Tensor& f = frames_[static_cast<size_t>(s)];
    for (int i = 0; i < h_ * w_; ++i) {
      out[static_cast<size_t>(i) * depth_ + s] = f[static_cast<size_t>(i)];
    }
  }
  return out;
}

void FrameStack::save(std::ostream& os) const {
  write_pod(os, h_);
  write_pod(os, w_);
  write_pod(os, depth_);
  write_pod(os, static_cast<int>(frames_.size()));
  for (const auto& f : frames_) write_tensor(os, f);
}

void FrameStack::load(std::istream& is) {
  const int h = read_pod<int>(is, "stack height");
  const int w = read_pod<int>(is, "stack width");
  const int d = read_pod<int>(is, "stack depth");
  if (h != h_ || w != w_ || d != depth_) {
    throw std::runtime_error("agent state: frame stack shape mismatch");
  }
  const int n = read_pod<int>(is, "stack fill");
  if (n != 0 && n != depth_) throw std::runtime_error("agent state: corrupt frame stack fill");
  frames_.clear();
  for (int i = 0; i < n; ++i) frames_.push_back(read_tensor(is, "stack frame"));
}

// ---------------------------------------------------------------------------
// Trainer config, reward shaping, normalization.
// ---------------------------------------------------------------------------

void validate_trainer_config(const TrainerConfig& cfg) {
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) {
    throw std::invalid_argument("trainer: gamma must lie in (0,1]");
  }
  if (cfg.beta1 < 0.0 || cfg.beta2 < 0.0) {
    throw std::invalid_argument("trainer: reward weights must be nonnegative");
  }
  if (cfg.entropy_weight < 0.0) throw std::invalid_argument("trainer: entropy weight < 0");
  if (cfg.actors < 1 || cfg.rollout < 1) {
    throw std::invalid_argument("trainer: actors and rollout length must be positive");
  }
  if (cfg.gae_lambda < 0.0 || cfg.gae_lambda > 1.0) {
    throw std::invalid_argument("trainer: GAE lambda must lie in [0,1]");
  }
  if (cfg.clip_eps < 0.0) throw std::invalid_argument("trainer: clip epsilon < 0");
  if (cfg.ppo_epochs < 1 || cfg.ppo_minibatches < 1) {
    throw std::invalid_argument("trainer: PPO epochs and minibatches must be positive");
  }
  if (cfg.ppo_minibatches > cfg.actors * cfg.rollout) {
    throw std::invalid_argument("trainer: more PPO minibatches than transitions");
  }
  if (cfg.grad_clip < 0.0) throw std::invalid_argument("trainer: gradient clip < 0");
}

double shape_reward(double r_ext, double r_plus, const TrainerConfig& cfg) {
  const double clipped = std::clamp(r_ext, -1.0, 1.0);
  return cfg.beta1 * clipped + cfg.beta2 * r_plus;
}

ReturnNormalizer::ReturnNormalizer(double gamma, int actors) : gamma_(gamma) {
  if (actors < 1) throw std::invalid_argument("return normalizer: need at least one actor");
  returns_.assign(static_cast<size_t>(actors), 0.0);
}

double ReturnNormalizer::normalize(double reward, int actor, bool done) {
  double& ret = returns_.at(static_cast<size_t>(actor));
  ret = gamma_ * ret + reward;
  ++count_;
  const double delta = ret - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (ret - mean_);
  if (done) ret = 0.0;
  const double sd = std_estimate();
  return sd > 1e-8 ? reward / sd : reward;
}

double ReturnNormalizer::std_estimate() const {
  if (count_ < 2) return 0.0;
  return std::sqrt(m2_ / static_cast<double>(count_ - 1));
}

void ReturnNormalizer::save(std::ostream& os) const {
  write_pod(os, gamma_);
  write_pod(os, static_cast<int>(returns_.size()));
  for (double r : returns_) write_pod(os, r);
  write_pod(os, count_);
  write_pod(os, mean_);
  write_pod(os, m2_);
}

void ReturnNormalizer::load(std::istream& is) {
  gamma_ = read_pod<double>(is, "normalizer gamma");
  const int n = read_pod<int>(is, "normalizer actors");
  if (n != static_cast<int>(returns_.size())) {
    throw std::runtime_error("agent state: return normalizer actor count mismatch");
  }
  for (double& r : returns_) r = read_pod<double>(is, "normalizer return");
  count_ = read_pod<long long>(is, "normalizer count");
  mean_ = read_pod<double>(is, "normalizer mean");
  m2_ = read_pod<double>(is, "normalizer m2");
}

// ---------------------------------------------------------------------------
// Rollout buffer and returns.
// ---------------------------------------------------------------------------

Tensor RolloutBuffer::stacked_obs() const { return adm::stack_frames(obs); }

adm::AdmBatch RolloutBuffer::adm_batch() const {
  adm::AdmBatch batch;
  batch.prev = adm::stack_frames(rgb_prev);
  batch.cur = adm::stack_frames(rgb_cur);
  batch.actions = executed;
  batch.prev_episode = episode;
  batch.cur_episode = episode;
  return batch;
}

Returns compute_returns(const RolloutBuffer& buffer, double gamma, ReturnMode mode,
                        double lambda) {
  const int K = buffer.actors;
  const int n = buffer.rollout;
  const size_t total = static_cast<size_t>(K) * n;
  if (buffer.size() != total || buffer.values.size() != total ||
      buffer.shaped_rewards.size() != total || buffer.dones.size() != total) {
    throw std::invalid_argument("returns: buffer is not a complete K x n rollout");
  }
  if (buffer.bootstrap.size() != static_cast<size_t>(K)) {
    throw std::invalid_argument("returns: bootstrap values missing (need one per actor)");
  }

  Returns out;
  out.returns.assign(total, 0.0);
  out.advantages.assign(total, 0.0);

  for (int k = 0; k < K; ++k) {
    if (mode == ReturnMode::kNStep) {
      double run = buffer.bootstrap[static_cast<size_t>(k)];
      for (int t = n - 1; t >= 0; --t) {
        const size_t idx = static_cast<size_t>(t) * K + k;
        const double mask = buffer.dones[idx] ? 0.0 : 1.0;
        run = buffer.shaped_rewards[idx] + gamma * mask * run;
        out.returns[idx] = run;
        out.advantages[idx] = run - buffer.values[idx];
      }
    } else {
      double adv = 0.0;
      double next_value = buffer.bootstrap[static_cast<size_t>(k)];
      for (int t = n - 1; t >= 0; --t) {
        const size_t idx = static_cast<size_t>(t) * K + k;
        const double mask = buffer.dones[idx] ? 0.0 : 1.0;
        const double delta =
            buffer.shaped_rewards[idx] + gamma * mask * next_value - buffer.values[idx];
        adv = delta + gamma * lambda * mask * adv;
        out.advantages[idx] = adv;
        out.returns[idx] = adv + buffer.values[idx];
        next_value = buffer.values[idx];
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loss graphs and updates.
// ---------------------------------------------------------------------------

namespace {

void check_batch_sizes(const Tensor& obs, size_t actions, size_t returns, size_t advantages) {
  const size_t B = static_cast<size_t>(obs.dim(0));
  if (actions != B || returns != B || advantages != B) {
    throw std::invalid_argument("update: batch size mismatch between observations (" +
                                std::to_string(B) + "), actions (" + std::to_string(actions) +
                                "), returns (" + std::to_string(returns) + "), advantages (" +
                                std::to_string(advantages) + ")");
  }
}

Var value_regression(Graph& g, Var value, const std::vector<double>& returns, double coeff) {
  const int B = value.shape()[0];
  Var v = reshape(value, {B});
  Var target = g.input(Tensor({B}, returns));
  Var diff = sub(v, target);
  return scale(mean(mul(diff, diff)), coeff);
}

}  // namespace

Var a2c_loss_graph(PolicyModel& policy, Graph& g, const Tensor& obs,
                   const std::vector<int>& actions, const std::vector<double>& returns,
                   const std::vector<double>& advantages, const TrainerConfig& cfg,
                   UpdateMetrics* metrics) {
  check_batch_sizes(obs, actions.size(), returns.size(), advantages.size());
  const int B = obs.dim(0);

  PolicyGraphVars pv = policy.build(g, obs);
  Var ce = cross_entropy_with_logits(pv.logits, actions);  // -log pi(a|s), [B]
  Var adv = g.input(Tensor({B}, advantages));              // constant: no value gradient
  Var policy_term = mean(mul(ce, adv));
  Var entropy_term = mean(softmax_entropy(pv.logits));
  Var value_term = value_regression(g, pv.value, returns, 0.25);
  Var total = add(add(policy_term, scale(entropy_term, -cfg.entropy_weight)), value_term);

  if (metrics) {
    metrics->policy_loss = policy_term.value().item();
    metrics->value_loss = value_term.value().item();
    metrics->entropy = entropy_term.value().item();
    metrics->total_loss = total.value().item();
  }
  return total;
}

Var ppo_loss_graph(PolicyModel& policy, Graph& g, const Tensor& obs,
                   const std::vector<int>& actions, const std::vector<double>& old_log_probs,
                   const std::vector<double>& returns, const std::vector<double>& advantages,
                   const TrainerConfig& cfg, UpdateMetrics* metrics) {
  check_batch_sizes(obs, actions.size(), returns.size(), advantages.size());
  if (old_log_probs.size() != actions.size()) {
    throw std::invalid_argument("update: old log-probs do not cover the batch");
  }
  const int B = obs.dim(0);

  PolicyGraphVars pv = policy.build(g, obs);
  Var ce = cross_entropy_with_logits(pv.logits, actions);
  Var logp_new = scale(ce, -1.0);
  Var logp_old = g.input(Tensor({B}, old_log_probs));
  Var ratio = nd::exp(sub(logp_new, logp_old));
  Var adv = g.input(Tensor({B}, advantages));
  Var unclipped = mul(ratio, adv);
  Var clipped = mul(clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps), adv);
  Var surrogate = mean(minimum(unclipped, clipped));
  Var policy_term = scale(surrogate, -1.0);
  Var entropy_term = mean(softmax_entropy(pv.logits));
  Var value_term = value_regression(g, pv.value, returns, 0.5);
  Var total = add(add(policy_term, scale(entropy_term, -cfg.entropy_weight)), value_term);

  if (metrics) {
    metrics->policy_loss = policy_term.value().item();
    metrics->value_loss = value_term.value().item();
    metrics->entropy = entropy_term.value().item();
    metrics->total_loss = total.value().item();
  }
  return total;
}

void normalize_advantages(std::vector<double>& advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  double m = 0.0;
  for (double a : advantages) m += a;
  m /= n;
  double var = 0.0;
  for (double a : advantages) var += (a - m) * (a - m);
  var /= n;
  const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  for (double& a : advantages) a = (a - m) * inv;
}

double clip_gradients(nd::ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (size_t i = 0; i < params.size(); ++i) {
    const Tensor& grad = params.entry(i).grad;
    for (size_t j = 0; j < grad.size(); ++j) sq += grad[j] * grad[j];
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (size_t i = 0; i < params.size(); ++i) {
      Tensor& grad = params.entry(i).grad;
      for (size_t j = 0; j < grad.size(); ++j) grad[j] *= s;
    }
  }
  return norm;
}

UpdateMetrics a2c_update(PolicyModel& policy, const RolloutBuffer& buffer, const Returns& ret,
                         const TrainerConfig& cfg) {
  UpdateMetrics metrics;
  Graph g;
  Var loss = a2c_loss_graph(policy, g, buffer.stacked_obs(), buffer.actions, ret.returns,
                            ret.advantages, cfg, &metrics);
  policy.params().zero_grads();
  g.backward(loss);
  if (cfg.grad_clip > 0.0) clip_gradients(policy.params(), cfg.grad_clip);
  rmsprop_step(policy.params(), cfg.rmsprop);
  return metrics;
}

UpdateMetrics ppo_update(PolicyModel& policy, const RolloutBuffer& buffer, const Returns& ret,
                         const TrainerConfig& cfg, Rng& shuffle_rng) {
  const size_t total = buffer.size();
  if (ret.advantages.size() != total || ret.returns.size() != total) {
    throw std::invalid_argument("update: returns do not cover the buffer");
  }

  std::vector<double> adv = ret.advantages;
  if (cfg.normalize_advantage) normalize_advantages(adv);

  std::vector<size_t> order(total);
  std::iota(order.begin(), order.end(), 0);

  UpdateMetrics accum;
  int passes = 0;
  for (int epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    // Fisher-Yates with the seeded stream, so the minibatch makeup replays
    for (size_t i = total - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(shuffle_rng.next_int(static_cast<int>(i + 1)));
      std::swap(order[i], order[j]);
    }
    const size_t base = total / static_cast<size_t>(cfg.ppo_minibatches);
    const size_t rem = total % static_cast<size_t>(cfg.ppo_minibatches);
    size_t start = 0;
    for (int mb = 0; mb < cfg.ppo_minibatches; ++mb) {
      const size_t count = base + (static_cast<size_t>(mb) < rem ? 1 : 0);
      if (count == 0) continue;

      std::vector<nd::Tensor> obs_rows;
      std::vector<int> actions;
      std::vector<double> old_logp, returns, advantages;
      obs_rows.reserve(count);
      for (size_t i = start; i < start + count; ++i) {
        const size_t idx = order[i];
        obs_rows.push_back(buffer.obs[idx]);
        actions.push_back(buffer.actions[idx]);
        old_logp.push_back(buffer.log_probs[idx]);
        returns.push_back(ret.returns[idx]);
        advantages.push_back(adv[idx]);
      }
      start += count;

      UpdateMetrics metrics;
      Graph g;
      Var loss = ppo_loss_graph(policy, g, adm::stack_frames(obs_rows), actions, old_logp,
                                returns, advantages, cfg, &metrics);
      policy.params().zero_grads();
      g.backward(loss);
      if (cfg.grad_clip > 0.0) clip_gradients(policy.params(), cfg.grad_clip);
      adam_step(policy.params(), cfg.adam);

      accum.policy_loss += metrics.policy_loss;
      accum.value_loss += metrics.value_loss;
      accum.entropy += metrics.entropy;
      accum.total_loss += metrics.total_loss;
      ++passes;
    }
  }
  if (passes > 0) {
    accum.policy_loss /= passes;
    accum.value_loss /= passes;
    accum.entropy /= passes;
    accum.total_loss /= passes;
  }
  return accum;
}

}  // namespace coex::agent
