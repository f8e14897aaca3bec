#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "coex/agent.hpp"
#include "coex/world_presets.hpp"

namespace coex::agent {

using nd::Tensor;

namespace {

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) {
    throw std::runtime_error(std::string("collector state: truncated stream reading ") + what);
  }
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
  if (rank < 0 || rank > 8) {
    throw std::runtime_error(std::string("collector state: corrupt rank of ") + what);
  }
  std::vector<int> shape;
  for (int i = 0; i < rank; ++i) shape.push_back(read_pod<int>(is, what));
  Tensor t(shape);
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(sizeof(double) * t.size()));
  if (!is) {
    throw std::runtime_error(std::string("collector state: truncated stream reading ") + what);
  }
  return t;
}

}  // namespace

Collector::Collector(const world::WorldConfig& env_cfg, const TrainerConfig& cfg,
                     int attention_grid, uint64_t seed)
    : cfg_(cfg),
      attn_grid_(attention_grid),
      act_rng_(child_seed(seed, "collector/act")),
      reseed_rng_(child_seed(seed, "collector/reseed")),
      normalizer_(cfg.gamma, cfg.actors) {
  validate_trainer_config(cfg_);
  if (attention_grid < 1) throw std::invalid_argument("collector: attention grid must be positive");

  const int K = cfg_.actors;
  envs_.reserve(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) envs_.emplace_back(env_cfg);
  for (int k = 0; k < K; ++k) {
    world::Frame f = envs_[static_cast<size_t>(k)].reset(
        child_seed(seed, "collector/env/" + std::to_string(k)));
    prev_rgb_.push_back(f);
    stacks_.emplace_back(env_cfg.frame_px, env_cfg.frame_px, 4);
    stacks_.back().reset(world::grayscale(f));
    localizers_.emplace_back(attn_grid_, attn_grid_);
    episode_rext_.push_back(0.0);
    episode_id_.push_back(next_episode_++);
  }
}

RolloutBuffer Collector::collect(PolicyModel& policy, adm::AdmModel& adm,
                                 const abstraction::Projector& projector,
                                 abstraction::ClusterSet& clusters,
                                 abstraction::VisitCounter& counter,
                                 const abstraction::PsiConfig& psi_cfg) {
  const int K = cfg_.actors;
  const int n = cfg_.rollout;
  const int HW = attn_grid_ * attn_grid_;

  RolloutBuffer buf;
  buf.actors = K;
  buf.rollout = n;
  const size_t total = static_cast<size_t>(K) * n;
  buf.obs.reserve(total);
  buf.rgb_prev.reserve(total);
  buf.rgb_cur.reserve(total);

  std::vector<Tensor> obs_rows(static_cast<size_t>(K));
  std::vector<world::StepResult> results(static_cast<size_t>(K));

  const bool random_policy = cfg_.algorithm == Algorithm::kRandom;
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < K; ++k) obs_rows[static_cast<size_t>(k)] = stacks_[static_cast<size_t>(k)].observation();
    ActResult acts;
    if (random_policy) {
      const int A = policy.config().num_actions;
      acts.values.assign(static_cast<size_t>(K), 0.0);
      acts.log_probs.assign(static_cast<size_t>(K), -std::log(static_cast<double>(A)));
      for (int k = 0; k < K; ++k) acts.actions.push_back(act_rng_.next_int(A));
    } else {
      acts = act(policy, adm::stack_frames(obs_rows), act_rng_);
    }

    for (int k = 0; k < K; ++k) {
      results[static_cast<size_t>(k)] = envs_[static_cast<size_t>(k)].step(acts.actions[static_cast<size_t>(k)]);
    }

    // localize every actor's transition in one attention pass
    std::vector<Tensor> cur_rows(static_cast<size_t>(K));
    for (int k = 0; k < K; ++k) cur_rows[static_cast<size_t>(k)] = results[static_cast<size_t>(k)].obs;
    const adm::ForwardResult fr =
        adm.forward(adm::stack_frames(prev_rgb_), adm::stack_frames(cur_rows));

    for (int k = 0; k < K; ++k) {
      const size_t uk = static_cast<size_t>(k);
      const world::StepResult& r = results[uk];

      const Tensor alpha_row(std::vector<int>{HW}, nd::tensor_row(fr.alpha, k));
      const auto [x, y] = localizers_[uk].update(alpha_row);
      const int c = clusters.assign(projector.embed(r.obs));

      episode_rext_[uk] += r.r_ext;
      const abstraction::AbstractState psi =
          abstraction::make_psi(x, y, c, episode_rext_[uk], psi_cfg);
      const double bonus = counter.count_and_bonus(psi);
      double shaped = shape_reward(r.r_ext, bonus, cfg_);
      if (cfg_.normalize_reward) shaped = normalizer_.normalize(shaped, k, r.done);

      buf.obs.push_back(obs_rows[uk]);
      buf.actions.push_back(acts.actions[uk]);
      buf.shaped_rewards.push_back(shaped);
      buf.values.push_back(acts.values[uk]);
      buf.log_probs.push_back(acts.log_probs[uk]);
      buf.dones.push_back(r.done ? 1 : 0);
      buf.psi.push_back(psi);
      buf.r_ext.push_back(r.r_ext);
      buf.r_plus.push_back(bonus);
      buf.rgb_prev.push_back(prev_rgb_[uk]);
      buf.rgb_cur.push_back(r.obs);
      buf.executed.push_back(r.info.executed_action);
      buf.episode.push_back(episode_id_[uk]);
      buf.truth_row.push_back(r.info.avatar_row);
      buf.truth_col.push_back(r.info.avatar_col);
      buf.truth_room.push_back(r.info.room);
      buf.pred_x.push_back(x);
      buf.pred_y.push_back(y);

      ++env_steps_;
      if (r.done) {
        finished_.push_back({episode_rext_[uk], env_steps_});
        world::Frame f = envs_[uk].reset(reseed_rng_.next_u64());
        stacks_[uk].reset(world::grayscale(f));
        localizers_[uk].reset();
        prev_rgb_[uk] = f;
        episode_rext_[uk] = 0.0;
        episode_id_[uk] = next_episode_++;
      } else {
        stacks_[uk].push(world::grayscale(r.obs));
        prev_rgb_[uk] = r.obs;
      }
    }
  }

  if (random_policy) {
    buf.bootstrap.assign(static_cast<size_t>(K), 0.0);
  } else {
    for (int k = 0; k < K; ++k) obs_rows[static_cast<size_t>(k)] = stacks_[static_cast<size_t>(k)].observation();
    const PolicyForward fwd = policy.forward(adm::stack_frames(obs_rows));
    buf.bootstrap.assign(fwd.value.data(), fwd.value.data() + K);
  }
  return buf;
}

std::vector<std::pair<double, long long>> Collector::drain_episode_returns() {
  std::vector<std::pair<double, long long>> out;
  out.swap(finished_);
  return out;
}

void Collector::save(std::ostream& os) const {
  const int K = cfg_.actors;
  write_pod(os, K);
  write_pod(os, attn_grid_);
  for (int k = 0; k < K; ++k) {
    const size_t uk = static_cast<size_t>(k);
    envs_[uk].save_state(os);
    stacks_[uk].save(os);
    const adm::Localizer& loc = localizers_[uk];
    write_pod(os, static_cast<char>(loc.has_history() ? 1 : 0));
    if (loc.has_history()) write_tensor(os, loc.smoothed());
    write_tensor(os, prev_rgb_[uk]);
    write_pod(os, episode_rext_[uk]);
    write_pod(os, episode_id_[uk]);
  }
  write_pod(os, next_episode_);
  write_pod(os, env_steps_);
  act_rng_.save(os);
  reseed_rng_.save(os);
  normalizer_.save(os);
  write_pod(os, static_cast<long long>(finished_.size()));
  for (const auto& [ret, step] : finished_) {
    write_pod(os, ret);
    write_pod(os, step);
  }
}

void Collector::load(std::istream& is) {
  const int K = read_pod<int>(is, "actor count");
  if (K != cfg_.actors) throw std::runtime_error("collector state: actor count mismatch");
  const int grid = read_pod<int>(is, "attention grid");
  if (grid != attn_grid_) throw std::runtime_error("collector state: attention grid mismatch");
  for (int k = 0; k < K; ++k) {
    const size_t uk = static_cast<size_t>(k);
    envs_[uk].load_state(is);
    stacks_[uk].load(is);
    const char has = read_pod<char>(is, "localizer flag");
    localizers_[uk].reset();
    if (has) {
      // the first update on an empty history copies the map verbatim, so this
      // restores the saved smoothing state exactly
      localizers_[uk].update(read_tensor(is, "localizer history"));
    }
    prev_rgb_[uk] = read_tensor(is, "previous frame");
    episode_rext_[uk] = read_pod<double>(is, "episode reward");
    episode_id_[uk] = read_pod<long long>(is, "episode id");
  }
  next_episode_ = read_pod<long long>(is, "episode counter");
  env_steps_ = read_pod<long long>(is, "env step counter");
  act_rng_.load(is);
  reseed_rng_.load(is);
  normalizer_.load(is);
  finished_.clear();
  const long long m = read_pod<long long>(is, "finished episode count");
  for (long long i = 0; i < m; ++i) {
    const double ret = read_pod<double>(is, "finished episode return");
    const long long step = read_pod<long long>(is, "finished episode step");
    finished_.push_back({ret, step});
  }
}

}  // namespace coex::agent
