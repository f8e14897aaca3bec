#include "coex/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "coex/checkpoint.hpp"
#include "json.hpp"

namespace coex::cli {

namespace fs = std::filesystem;
using nd::Tensor;

namespace {

constexpr int kAriRing = 500;  // trailing labeled frames scored against true rooms
constexpr char kMetricsHeader[] =
    "iter,env_step,policy_loss,value_loss,entropy,adm_total,adm_action,adm_cell,adm_ent,"
    "adm_accuracy,reward_ext_mean,reward_shaped_mean,rplus_mean,rplus_min,rplus_max,episodes,"
    "score_window_mean,score_max_mean,distance_mean,distance_w100,ari,clusters,distinct_psi,"
    "seed";

// every stage of the loop reports failures with its iteration and name
template <typename F>
decltype(auto) stage(long long iter, const char* component, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error("iteration " + std::to_string(iter) + ", component '" + component +
                             "': " + e.what());
  }
}

double resolve_tau(const ExperimentConfig& cfg, const world::WorldConfig& world_cfg,
                   const abstraction::Projector& projector) {
  if (cfg.abstraction.tau > 0.0) return cfg.abstraction.tau;
  world::World probe(world_cfg);
  return abstraction::calibrate_tau(probe, projector, cfg.abstraction.tau_frames_per_room,
                                    child_seed(cfg.run.seed, "tau"));
}

template <typename T>
void put_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get_pod(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error(std::string("checkpoint: truncated reading ") + what);
  return v;
}

void write_section(std::ostream& os, const std::string& name, const std::string& payload) {
  put_pod<uint32_t>(os, static_cast<uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_pod<uint64_t>(os, payload.size());
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!os) throw std::runtime_error("checkpoint: write failed in section '" + name + "'");
}

std::string read_section(std::istream& is, const std::string& expected) {
  uint32_t name_len = 0;
  is.read(reinterpret_cast<char*>(&name_len), sizeof name_len);
  if (!is) {
    throw std::runtime_error("checkpoint: truncated before section '" + expected + "'");
  }
  if (name_len > 256) throw std::runtime_error("checkpoint: corrupt section name length");
  std::string name(name_len, '\0');
  is.read(name.data(), name_len);
  uint64_t payload_len = 0;
  is.read(reinterpret_cast<char*>(&payload_len), sizeof payload_len);
  if (!is) {
    throw std::runtime_error("checkpoint: truncated before section '" + expected + "'");
  }
  if (name != expected) {
    throw std::runtime_error("checkpoint: expected section '" + expected + "', found '" + name +
                             "'");
  }
  std::string payload(payload_len, '\0');
  is.read(payload.data(), static_cast<std::streamsize>(payload_len));
  if (!is) throw std::runtime_error("checkpoint: truncated in section '" + expected + "'");
  return payload;
}

void append_metrics_row(std::ostream& os, const IterationStats& s, uint64_t seed) {
  char buf[1024];
  std::snprintf(
      buf, sizeof buf,
      "%lld,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
      "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%lld,%llu\n",
      s.iter, s.env_steps, s.policy.policy_loss, s.policy.value_loss, s.policy.entropy,
      s.adm.total, s.adm.action, s.adm.cell, s.adm.ent, s.adm.accuracy, s.reward_ext_mean,
      s.reward_shaped_mean, s.rplus_mean, s.rplus_min, s.rplus_max, s.episodes,
      s.score_window_mean, s.score_max_mean, s.distance_mean, s.distance_w100, s.ari, s.clusters,
      s.distinct_psi, static_cast<unsigned long long>(seed));
  os << buf;
}

// cur blended with a red-toned attention heat, cell-wise over the frame
void write_ppm_overlay(const std::string& path, const Tensor& frame, const Tensor& alpha,
                       int grid) {
  const int H = frame.dim(0), W = frame.dim(1);
  double amax = 0.0;
  for (size_t i = 0; i < alpha.size(); ++i) amax = std::max(amax, alpha[i]);
  if (amax <= 0.0) amax = 1.0;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("export: cannot open '" + path + "'");
  os << "P6\n" << W << " " << H << "\n255\n";
  std::string bytes;
  bytes.reserve(static_cast<size_t>(H) * W * 3);
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      const int cell = (i * grid / H) * grid + (j * grid / W);
      const double a = alpha[static_cast<size_t>(cell)] / amax;
      const size_t p = (static_cast<size_t>(i) * W + j) * 3;
      const double rgb[3] = {0.6 * frame[p] + 0.4 * a, 0.6 * frame[p + 1] + 0.08 * a,
                             0.6 * frame[p + 2]};
      for (double v : rgb) {
        bytes.push_back(static_cast<char>(
            std::clamp(static_cast<long>(std::lround(v * 255.0)), 0L, 255L)));
      }
    }
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

Runner::Runner(const ExperimentConfig& cfg)
    : cfg_(cfg),
      world_cfg_(make_world_config(cfg)),
      trainer_(make_trainer_config(cfg)),
      policy_(agent::policy_config_for_frame(world_cfg_.frame_px),
              child_seed(cfg.run.seed, "policy/init")),
      adm_(make_adm_config(cfg), child_seed(cfg.run.seed, "adm/init")),
      projector_(make_projector_config(cfg), child_seed(cfg.run.seed, "projector")),
      tau_(resolve_tau(cfg, world_cfg_, projector_)),
      clusters_(tau_),
      psi_(make_psi_config(cfg)),
      collector_(world_cfg_, trainer_, adm_.grid(), child_seed(cfg.run.seed, "collector")),
      shuffle_rng_(child_seed(cfg.run.seed, "ppo/shuffle")) {
  validate_config(cfg_);
  ari_clusters_.reserve(kAriRing);
  ari_rooms_.reserve(kAriRing);
}

long long Runner::env_steps() const { return collector_.env_steps(); }

int Runner::truth_to_attention_cell(int world_cell) const {
  const int cell_px = world_cfg_.frame_px / world_cfg_.grid;
  const int px = world_cell * cell_px + cell_px / 2;
  return eval::rescale_cell(px, world_cfg_.frame_px, adm_.grid());
}

void Runner::refresh_ari() {
  if (ari_clusters_.size() >= 2) {
    last_ari_ = eval::adjusted_rand_index(ari_clusters_, ari_rooms_);
  }
}

IterationStats Runner::train_iteration() {
  const long long it = iter_ + 1;
  IterationStats s;

  agent::RolloutBuffer buf = stage(it, "collect", [&] {
    return collector_.collect(policy_, adm_, projector_, clusters_, counter_, psi_);
  });

  const size_t n = buf.size();
  double ext = 0.0, shaped = 0.0, rp = 0.0, dist = 0.0;
  double rp_min = std::numeric_limits<double>::infinity(), rp_max = -rp_min;
  for (size_t i = 0; i < n; ++i) {
    ext += buf.r_ext[i];
    shaped += buf.shaped_rewards[i];
    rp += buf.r_plus[i];
    rp_min = std::min(rp_min, buf.r_plus[i]);
    rp_max = std::max(rp_max, buf.r_plus[i]);
    const double tc = truth_to_attention_cell(buf.truth_col[i]);
    const double tr = truth_to_attention_cell(buf.truth_row[i]);
    const double d = eval::localization_distance(
        {static_cast<double>(buf.pred_x[i]), static_cast<double>(buf.pred_y[i])}, {tc, tr});
    dist += d;
    dist_window_.push(d);
    if (static_cast<int>(ari_clusters_.size()) < kAriRing) {
      ari_clusters_.push_back(buf.psi[i].c);
      ari_rooms_.push_back(buf.truth_room[i]);
    } else {
      ari_clusters_[static_cast<size_t>(ari_next_)] = buf.psi[i].c;
      ari_rooms_[static_cast<size_t>(ari_next_)] = buf.truth_room[i];
      ari_next_ = (ari_next_ + 1) % kAriRing;
    }
  }
  for (const auto& [ret, steps] : collector_.drain_episode_returns()) {
    tracker_.record_episode(ret, steps);
  }

  if (trainer_.algorithm == agent::Algorithm::kA2C) {
    agent::Returns ret = stage(it, "returns", [&] {
      return agent::compute_returns(buf, trainer_.gamma, agent::ReturnMode::kNStep);
    });
    s.policy = stage(it, "policy-update", [&] { return a2c_update(policy_, buf, ret, trainer_); });
  } else if (trainer_.algorithm == agent::Algorithm::kPpo) {
    agent::Returns ret = stage(it, "returns", [&] {
      return agent::compute_returns(buf, trainer_.gamma, agent::ReturnMode::kGae,
                                    trainer_.gae_lambda);
    });
    s.policy = stage(it, "policy-update",
                     [&] { return ppo_update(policy_, buf, ret, trainer_, shuffle_rng_); });
  }  // kRandom: the policy stays untouched

  s.adm = stage(it, "adm-update", [&] { return adm_.train_step(buf.adm_batch()); });

  iter_ = it;
  if (iter_ % cfg_.run.eval_cadence == 0) refresh_ari();

  s.iter = iter_;
  s.env_steps = collector_.env_steps();
  s.reward_ext_mean = ext / static_cast<double>(n);
  s.reward_shaped_mean = shaped / static_cast<double>(n);
  s.rplus_mean = rp / static_cast<double>(n);
  s.rplus_min = rp_min;
  s.rplus_max = rp_max;
  s.episodes = tracker_.episodes();
  s.score_window_mean = tracker_.window_mean();
  s.score_max_mean = tracker_.max_mean();
  s.distance_mean = dist / static_cast<double>(n);
  s.distance_w100 = dist_window_.mean();
  s.ari = last_ari_;
  s.clusters = clusters_.size();
  s.distinct_psi = static_cast<long long>(counter_.distinct());
  return s;
}

RunSummary Runner::current_summary(bool completed) const {
  RunSummary sum;
  sum.max_mean_score = tracker_.max_mean();
  sum.final_distance = dist_window_.mean();
  sum.final_ari = last_ari_;
  sum.iterations = iter_;
  sum.env_steps = collector_.env_steps();
  sum.episodes = tracker_.episodes();
  sum.completed = completed;
  sum.tau = tau_;
  return sum;
}

RunArtifacts Runner::run(const Callback& cb) {
  fs::create_directories(cfg_.run.out_dir);
  RunArtifacts art;
  art.metrics_path = cfg_.run.out_dir + "/metrics.csv";
  art.walltime_path = cfg_.run.out_dir + "/walltime.csv";
  art.checkpoint_path = cfg_.run.out_dir + "/checkpoint_final.bin";
  art.config_path = cfg_.run.out_dir + "/config.json";
  art.summary_path = cfg_.run.out_dir + "/summary.json";

  {
    std::ofstream cj(art.config_path, std::ios::trunc);
    cj << serialize_config(cfg_) << "\n";
    if (!cj) throw std::runtime_error("run: cannot write '" + art.config_path + "'");
  }

  const bool fresh = iter_ == 0;
  const bool metrics_existed = fs::exists(art.metrics_path);
  std::ofstream metrics(art.metrics_path,
                        fresh ? std::ios::trunc : std::ios::app);
  std::ofstream wall(art.walltime_path, fresh ? std::ios::trunc : std::ios::app);
  if (!metrics || !wall) {
    throw std::runtime_error("run: cannot open metrics files under '" + cfg_.run.out_dir + "'");
  }
  if (fresh || !metrics_existed) {
    metrics << kMetricsHeader << "\n";
    wall << "iter,env_step,seconds\n";
  }

  while (collector_.env_steps() < cfg_.run.total_env_steps) {
    const auto t0 = std::chrono::steady_clock::now();
    IterationStats s = train_iteration();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    append_metrics_row(metrics, s, cfg_.run.seed);
    metrics.flush();
    char wbuf[128];
    std::snprintf(wbuf, sizeof wbuf, "%lld,%lld,%.6f\n", s.iter, s.env_steps, secs);
    wall << wbuf;
    wall.flush();

    if (cfg_.run.checkpoint_cadence > 0 && iter_ % cfg_.run.checkpoint_cadence == 0) {
      save_checkpoint(cfg_.run.out_dir + "/checkpoint_" + std::to_string(iter_) + ".bin");
    }
    if (cb && !cb(s)) break;
  }

  const bool completed = collector_.env_steps() >= cfg_.run.total_env_steps;
  art.summary = current_summary(completed);
  save_checkpoint(art.checkpoint_path);

  nlohmann::json sj;
  sj["max_mean_score"] = art.summary.max_mean_score;
  sj["final_distance"] = art.summary.final_distance;
  sj["final_ari"] = art.summary.final_ari;
  sj["iterations"] = art.summary.iterations;
  sj["env_steps"] = art.summary.env_steps;
  sj["episodes"] = art.summary.episodes;
  sj["completed"] = art.summary.completed;
  sj["tau"] = art.summary.tau;
  std::ofstream sf(art.summary_path, std::ios::trunc);
  sf << sj.dump(2) << "\n";
  if (!sf) throw std::runtime_error("run: cannot write '" + art.summary_path + "'");
  return art;
}

void Runner::save_checkpoint(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  os.write("COEXCKP1", 8);

  write_section(os, "config", serialize_config(cfg_));

  std::ostringstream progress;
  put_pod<int64_t>(progress, iter_);
  put_pod<double>(progress, tau_);
  put_pod<double>(progress, last_ari_);
  write_section(os, "progress", progress.str());

  std::ostringstream policy;
  nd::save_params_full(policy, policy_.params());
  write_section(os, "policy", policy.str());

  std::ostringstream adm;
  nd::save_params_full(adm, adm_.params());
  write_section(os, "adm", adm.str());

  std::ostringstream clusters;
  clusters_.save(clusters);
  write_section(os, "clusters", clusters.str());

  std::ostringstream counter;
  counter_.save(counter);
  write_section(os, "counter", counter.str());

  std::ostringstream collector;
  collector_.save(collector);
  write_section(os, "collector", collector.str());

  std::ostringstream tracker;
  tracker_.save(tracker);
  write_section(os, "tracker", tracker.str());

  std::ostringstream dwin;
  dist_window_.save(dwin);
  write_section(os, "distance-window", dwin.str());

  std::ostringstream ring;
  put_pod<uint64_t>(ring, ari_clusters_.size());
  for (int v : ari_clusters_) put_pod<int32_t>(ring, v);
  for (int v : ari_rooms_) put_pod<int32_t>(ring, v);
  put_pod<int32_t>(ring, ari_next_);
  write_section(os, "ari-ring", ring.str());

  std::ostringstream rng;
  shuffle_rng_.save(rng);
  write_section(os, "shuffle-rng", rng.str());

  if (!os) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

void Runner::load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != "COEXCKP1") {
    throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint file");
  }

  const std::string stored_text = read_section(is, "config");
  ExperimentConfig stored = parse_config(stored_text);
  {
    // the budget, output dir, and checkpoint cadence may change on resume;
    // everything else must match or the restored state is meaningless
    ExperimentConfig a = cfg_, b = stored;
    a.run.total_env_steps = b.run.total_env_steps = 0;
    a.run.out_dir = b.run.out_dir = "";
    a.run.checkpoint_cadence = b.run.checkpoint_cadence = 0;
    if (!(a == b)) {
      throw std::runtime_error(
          "checkpoint: stored configuration does not match the current one");
    }
  }

  std::istringstream progress(read_section(is, "progress"));
  const long long it = get_pod<int64_t>(progress, "progress.iter");
  const double tau = get_pod<double>(progress, "progress.tau");
  const double ari = get_pod<double>(progress, "progress.ari");
  if (tau != tau_) {
    throw std::runtime_error("checkpoint: stored tau differs from the calibrated one");
  }

  std::istringstream policy(read_section(is, "policy"));
  nd::load_params_full(policy, policy_.params());

  std::istringstream adm(read_section(is, "adm"));
  nd::load_params_full(adm, adm_.params());

  std::istringstream clusters(read_section(is, "clusters"));
  clusters_.load(clusters);

  std::istringstream counter(read_section(is, "counter"));
  counter_.load(counter);

  std::istringstream collector(read_section(is, "collector"));
  collector_.load(collector);

  std::istringstream tracker(read_section(is, "tracker"));
  tracker_.load(tracker);

  std::istringstream dwin(read_section(is, "distance-window"));
  dist_window_.load(dwin);

  std::istringstream ring(read_section(is, "ari-ring"));
  const uint64_t ring_n = get_pod<uint64_t>(ring, "ari-ring.count");
  if (ring_n > static_cast<uint64_t>(kAriRing)) {
    throw std::runtime_error("checkpoint: corrupt ari-ring size");
  }
  ari_clusters_.assign(ring_n, 0);
  ari_rooms_.assign(ring_n, 0);
  for (uint64_t i = 0; i < ring_n; ++i) {
    ari_clusters_[i] = get_pod<int32_t>(ring, "ari-ring.clusters");
  }
  for (uint64_t i = 0; i < ring_n; ++i) {
    ari_rooms_[i] = get_pod<int32_t>(ring, "ari-ring.rooms");
  }
  ari_next_ = get_pod<int32_t>(ring, "ari-ring.cursor");

  std::istringstream rng(read_section(is, "shuffle-rng"));
  shuffle_rng_.load(rng);

  iter_ = it;
  last_ari_ = ari;
}

Runner::EvalReport Runner::evaluate(long long env_steps) {
  if (env_steps < 1) throw std::invalid_argument("evaluate: need a positive step budget");
  agent::Collector col(world_cfg_, trainer_, adm_.grid(),
                       child_seed(cfg_.run.seed, "eval/collector"));
  // copies: evaluation must not disturb training state
  abstraction::ClusterSet clusters = clusters_;
  abstraction::VisitCounter counter = counter_;

  EvalReport rep;
  std::vector<int> ac, ar;
  double dist = 0.0, ret_sum = 0.0;
  long long locs = 0;
  while (col.env_steps() < env_steps) {
    agent::RolloutBuffer buf = col.collect(policy_, adm_, projector_, clusters, counter, psi_);
    for (size_t i = 0; i < buf.size(); ++i) {
      const double tc = truth_to_attention_cell(buf.truth_col[i]);
      const double tr = truth_to_attention_cell(buf.truth_row[i]);
      dist += eval::localization_distance(
          {static_cast<double>(buf.pred_x[i]), static_cast<double>(buf.pred_y[i])}, {tc, tr});
      ++locs;
      ac.push_back(buf.psi[i].c);
      ar.push_back(buf.truth_room[i]);
    }
    for (const auto& [ret, steps] : col.drain_episode_returns()) {
      ret_sum += ret;
      ++rep.episodes;
    }
  }
  rep.env_steps = col.env_steps();
  rep.mean_return = rep.episodes > 0 ? ret_sum / static_cast<double>(rep.episodes) : 0.0;
  rep.distance_mean = locs > 0 ? dist / static_cast<double>(locs) : 0.0;
  rep.ari = ac.size() >= 2 ? eval::adjusted_rand_index(ac, ar) : 0.0;
  return rep;
}

void Runner::export_attention(const std::string& dir, int steps) {
  if (steps < 1) throw std::invalid_argument("export: need a positive step count");
  fs::create_directories(dir);
  world::World env(world_cfg_);
  Rng env_rng(child_seed(cfg_.run.seed, "export/env"));
  Rng act_rng(child_seed(cfg_.run.seed, "export/actions"));
  const int G = adm_.grid();
  const int HW = G * G;

  std::ofstream att(dir + "/attention.csv", std::ios::trunc);
  std::ofstream loc(dir + "/localization.csv", std::ios::trunc);
  if (!att || !loc) throw std::runtime_error("export: cannot write under '" + dir + "'");
  att << adm::heatmap_csv_header(G, G) << "\n";
  loc << "step,executed,truth_row,truth_col,pred_x,pred_y\n";

  world::Frame prev = env.reset(env_rng.next_u64());
  for (int step = 0; step < steps; ++step) {
    const int a = act_rng.next_int(world::kNumActions);
    world::StepResult r = env.step(a);
    adm::ForwardResult f =
        adm_.forward(adm::stack_frames({prev}), adm::stack_frames({r.obs}));
    Tensor alpha({HW}, std::vector<double>(f.alpha.data(), f.alpha.data() + HW));
    adm::heatmap_csv_row(att, step, 0, alpha);
    const int idx = nd::argmax_last(alpha.data(), HW);
    loc << step << ',' << r.info.executed_action << ',' << r.info.avatar_row << ','
        << r.info.avatar_col << ',' << idx % G << ',' << idx / G << "\n";

    char name[32];
    std::snprintf(name, sizeof name, "/frame_%04d.ppm", step);
    write_ppm_overlay(dir + name, r.obs, alpha, G);

    prev = r.done ? env.reset(env_rng.next_u64()) : r.obs;
  }
}

std::vector<std::string> ablation_variants(const std::string& axis) {
  if (axis == "psi-components") return {"c", "c-R", "xy-c", "xy-c-R"};
  if (axis == "adm-losses") return {"action", "action-cell", "action-ent", "action-cell-ent"};
  throw std::invalid_argument("ablation: unknown axis '" + axis +
                              "' (expected psi-components or adm-losses)");
}

ExperimentConfig apply_ablation_variant(const ExperimentConfig& base, const std::string& axis,
                                        const std::string& variant) {
  const std::vector<std::string> known = ablation_variants(axis);
  if (std::find(known.begin(), known.end(), variant) == known.end()) {
    throw std::invalid_argument("ablation: variant '" + variant + "' is not on axis '" + axis +
                                "'");
  }
  ExperimentConfig cfg = base;
  if (axis == "psi-components") {
    cfg.abstraction.psi_xy = variant == "xy-c" || variant == "xy-c-R";
    cfg.abstraction.psi_reward = variant == "c-R" || variant == "xy-c-R";
  } else {
    cfg.adm.use_cell_loss = variant == "action-cell" || variant == "action-cell-ent";
    cfg.adm.use_ent_loss = variant == "action-ent" || variant == "action-cell-ent";
  }
  return cfg;
}

AblationResult run_ablation_suite(const ExperimentConfig& base, const std::string& axis,
                                  const std::vector<uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("ablation: need at least one seed");
  AblationResult res;
  res.axis = axis;
  for (const std::string& variant : ablation_variants(axis)) {
    for (uint64_t seed : seeds) {
      ExperimentConfig cfg = apply_ablation_variant(base, axis, variant);
      cfg.run.seed = seed;
      cfg.run.out_dir =
          base.run.out_dir + "/" + variant + "/seed-" + std::to_string(seed);
      Runner runner(cfg);
      RunArtifacts art = runner.run();
      res.rows.push_back({variant, seed, art.summary});
    }
  }

  fs::create_directories(base.run.out_dir);
  res.table_path = base.run.out_dir + "/ablation.csv";
  std::ofstream table(res.table_path, std::ios::trunc);
  if (!table) throw std::runtime_error("ablation: cannot write '" + res.table_path + "'");
  table << "axis,variant,seed,max_mean_score,final_distance,final_ari,env_steps,episodes\n";
  for (const AblationRow& row : res.rows) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%s,%llu,%.17g,%.17g,%.17g,%lld,%lld\n", axis.c_str(),
                  row.variant.c_str(), static_cast<unsigned long long>(row.seed),
                  row.summary.max_mean_score, row.summary.final_distance, row.summary.final_ari,
                  row.summary.env_steps, row.summary.episodes);
    table << buf;
  }
  return res;
}

}  // namespace coex::cli
