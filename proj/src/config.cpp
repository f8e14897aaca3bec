#include "coex/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "coex/world_presets.hpp"
#include "json.hpp"

namespace coex::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

// --- typed leaf readers (strict about JSON types, so "true" never becomes 1)

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail("'" + path + "' must be an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail("unknown key '" + (path.empty() ? it.key() : path + "." + it.key()) + "'");
  }
}

void read_num(const json& j, const std::string& path, const char* key, double& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number()) fail("'" + path + "." + key + "' must be a number");
  out = v.get<double>();
}

void read_int(const json& j, const std::string& path, const char* key, int& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail("'" + path + "." + key + "' must be an integer");
  out = v.get<int>();
}

void read_ll(const json& j, const std::string& path, const char* key, long long& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail("'" + path + "." + key + "' must be an integer");
  out = v.get<long long>();
}

void read_u64(const json& j, const std::string& path, const char* key, uint64_t& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0))) {
    fail("'" + path + "." + key + "' must be a nonnegative integer");
  }
  out = v.get<uint64_t>();
}

void read_bool(const json& j, const std::string& path, const char* key, bool& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_boolean()) fail("'" + path + "." + key + "' must be a boolean");
  out = v.get<bool>();
}

void read_str(const json& j, const std::string& path, const char* key, std::string& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_string()) fail("'" + path + "." + key + "' must be a string");
  out = v.get<std::string>();
}

void read_opt_num(const json& j, const std::string& path, const char* key,
                  std::optional<double>& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (v.is_null()) {
    out.reset();
    return;
  }
  if (!v.is_number()) fail("'" + path + "." + key + "' must be a number or null");
  out = v.get<double>();
}

void read_opt_int(const json& j, const std::string& path, const char* key,
                  std::optional<int>& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (v.is_null()) {
    out.reset();
    return;
  }
  if (!v.is_number_integer()) fail("'" + path + "." + key + "' must be an integer or null");
  out = v.get<int>();
}

// --- section conversions

json env_to_json(const EnvSection& e) {
  json j;
  j["preset"] = e.preset;
  j["p_sticky"] = e.p_sticky ? json(*e.p_sticky) : json(nullptr);
  j["max_steps"] = e.max_steps ? json(*e.max_steps) : json(nullptr);
  j["distractors_per_room"] =
      e.distractors_per_room ? json(*e.distractors_per_room) : json(nullptr);
  return j;
}

EnvSection env_from_json(const json& j) {
  EnvSection e;
  expect_object(j, "env");
  check_keys(j, "env", {"preset", "p_sticky", "max_steps", "distractors_per_room"});
  read_str(j, "env", "preset", e.preset);
  read_opt_num(j, "env", "p_sticky", e.p_sticky);
  read_opt_int(j, "env", "max_steps", e.max_steps);
  read_opt_int(j, "env", "distractors_per_room", e.distractors_per_room);
  return e;
}

json trainer_to_json(const TrainerSection& t) {
  json j;
  j["algorithm"] = t.algorithm;
  j["gamma"] = t.gamma;
  j["entropy_weight"] = t.entropy_weight;
  j["beta1"] = t.beta1;
  j["beta2"] = t.beta2;
  j["actors"] = t.actors;
  j["rollout"] = t.rollout;
  j["rmsprop_lr"] = t.rmsprop_lr;
  j["adam_lr"] = t.adam_lr;
  j["gae_lambda"] = t.gae_lambda;
  j["clip_eps"] = t.clip_eps;
  j["ppo_epochs"] = t.ppo_epochs;
  j["ppo_minibatches"] = t.ppo_minibatches;
  j["normalize_advantage"] = t.normalize_advantage;
  j["normalize_reward"] = t.normalize_reward;
  j["grad_clip"] = t.grad_clip;
  return j;
}

TrainerSection trainer_from_json(const json& j) {
  TrainerSection t;
  expect_object(j, "trainer");
  check_keys(j, "trainer",
             {"algorithm", "gamma", "entropy_weight", "beta1", "beta2", "actors", "rollout",
              "rmsprop_lr", "adam_lr", "gae_lambda", "clip_eps", "ppo_epochs", "ppo_minibatches",
              "normalize_advantage", "normalize_reward", "grad_clip"});
  read_str(j, "trainer", "algorithm", t.algorithm);
  read_num(j, "trainer", "gamma", t.gamma);
  read_num(j, "trainer", "entropy_weight", t.entropy_weight);
  read_num(j, "trainer", "beta1", t.beta1);
  read_num(j, "trainer", "beta2", t.beta2);
  read_int(j, "trainer", "actors", t.actors);
  read_int(j, "trainer", "rollout", t.rollout);
  read_num(j, "trainer", "rmsprop_lr", t.rmsprop_lr);
  read_num(j, "trainer", "adam_lr", t.adam_lr);
  read_num(j, "trainer", "gae_lambda", t.gae_lambda);
  read_num(j, "trainer", "clip_eps", t.clip_eps);
  read_int(j, "trainer", "ppo_epochs", t.ppo_epochs);
  read_int(j, "trainer", "ppo_minibatches", t.ppo_minibatches);
  read_bool(j, "trainer", "normalize_advantage", t.normalize_advantage);
  read_bool(j, "trainer", "normalize_reward", t.normalize_reward);
  read_num(j, "trainer", "grad_clip", t.grad_clip);
  return t;
}

json adm_to_json(const AdmSection& a) {
  json j;
  j["lambda_ent"] = a.lambda_ent;
  j["use_softmax"] = a.use_softmax;
  j["use_cell_loss"] = a.use_cell_loss;
  j["use_ent_loss"] = a.use_ent_loss;
  j["learning_rate"] = a.learning_rate;
  return j;
}

AdmSection adm_from_json(const json& j) {
  AdmSection a;
  expect_object(j, "adm");
  check_keys(j, "adm",
             {"lambda_ent", "use_softmax", "use_cell_loss", "use_ent_loss", "learning_rate"});
  read_num(j, "adm", "lambda_ent", a.lambda_ent);
  read_bool(j, "adm", "use_softmax", a.use_softmax);
  read_bool(j, "adm", "use_cell_loss", a.use_cell_loss);
  read_bool(j, "adm", "use_ent_loss", a.use_ent_loss);
  read_num(j, "adm", "learning_rate", a.learning_rate);
  return a;
}

json abstraction_to_json(const AbstractionSection& a) {
  json j;
  j["tau"] = a.tau;
  j["tau_frames_per_room"] = a.tau_frames_per_room;
  j["dim"] = a.dim;
  j["psi_xy"] = a.psi_xy;
  j["psi_reward"] = a.psi_reward;
  return j;
}

AbstractionSection abstraction_from_json(const json& j) {
  AbstractionSection a;
  expect_object(j, "abstraction");
  check_keys(j, "abstraction", {"tau", "tau_frames_per_room", "dim", "psi_xy", "psi_reward"});
  read_num(j, "abstraction", "tau", a.tau);
  read_int(j, "abstraction", "tau_frames_per_room", a.tau_frames_per_room);
  read_int(j, "abstraction", "dim", a.dim);
  read_bool(j, "abstraction", "psi_xy", a.psi_xy);
  read_bool(j, "abstraction", "psi_reward", a.psi_reward);
  return a;
}

json run_to_json(const RunSection& r) {
  json j;
  j["total_env_steps"] = r.total_env_steps;
  j["eval_cadence"] = r.eval_cadence;
  j["checkpoint_cadence"] = r.checkpoint_cadence;
  j["seed"] = r.seed;
  j["out_dir"] = r.out_dir;
  return j;
}

RunSection run_from_json(const json& j) {
  RunSection r;
  expect_object(j, "run");
  check_keys(j, "run",
             {"total_env_steps", "eval_cadence", "checkpoint_cadence", "seed", "out_dir"});
  read_ll(j, "run", "total_env_steps", r.total_env_steps);
  read_int(j, "run", "eval_cadence", r.eval_cadence);
  read_int(j, "run", "checkpoint_cadence", r.checkpoint_cadence);
  read_u64(j, "run", "seed", r.seed);
  read_str(j, "run", "out_dir", r.out_dir);
  return r;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["env"] = env_to_json(cfg.env);
  j["trainer"] = trainer_to_json(cfg.trainer);
  j["adm"] = adm_to_json(cfg.adm);
  j["abstraction"] = abstraction_to_json(cfg.abstraction);
  j["run"] = run_to_json(cfg.run);
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  expect_object(j, "");
  check_keys(j, "", {"env", "trainer", "adm", "abstraction", "run"});
  if (j.contains("env")) cfg.env = env_from_json(j.at("env"));
  if (j.contains("trainer")) cfg.trainer = trainer_from_json(j.at("trainer"));
  if (j.contains("adm")) cfg.adm = adm_from_json(j.at("adm"));
  if (j.contains("abstraction")) cfg.abstraction = abstraction_from_json(j.at("abstraction"));
  if (j.contains("run")) cfg.run = run_from_json(j.at("run"));
  return cfg;
}

// Sets doc[path...] = value, requiring every path segment to already exist in
// the fully-populated default document (catches typos before they silently
// create new keys).
void apply_override(json& doc, const std::string& spec) {
  const size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) fail("override '" + spec + "' is not KEY.PATH=VALUE");
  const std::string path = spec.substr(0, eq);
  const std::string value_text = spec.substr(eq + 1);

  std::vector<std::string> segments;
  std::stringstream ss(path);
  std::string seg;
  while (std::getline(ss, seg, '.')) {
    if (seg.empty()) fail("override path '" + path + "' has an empty segment");
    segments.push_back(seg);
  }
  if (segments.empty()) fail("override '" + spec + "' has no path");

  json* node = &doc;
  for (size_t i = 0; i + 1 < segments.size(); ++i) {
    if (!node->is_object() || !node->contains(segments[i])) {
      fail("override path '" + path + "' does not name a config leaf");
    }
    node = &node->at(segments[i]);
  }
  if (!node->is_object() || !node->contains(segments.back())) {
    fail("override path '" + path + "' does not name a config leaf");
  }
  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::parse_error&) {
    value = value_text;  // bare strings like corridor need no quotes
  }
  if (value.is_object() || value.is_array()) {
    fail("override '" + spec + "' must set a scalar value");
  }
  (*node)[segments.back()] = value;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2); }

ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  // validate the document's own keys first, then merge into a full default
  // document so overrides can navigate every known path
  ExperimentConfig parsed = config_from_json(j);
  if (overrides.empty()) return parsed;

  json doc = config_to_json(parsed);
  for (const std::string& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

ExperimentConfig load_config_file(const std::string& path,
                                  const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

void validate_config(const ExperimentConfig& cfg) {
  make_world_config(cfg);  // throws on unknown preset or bad overrides
  agent::validate_trainer_config(make_trainer_config(cfg));
  adm::encoder_grid(make_adm_config(cfg));  // throws if the stack cannot fit
  if (cfg.adm.lambda_ent < 0.0) fail("adm.lambda_ent must be nonnegative");
  if (cfg.adm.learning_rate <= 0.0) fail("adm.learning_rate must be positive");
  if (cfg.abstraction.tau > 0.0 && cfg.abstraction.tau_frames_per_room < 0) {
    fail("abstraction.tau_frames_per_room must be nonnegative");
  }
  if (cfg.abstraction.tau <= 0.0 && cfg.abstraction.tau_frames_per_room < 2) {
    fail("abstraction.tau_frames_per_room must be at least 2 to calibrate tau");
  }
  if (cfg.abstraction.dim < 1) fail("abstraction.dim must be positive");
  if (cfg.run.total_env_steps < 1) fail("run.total_env_steps must be positive");
  if (cfg.run.eval_cadence < 1) fail("run.eval_cadence must be positive");
  if (cfg.run.checkpoint_cadence < 0) fail("run.checkpoint_cadence must be nonnegative");
  if (cfg.run.out_dir.empty()) fail("run.out_dir must not be empty");
}

world::WorldConfig make_world_config(const ExperimentConfig& cfg) {
  world::WorldConfig w;
  if (cfg.env.preset == "corridor") {
    w = world::corridor_config();
  } else if (cfg.env.preset == "four-rooms-sparse") {
    w = world::four_rooms_sparse_config();
  } else if (cfg.env.preset == "key-door") {
    w = world::key_door_config();
  } else {
    fail("unknown env.preset '" + cfg.env.preset + "'");
  }
  if (cfg.env.p_sticky) {
    if (*cfg.env.p_sticky < 0.0 || *cfg.env.p_sticky >= 1.0) {
      fail("env.p_sticky must lie in [0,1)");
    }
    w.p_sticky = *cfg.env.p_sticky;
  }
  if (cfg.env.max_steps) {
    if (*cfg.env.max_steps < 1) fail("env.max_steps must be positive");
    w.max_steps = *cfg.env.max_steps;
  }
  if (cfg.env.distractors_per_room) {
    if (*cfg.env.distractors_per_room < 0) fail("env.distractors_per_room must be nonnegative");
    w.distractors_per_room = *cfg.env.distractors_per_room;
  }
  return w;
}

agent::TrainerConfig make_trainer_config(const ExperimentConfig& cfg) {
  agent::TrainerConfig t;
  if (cfg.trainer.algorithm == "a2c") {
    t.algorithm = agent::Algorithm::kA2C;
  } else if (cfg.trainer.algorithm == "ppo") {
    t.algorithm = agent::Algorithm::kPpo;
  } else if (cfg.trainer.algorithm == "random") {
    t.algorithm = agent::Algorithm::kRandom;
  } else {
    fail("unknown trainer.algorithm '" + cfg.trainer.algorithm + "'");
  }
  t.gamma = cfg.trainer.gamma;
  t.entropy_weight = cfg.trainer.entropy_weight;
  t.beta1 = cfg.trainer.beta1;
  t.beta2 = cfg.trainer.beta2;
  t.actors = cfg.trainer.actors;
  t.rollout = cfg.trainer.rollout;
  t.rmsprop.lr = cfg.trainer.rmsprop_lr;
  t.adam.lr = cfg.trainer.adam_lr;
  t.gae_lambda = cfg.trainer.gae_lambda;
  t.clip_eps = cfg.trainer.clip_eps;
  t.ppo_epochs = cfg.trainer.ppo_epochs;
  t.ppo_minibatches = cfg.trainer.ppo_minibatches;
  t.normalize_advantage = cfg.trainer.normalize_advantage;
  t.normalize_reward = cfg.trainer.normalize_reward;
  t.grad_clip = cfg.trainer.grad_clip;
  return t;
}

adm::AdmConfig make_adm_config(const ExperimentConfig& cfg) {
  const world::WorldConfig w = make_world_config(cfg);
  adm::AdmConfig a = adm::adm_config_for_frame(w.frame_px);
  a.lambda_ent = cfg.adm.lambda_ent;
  a.use_softmax = cfg.adm.use_softmax;
  a.use_cell_loss = cfg.adm.use_cell_loss;
  a.use_ent_loss = cfg.adm.use_ent_loss;
  a.optimizer.lr = cfg.adm.learning_rate;
  return a;
}

abstraction::ProjectorConfig make_projector_config(const ExperimentConfig& cfg) {
  abstraction::ProjectorConfig p;
  p.dim = cfg.abstraction.dim;
  return p;
}

abstraction::PsiConfig make_psi_config(const ExperimentConfig& cfg) {
  abstraction::PsiConfig p;
  p.use_xy = cfg.abstraction.psi_xy;
  p.use_reward = cfg.abstraction.psi_reward;
  return p;
}

}  // namespace coex::cli
