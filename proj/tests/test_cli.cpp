#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "coex/runner.hpp"
#include "doctest.h"

using namespace coex;
namespace fs = std::filesystem;

namespace {

// unique scratch directory, removed on scope exit
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("coex-cli-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

long count_lines(const std::string& text) {
  long n = 0;
  for (char ch : text) n += ch == '\n';
  return n;
}

// small, fast experiment: 4 actors x 5-step rollouts on the default
// four-rooms world, fixed clustering threshold so startup skips calibration
cli::ExperimentConfig tiny_experiment(const std::string& out_dir, long long steps = 400) {
  cli::ExperimentConfig cfg;
  cfg.trainer.actors = 4;
  cfg.abstraction.tau = 20.0;
  cfg.run.total_env_steps = steps;
  cfg.run.eval_cadence = 5;
  cfg.run.seed = 7;
  cfg.run.out_dir = out_dir;
  return cfg;
}

}  // namespace

TEST_CASE("config round-trips through its JSON form") {
  cli::ExperimentConfig cfg;
  cfg.env.preset = "corridor";
  cfg.env.p_sticky = 0.3;
  cfg.trainer.algorithm = "ppo";
  cfg.trainer.beta2 = 0.0;
  cfg.adm.use_cell_loss = false;
  cfg.abstraction.psi_xy = false;
  cfg.run.seed = 99;
  cfg.run.out_dir = "elsewhere";

  const std::string text = cli::serialize_config(cfg);
  cli::ExperimentConfig back = cli::parse_config(text);
  CHECK(back == cfg);

  cli::ExperimentConfig defaults;
  CHECK(cli::parse_config(cli::serialize_config(defaults)) == defaults);
  CHECK_FALSE(back == defaults);
}

TEST_CASE("parser rejects unknown keys with their dotted path") {
  CHECK_THROWS_WITH_AS(cli::parse_config("{\"trainer\": {\"gama\": 0.9}}"),
                       doctest::Contains("trainer.gama"), std::exception);
  CHECK_THROWS_WITH_AS(cli::parse_config("{\"speling\": {}}"), doctest::Contains("speling"),
                       std::exception);
  CHECK_THROWS_AS(cli::parse_config("[1,2]"), std::exception);
  CHECK_THROWS_AS(cli::parse_config("{\"trainer\": {\"gamma\": \"fast\"}}"), std::exception);
}

TEST_CASE("dotted overrides rewrite single leaves") {
  cli::ExperimentConfig cfg =
      cli::parse_config("{}", {"trainer.beta2=0", "env.preset=corridor", "run.seed=12",
                               "adm.use_softmax=true", "env.p_sticky=0.125"});
  CHECK(cfg.trainer.beta2 == 0.0);
  CHECK(cfg.env.preset == "corridor");  // bare string value
  CHECK(cfg.run.seed == 12);
  CHECK(cfg.adm.use_softmax);
  REQUIRE(cfg.env.p_sticky.has_value());
  CHECK(*cfg.env.p_sticky == 0.125);

  CHECK_THROWS_WITH_AS(cli::parse_config("{}", {"trainer.nope=1"}), doctest::Contains("nope"),
                       std::exception);
  CHECK_THROWS_AS(cli::parse_config("{}", {"trainer=1"}), std::exception);
  CHECK_THROWS_AS(cli::parse_config("{}", {"trainer.gamma"}), std::exception);
  CHECK_THROWS_AS(cli::parse_config("{}", {"trainer.gamma={\"a\":1}"}), std::exception);
}

TEST_CASE("validation rejects unusable experiments") {
  auto broken = [](auto&& mutate) {
    cli::ExperimentConfig cfg;
    mutate(cfg);
    return cfg;
  };
  CHECK_THROWS_AS(
      cli::validate_config(broken([](auto& c) { c.env.preset = "open-plain"; })),
      std::invalid_argument);
  CHECK_THROWS_AS(cli::validate_config(broken([](auto& c) { c.trainer.gamma = 1.5; })),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::validate_config(broken([](auto& c) { c.run.total_env_steps = 0; })),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::validate_config(broken([](auto& c) { c.run.eval_cadence = 0; })),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::validate_config(broken([](auto& c) { c.run.out_dir = ""; })),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::validate_config(broken([](auto& c) { c.adm.learning_rate = 0.0; })),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::validate_config(broken([](auto& c) {
                    c.abstraction.tau = 0.0;  // calibration needs frames
                    c.abstraction.tau_frames_per_room = 1;
                  })),
                  std::invalid_argument);
  CHECK_NOTHROW(cli::validate_config(cli::ExperimentConfig{}));
}

TEST_CASE("training runs emit complete, monotone metrics") {
  TempDir tmp("metrics");
  cli::ExperimentConfig cfg = tiny_experiment(tmp.str() + "/run", 200);

  std::vector<cli::IterationStats> seen;
  cli::Runner runner(cfg);
  CHECK(runner.tau() == 20.0);
  cli::RunArtifacts art = runner.run([&](const cli::IterationStats& s) {
    seen.push_back(s);
    return true;
  });

  // 4 actors x 5 steps = 20 env steps per iteration; 200-step budget = 10 iterations
  CHECK(seen.size() == 10);
  CHECK(art.summary.completed);
  CHECK(art.summary.iterations == 10);
  CHECK(art.summary.env_steps == 200);
  CHECK(art.summary.tau == 20.0);
  for (size_t i = 0; i < seen.size(); ++i) {
    CHECK(seen[i].iter == static_cast<long long>(i + 1));
    CHECK(seen[i].env_steps == static_cast<long long>(20 * (i + 1)));
    CHECK(seen[i].rplus_min > 0.0);
    CHECK(seen[i].rplus_max <= 1.0);
    CHECK(seen[i].distance_w100 >= 0.0);
    CHECK(seen[i].clusters >= 1);
  }

  const std::string metrics = slurp(art.metrics_path);
  CHECK(count_lines(metrics) == 11);  // header + one row per iteration
  CHECK(metrics.rfind("iter,env_step,policy_loss", 0) == 0);
  const std::string wall = slurp(art.walltime_path);
  CHECK(count_lines(wall) == 11);
  CHECK(wall.rfind("iter,env_step,seconds", 0) == 0);
  CHECK(fs::exists(art.config_path));
  CHECK(fs::exists(art.summary_path));
  CHECK(fs::exists(art.checkpoint_path));
  CHECK(slurp(art.summary_path).find("\"completed\": true") != std::string::npos);

  // the saved config reproduces the experiment exactly
  CHECK(cli::parse_config(slurp(art.config_path)) == cfg);
}

TEST_CASE("callback can stop a run early") {
  TempDir tmp("early");
  cli::Runner runner(tiny_experiment(tmp.str() + "/run", 1000));
  cli::RunArtifacts art = runner.run([](const cli::IterationStats& s) { return s.iter < 3; });
  CHECK(art.summary.iterations == 3);
  CHECK(art.summary.env_steps == 60);
  CHECK_FALSE(art.summary.completed);
}

TEST_CASE("identical configs reproduce byte-identical artifacts") {
  TempDir tmp("repro");
  const std::string dir = tmp.str() + "/run";

  cli::Runner first(tiny_experiment(dir, 200));
  first.run();
  const std::string metrics1 = slurp(dir + "/metrics.csv");
  const std::string ckpt1 = slurp(dir + "/checkpoint_final.bin");

  cli::Runner second(tiny_experiment(dir, 200));  // same out_dir: files rewritten
  second.run();
  CHECK(slurp(dir + "/metrics.csv") == metrics1);
  CHECK(slurp(dir + "/checkpoint_final.bin") == ckpt1);
}

TEST_CASE("checkpoint round-trip: load restores the exact snapshot") {
  TempDir tmp("ckpt");
  cli::ExperimentConfig cfg = tiny_experiment(tmp.str() + "/run", 200);
  cli::Runner runner(cfg);
  runner.run();
  const std::string first = tmp.str() + "/a.bin";
  runner.save_checkpoint(first);

  cli::Runner fresh(cfg);
  fresh.load_checkpoint(first);
  CHECK(fresh.iterations() == 10);
  CHECK(fresh.env_steps() == 200);
  const std::string second = tmp.str() + "/b.bin";
  fresh.save_checkpoint(second);
  CHECK(slurp(first) == slurp(second));
}

TEST_CASE("resumed run matches the uninterrupted one byte for byte") {
  TempDir tmp("resume");
  const std::string full_dir = tmp.str() + "/full";
  const std::string split_dir = tmp.str() + "/split";

  cli::Runner full(tiny_experiment(full_dir, 400));
  full.run();

  cli::Runner half(tiny_experiment(split_dir, 200));
  half.run();

  cli::Runner rest(tiny_experiment(split_dir, 400));
  rest.load_checkpoint(split_dir + "/checkpoint_final.bin");
  CHECK(rest.env_steps() == 200);
  cli::RunArtifacts art = rest.run();
  CHECK(art.summary.env_steps == 400);
  CHECK(slurp(split_dir + "/metrics.csv") == slurp(full_dir + "/metrics.csv"));
}

TEST_CASE("checkpoint loader names what is wrong") {
  TempDir tmp("badckpt");
  cli::ExperimentConfig cfg = tiny_experiment(tmp.str() + "/run", 40);
  cli::Runner runner(cfg);
  runner.run();
  const std::string good = tmp.str() + "/good.bin";
  runner.save_checkpoint(good);
  const std::string bytes = slurp(good);

  SUBCASE("truncation reports the broken section") {
    std::ofstream cut(tmp.str() + "/cut.bin", std::ios::binary);
    cut.write(bytes.data(), 200);
    cut.close();
    cli::Runner fresh(cfg);
    CHECK_THROWS_WITH_AS(fresh.load_checkpoint(tmp.str() + "/cut.bin"),
                         doctest::Contains("section 'config'"), std::exception);
  }
  SUBCASE("a different experiment refuses the snapshot") {
    cli::ExperimentConfig other = cfg;
    other.trainer.beta2 = 0.0;
    cli::Runner fresh(other);
    CHECK_THROWS_WITH_AS(fresh.load_checkpoint(good),
                         doctest::Contains("does not match"), std::exception);
  }
  SUBCASE("budget, out_dir, and cadence may differ on resume") {
    cli::ExperimentConfig other = cfg;
    other.run.total_env_steps = 4000;
    other.run.out_dir = tmp.str() + "/elsewhere";
    other.run.checkpoint_cadence = 2;
    cli::Runner fresh(other);
    CHECK_NOTHROW(fresh.load_checkpoint(good));
    CHECK(fresh.iterations() == 2);
  }
  SUBCASE("not a checkpoint file") {
    std::ofstream junk(tmp.str() + "/junk.bin", std::ios::binary);
    junk << "definitely not";
    junk.close();
    cli::Runner fresh(cfg);
    CHECK_THROWS_WITH_AS(fresh.load_checkpoint(tmp.str() + "/junk.bin"),
                         doctest::Contains("not a checkpoint"), std::exception);
  }
}

TEST_CASE("periodic checkpoints appear at the configured cadence") {
  TempDir tmp("cadence");
  cli::ExperimentConfig cfg = tiny_experiment(tmp.str() + "/run", 100);
  cfg.run.checkpoint_cadence = 2;
  cli::Runner runner(cfg);
  runner.run();
  CHECK(fs::exists(tmp.path / "run" / "checkpoint_2.bin"));
  CHECK(fs::exists(tmp.path / "run" / "checkpoint_4.bin"));
  CHECK(fs::exists(tmp.path / "run" / "checkpoint_final.bin"));
  CHECK_FALSE(fs::exists(tmp.path / "run" / "checkpoint_3.bin"));
}

TEST_CASE("evaluate rolls out without touching training state") {
  TempDir tmp("eval");
  cli::Runner runner(tiny_experiment(tmp.str() + "/run", 100));
  runner.run();
  const long long steps_before = runner.env_steps();

  cli::Runner::EvalReport rep = runner.evaluate(200);
  CHECK(rep.env_steps >= 200);
  CHECK(rep.distance_mean >= 0.0);
  CHECK(rep.ari >= -1.0);
  CHECK(rep.ari <= 1.0);
  CHECK(runner.env_steps() == steps_before);

  // deterministic: same runner state, same report
  cli::Runner::EvalReport rep2 = runner.evaluate(200);
  CHECK(rep.mean_return == rep2.mean_return);
  CHECK(rep.distance_mean == rep2.distance_mean);
  CHECK(rep.ari == rep2.ari);

  CHECK_THROWS_AS(runner.evaluate(0), std::invalid_argument);
}

TEST_CASE("attention export writes maps, localizations, and overlays") {
  TempDir tmp("export");
  cli::Runner runner(tiny_experiment(tmp.str() + "/run", 40));
  runner.run();
  const std::string dir = tmp.str() + "/viz";
  runner.export_attention(dir, 6);

  const std::string att = slurp(dir + "/attention.csv");
  CHECK(count_lines(att) == 7);  // header + one row per step
  CHECK(att.rfind("step,actor", 0) == 0);
  const std::string loc = slurp(dir + "/localization.csv");
  CHECK(count_lines(loc) == 7);
  CHECK(loc.rfind("step,executed,truth_row,truth_col,pred_x,pred_y", 0) == 0);
  for (int i = 0; i < 6; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "/frame_%04d.ppm", i);
    const std::string ppm = slurp(dir + name);
    CHECK(ppm.rfind("P6\n48 48\n255\n", 0) == 0);
    CHECK(ppm.size() == 13 + 48u * 48u * 3u);
  }
  CHECK_THROWS_AS(runner.export_attention(dir, 0), std::invalid_argument);
}

TEST_CASE("random-policy mode trains only the dynamics model") {
  TempDir tmp("random");
  cli::ExperimentConfig cfg = tiny_experiment(tmp.str() + "/run", 200);
  cfg.trainer.algorithm = "random";
  cli::Runner runner(cfg);
  cli::RunArtifacts art = runner.run();
  CHECK(art.summary.completed);
  CHECK(art.summary.env_steps == 200);

  // policy metrics stay at their zero defaults; the dynamics loss is live
  const std::string metrics = slurp(art.metrics_path);
  std::istringstream lines(metrics);
  std::string line;
  std::getline(lines, line);  // header
  std::getline(lines, line);
  CHECK(line.find(",0,0,0,") != std::string::npos);  // policy_loss,value_loss,entropy
}

TEST_CASE("ablation axes enumerate their variants and apply them") {
  CHECK(cli::ablation_variants("psi-components") ==
        std::vector<std::string>{"c", "c-R", "xy-c", "xy-c-R"});
  CHECK(cli::ablation_variants("adm-losses") ==
        std::vector<std::string>{"action", "action-cell", "action-ent", "action-cell-ent"});
  CHECK_THROWS_AS(cli::ablation_variants("optimizers"), std::invalid_argument);

  cli::ExperimentConfig base;
  cli::ExperimentConfig c = cli::apply_ablation_variant(base, "psi-components", "c");
  CHECK_FALSE(c.abstraction.psi_xy);
  CHECK_FALSE(c.abstraction.psi_reward);
  cli::ExperimentConfig cr = cli::apply_ablation_variant(base, "psi-components", "c-R");
  CHECK_FALSE(cr.abstraction.psi_xy);
  CHECK(cr.abstraction.psi_reward);
  cli::ExperimentConfig full = cli::apply_ablation_variant(base, "psi-components", "xy-c-R");
  CHECK(full.abstraction.psi_xy);
  CHECK(full.abstraction.psi_reward);

  cli::ExperimentConfig ae = cli::apply_ablation_variant(base, "adm-losses", "action-ent");
  CHECK_FALSE(ae.adm.use_cell_loss);
  CHECK(ae.adm.use_ent_loss);

  CHECK_THROWS_AS(cli::apply_ablation_variant(base, "psi-components", "action"),
                  std::invalid_argument);
}

TEST_CASE("ablation suite runs every variant per seed and tabulates them") {
  TempDir tmp("suite");
  cli::ExperimentConfig base = tiny_experiment(tmp.str() + "/abl", 40);
  cli::AblationResult res = cli::run_ablation_suite(base, "psi-components", {1, 2});
  CHECK(res.rows.size() == 8);
  for (const cli::AblationRow& row : res.rows) {
    CHECK(row.summary.completed);
    CHECK(row.summary.env_steps == 40);
  }
  CHECK(fs::exists(tmp.path / "abl" / "c" / "seed-1" / "metrics.csv"));
  CHECK(fs::exists(tmp.path / "abl" / "xy-c-R" / "seed-2" / "summary.json"));
  const std::string table = slurp(res.table_path);
  CHECK(count_lines(table) == 9);
  CHECK(table.rfind("axis,variant,seed,", 0) == 0);

  CHECK_THROWS_AS(cli::run_ablation_suite(base, "psi-components", {}), std::invalid_argument);
}
