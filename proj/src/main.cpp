// Experiment driver: trains an actor-critic agent with a count-based
// exploration bonus over attention-derived abstract states in synthetic pixel
// worlds, and exposes evaluation / ablation / attention-export commands.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coex/runner.hpp"

namespace {

using coex::cli::ExperimentConfig;

ExperimentConfig load_experiment(const std::string& config_path,
                                 const std::vector<std::string>& overrides) {
  ExperimentConfig cfg = config_path.empty()
                             ? coex::cli::parse_config("{}", overrides)
                             : coex::cli::load_config_file(config_path, overrides);
  // relative output directories can be re-rooted without touching configs
  if (const char* root = std::getenv("COEX_OUT_ROOT")) {
    if (!cfg.run.out_dir.empty() && cfg.run.out_dir.front() != '/' && root[0] != '\0') {
      cfg.run.out_dir = std::string(root) + "/" + cfg.run.out_dir;
    }
  }
  coex::cli::validate_config(cfg);
  return cfg;
}

void print_progress(const coex::cli::IterationStats& s) {
  std::printf(
      "iter %6lld  steps %8lld  score %7.3f (max %7.3f)  dist100 %6.2f  ari %5.3f  "
      "clusters %3d  psi %6lld  adm %7.4f  acc %5.3f\n",
      s.iter, s.env_steps, s.score_window_mean, s.score_max_mean, s.distance_w100, s.ari,
      s.clusters, s.distinct_psi, s.adm.total, s.adm.accuracy);
  std::fflush(stdout);
}

void print_summary(const coex::cli::RunSummary& sum, const std::string& out_dir) {
  std::printf(
      "done: %lld iterations, %lld env steps, %lld episodes\n"
      "  max mean score   %.6f\n"
      "  final dist (w100) %.4f attention cells\n"
      "  final ari        %.4f\n"
      "  tau              %.6f\n"
      "  artifacts in     %s\n",
      sum.iterations, sum.env_steps, sum.episodes, sum.max_mean_score, sum.final_distance,
      sum.final_ari, sum.tau, out_dir.c_str());
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::string& resume_path) {
  ExperimentConfig cfg = load_experiment(config_path, overrides);
  coex::cli::Runner runner(cfg);
  if (!resume_path.empty()) {
    runner.load_checkpoint(resume_path);
    std::printf("resumed from %s at iteration %lld (%lld env steps)\n", resume_path.c_str(),
                runner.iterations(), runner.env_steps());
  }
  const long long cadence = cfg.run.eval_cadence;
  coex::cli::RunArtifacts art = runner.run([cadence](const coex::cli::IterationStats& s) {
    if (s.iter % cadence == 0) print_progress(s);
    return true;
  });
  print_summary(art.summary, cfg.run.out_dir);
  return art.summary.completed ? 0 : 3;
}

int cmd_ablate(const std::string& config_path, const std::vector<std::string>& overrides,
               const std::string& axis, const std::vector<uint64_t>& seeds) {
  ExperimentConfig base = load_experiment(config_path, overrides);
  coex::cli::AblationResult res = coex::cli::run_ablation_suite(base, axis, seeds);

  std::map<std::string, std::pair<double, int>> score_acc;
  std::map<std::string, double> dist_acc;
  for (const coex::cli::AblationRow& row : res.rows) {
    score_acc[row.variant].first += row.summary.max_mean_score;
    score_acc[row.variant].second += 1;
    dist_acc[row.variant] += row.summary.final_distance;
  }
  std::printf("\naxis %s (%zu seeds per variant)\n", res.axis.c_str(), seeds.size());
  std::printf("%-16s %18s %14s\n", "variant", "mean max score", "mean dist100");
  for (const std::string& v : coex::cli::ablation_variants(axis)) {
    const auto& [sum, n] = score_acc[v];
    std::printf("%-16s %18.6f %14.4f\n", v.c_str(), sum / n, dist_acc[v] / n);
  }
  std::printf("table: %s\n", res.table_path.c_str());
  return 0;
}

int cmd_eval(const std::string& config_path, const std::vector<std::string>& overrides,
             const std::string& checkpoint, long long steps) {
  ExperimentConfig cfg = load_experiment(config_path, overrides);
  coex::cli::Runner runner(cfg);
  if (!checkpoint.empty()) runner.load_checkpoint(checkpoint);
  coex::cli::Runner::EvalReport rep = runner.evaluate(steps);
  std::printf(
      "evaluation over %lld env steps\n"
      "  mean return    %.6f over %lld episodes\n"
      "  mean distance  %.4f attention cells\n"
      "  ari            %.4f\n",
      rep.env_steps, rep.mean_return, rep.episodes, rep.distance_mean, rep.ari);
  return 0;
}

int cmd_export(const std::string& config_path, const std::vector<std::string>& overrides,
               const std::string& checkpoint, const std::string& out_dir, int steps) {
  ExperimentConfig cfg = load_experiment(config_path, overrides);
  coex::cli::Runner runner(cfg);
  if (!checkpoint.empty()) runner.load_checkpoint(checkpoint);
  runner.export_attention(out_dir, steps);
  std::printf("wrote attention.csv, localization.csv, and %d frame overlays to %s\n", steps,
              out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "coex: count-based exploration over attention-derived abstractions in pixel worlds"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "experiment config (JSON)")
      ->check(CLI::ExistingFile);
  app.add_option("-s,--set", overrides,
                 "override a config key, e.g. trainer.beta2=0 (repeatable)");

  auto* run = app.add_subcommand("run", "train until the configured step budget");
  std::string resume_path;
  run->add_option("--resume", resume_path, "checkpoint to continue from")
      ->check(CLI::ExistingFile);

  auto* ablate = app.add_subcommand("ablate", "sweep one ablation axis across seeds");
  std::string axis = "psi-components";
  std::vector<uint64_t> seeds{1, 2, 3};
  ablate->add_option("--axis", axis, "psi-components | adm-losses");
  ablate->add_option("--seeds", seeds, "seeds to run per variant")->delimiter(',');

  auto* eval = app.add_subcommand("eval", "frozen-policy rollouts with metrics");
  std::string eval_checkpoint;
  long long eval_steps = 5000;
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint to evaluate")
      ->check(CLI::ExistingFile);
  eval->add_option("--steps", eval_steps, "environment steps to roll out");

  auto* exp = app.add_subcommand("export-attention",
                                 "dump per-step attention maps, localizations, and overlays");
  std::string exp_checkpoint, exp_dir = "attention-out";
  int exp_steps = 64;
  exp->add_option("--checkpoint", exp_checkpoint, "checkpoint to visualize")
      ->check(CLI::ExistingFile);
  exp->add_option("--out", exp_dir, "output directory");
  exp->add_option("--steps", exp_steps, "steps to export");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, overrides, resume_path);
    if (ablate->parsed()) return cmd_ablate(config_path, overrides, axis, seeds);
    if (eval->parsed()) return cmd_eval(config_path, overrides, eval_checkpoint, eval_steps);
    if (exp->parsed()) {
      return cmd_export(config_path, overrides, exp_checkpoint, exp_dir, exp_steps);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
