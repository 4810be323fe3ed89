// Command-line front end: simulate scenario streams, run a method over a
// batch directory, evaluate run reports against truth, or enumerate the
// exact posterior on small problems.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "obms/baselines.hpp"
#include "obms/pipeline.hpp"
#include "obms/sim.hpp"

namespace fs = std::filesystem;
using namespace obms;

namespace {

std::string batch_file_name(int b) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "batch_%04d.csv", b);
  return buf;
}

struct PriorFlags {
  std::string kind = "uniform";
  double a = 1.0;
  double b = 1.0;

  ModelPrior build() const {
    if (kind == "uniform") return ModelPrior::uniform();
    return ModelPrior::beta_binomial(a, b);
  }
};

void add_prior_flags(CLI::App* cmd, PriorFlags& prior) {
  cmd->add_option("--prior", prior.kind, "Model-space prior")
      ->check(CLI::IsMember({"uniform", "beta-binomial"}))
      ->capture_default_str();
  cmd->add_option("--prior-a", prior.a, "Beta prior a")->capture_default_str();
  cmd->add_option("--prior-b", prior.b, "Beta prior b")->capture_default_str();
}

int cmd_simulate(const std::string& scenario, int replicate, std::uint64_t seed,
                 const std::string& out_dir, int batches, int batch_size,
                 int test_size, int p, int signals, double scale) {
  ScenarioSpec spec;
  if (scenario == "1" || scenario == "2" || scenario == "3") {
    spec = study_scenario(std::stoi(scenario), seed);
  } else if (scenario == "desk") {
    spec = desk_scenario(seed);
  } else {
    spec = custom_scenario(p, signals, scale, seed);
    spec.n_batches = 20;
    spec.batch_size = 300;
    spec.test_size = 15000;
  }
  if (batches > 0) spec.n_batches = batches;
  if (batch_size > 0) spec.batch_size = batch_size;
  if (test_size > 0) spec.test_size = test_size;

  fs::create_directories(out_dir);
  const fs::path base(out_dir);
  for (int b = 1; b <= spec.n_batches; ++b)
    write_batch_csv((base / batch_file_name(b)).string(),
                    make_batch(spec, replicate, b));
  write_batch_csv((base / "test.csv").string(), make_test_set(spec, replicate));
  write_truth_file((base / "truth.tsv").string(), spec.beta_true);
  std::cout << "wrote " << spec.n_batches << " batches (n_b=" << spec.batch_size
            << ", p=" << spec.p << "), test set, and truth to " << out_dir
            << "\n";
  return 0;
}

int cmd_run(const std::string& method, const std::string& data_dir,
            const std::string& out_dir, std::uint64_t seed, int access_window,
            int iterations, int burn_in, int top_k, const PriorFlags& prior,
            double ridge, double stability_threshold, int max_screening,
            bool no_memoize, const std::string& checkpoint_path,
            const std::string& resume_path) {
  DirectorySource source(data_dir);
  BatchData first = source.at(1);
  const int p = first.predictors();

  SamplerConfig sampler;
  sampler.iterations = iterations;
  sampler.burn_in = burn_in;
  sampler.top_k = top_k;

  IrlsOptions irls;
  irls.ridge_lambda = ridge;

  RunWriter writer(out_dir, method, p, /*append=*/!resume_path.empty());
  const auto fetch = [&](int b) { return b == 1 ? first : source.at(b); };

  if (method == "online_changing") {
    ChangingConfig config;
    config.access_window = access_window;
    config.sampler = sampler;
    config.prior = prior.build();
    config.irls = irls;
    config.seed = seed;
    config.memoize_bic = !no_memoize;

    OnlineChangingRunner runner =
        resume_path.empty() ? OnlineChangingRunner(p, config)
                            : OnlineChangingRunner::restore_checkpoint(resume_path);
    for (int b = runner.batches_seen() + 1; b <= source.count(); ++b) {
      writer.add(runner.step(fetch(b)));
      if (!checkpoint_path.empty()) runner.save_checkpoint(checkpoint_path);
    }
  } else if (method == "online_fixed") {
    FixedConfig config;
    config.seed = seed;
    config.options.stability_threshold = stability_threshold;
    config.options.max_screening_batches = max_screening;
    config.options.sampler = sampler;
    config.options.prior = prior.build();
    config.options.irls = irls;

    OnlineFixedRunner runner =
        resume_path.empty() ? OnlineFixedRunner(p, config)
                            : OnlineFixedRunner::restore_checkpoint(resume_path);
    for (int b = runner.batches_seen() + 1; b <= source.count(); ++b) {
      writer.add(runner.step(fetch(b)));
      if (!checkpoint_path.empty() && !runner.method().screening_active())
        runner.save_checkpoint(checkpoint_path);
    }
  } else {  // offline
    if (!checkpoint_path.empty() || !resume_path.empty()) {
      std::cerr << "the offline method refits from all records and does not "
                   "support checkpoints\n";
      return 1;
    }
    OfflineConfig config;
    config.sampler = sampler;
    config.prior = prior.build();
    config.irls = irls;
    config.seed = seed;

    OfflineRunner runner(p, config);
    for (int b = 1; b <= source.count(); ++b) writer.add(runner.step(fetch(b)));
  }

  writer.flush();
  std::cout << "ran " << method << " over " << source.count() << " batches; "
            << "reports in " << out_dir << "\n";
  return 0;
}

int cmd_oracle(const std::string& data_dir, const std::string& mode,
               const PriorFlags& prior, double ridge, int top_k,
               const std::string& out_path, const std::string& models_path) {
  DirectorySource source(data_dir);

  EnumerationResult result;
  if (mode == "linear") {
    BatchData first = source.at(1);
    SuffStats stats(first.predictors());
    stats.update(first);
    for (int b = 2; b <= source.count(); ++b) stats.update(source.at(b));
    result = enumerate_bma(stats, prior.build());
  } else {
    std::vector<BatchData> all;
    for (int b = 1; b <= source.count(); ++b) all.push_back(source.at(b));
    Eigen::Index rows = 0;
    for (const BatchData& b : all) rows += b.X.rows();
    Eigen::MatrixXd X(rows, all.front().X.cols());
    Eigen::VectorXd y(rows);
    Eigen::Index at = 0;
    for (const BatchData& b : all) {
      X.middleRows(at, b.X.rows()) = b.X;
      y.segment(at, b.y.size()) = b.y;
      at += b.X.rows();
    }
    IrlsOptions irls;
    irls.ridge_lambda = ridge;
    result = enumerate_bma_logistic(X, y, prior.build(), irls);
  }

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("oracle: cannot open " + out_path);
  out << "predictor\tinclusion_prob\n";
  char buf[40];
  for (int j = 0; j < result.p; ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", result.inclusion_probs(j));
    out << (j + 1) << '\t' << buf << "\n";
  }

  if (!models_path.empty()) {
    std::vector<std::size_t> order(result.post_probs.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (result.post_probs[a] != result.post_probs[b])
        return result.post_probs[a] > result.post_probs[b];
      return a < b;
    });
    std::ofstream models(models_path);
    if (!models) throw std::runtime_error("oracle: cannot open " + models_path);
    models << "model\tpost_prob\n";
    const std::size_t keep =
        std::min<std::size_t>(order.size(), static_cast<std::size_t>(top_k));
    for (std::size_t i = 0; i < keep; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", result.post_probs[order[i]]);
      models << result.model_at(order[i]).to_string() << '\t' << buf << "\n";
    }
  }
  std::cout << "enumerated " << result.post_probs.size() << " models ("
            << mode << " mode); inclusion probabilities in " << out_path
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online Bayesian model selection over streaming batches"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Write scenario batch files");
  std::string scenario = "desk";
  int replicate = 1;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  int sim_batches = 0, sim_batch_size = 0, sim_test_size = 0;
  int sim_p = 20, sim_signals = 10;
  double sim_scale = 1.0;
  sim->add_option("--scenario", scenario,
                  "1|2|3 (study scale), desk, or custom")
      ->capture_default_str();
  sim->add_option("--replicate", replicate, "Replicate stream id")
      ->capture_default_str();
  sim->add_option("--seed", sim_seed, "Master seed")->capture_default_str();
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--batches", sim_batches, "Override batch count");
  sim->add_option("--batch-size", sim_batch_size, "Override rows per batch");
  sim->add_option("--test-size", sim_test_size, "Override test rows");
  sim->add_option("--p", sim_p, "custom: predictor count")->capture_default_str();
  sim->add_option("--signals", sim_signals, "custom: leading nonzero slopes")
      ->capture_default_str();
  sim->add_option("--scale", sim_scale, "custom: coefficient multiplier")
      ->capture_default_str();

  // run
  auto* run = app.add_subcommand("run", "Run a method over a batch directory");
  run->set_config("--config", "", "key=value file; flags override it");
  std::string method, data_dir, run_out;
  std::uint64_t run_seed = 1;
  int access_window = 10, iterations = 10000, burn_in = 2000, top_k = 10;
  PriorFlags run_prior;
  double ridge = 0.0, stability_threshold = 0.02;
  int max_screening = 10;
  bool no_memoize = false;
  std::string checkpoint_path, resume_path;
  run->add_option("--method", method, "Method to run")
      ->check(CLI::IsMember({"online_changing", "online_fixed", "offline"}))
      ->required();
  run->add_option("--data", data_dir, "Directory of batch_*.csv files")
      ->required();
  run->add_option("--out", run_out, "Report directory")->required();
  run->add_option("--seed", run_seed, "Master seed")->capture_default_str();
  run->add_option("--access-window", access_window,
                  "Batches with raw-record access")
      ->capture_default_str();
  run->add_option("--iterations", iterations, "Chain length per batch")
      ->capture_default_str();
  run->add_option("--burn-in", burn_in, "Discarded chain prefix")
      ->capture_default_str();
  run->add_option("--top-k", top_k, "Models kept in rankings")
      ->capture_default_str();
  add_prior_flags(run, run_prior);
  run->add_option("--ridge", ridge, "Normal-prior precision for logistic fits")
      ->capture_default_str();
  run->add_option("--stability-threshold", stability_threshold,
                  "Screening stop threshold (fixed baseline)")
      ->capture_default_str();
  run->add_option("--max-screening", max_screening,
                  "Screening batch cap (fixed baseline)")
      ->capture_default_str();
  run->add_flag("--no-memoize", no_memoize,
                "Recompute every BIC instead of caching per batch");
  run->add_option("--checkpoint", checkpoint_path,
                  "Save stream state here after each batch");
  run->add_option("--resume", resume_path, "Restore stream state and continue");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score a run against truth");
  std::string eval_run, truth_path, test_path, eval_out;
  int eval_replicate = 1;
  eval->add_option("--run", eval_run, "Run report directory")->required();
  eval->add_option("--truth", truth_path, "truth.tsv from simulate")->required();
  eval->add_option("--test", test_path, "Held-out test CSV")->required();
  eval->add_option("--out", eval_out, "Evaluation TSV path")->required();
  eval->add_option("--replicate", eval_replicate, "Replicate tag column")
      ->capture_default_str();

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Exact enumeration (small p)");
  std::string oracle_data, oracle_mode = "linear", oracle_out, oracle_models;
  PriorFlags oracle_prior;
  double oracle_ridge = 0.0;
  int oracle_top_k = 20;
  oracle->add_option("--data", oracle_data, "Directory of batch_*.csv files")
      ->required();
  oracle->add_option("--mode", oracle_mode, "Posterior model")
      ->check(CLI::IsMember({"linear", "logistic"}))
      ->capture_default_str();
  add_prior_flags(oracle, oracle_prior);
  oracle->add_option("--ridge", oracle_ridge, "Ridge for logistic mode")
      ->capture_default_str();
  oracle->add_option("--top-k", oracle_top_k, "Models listed in --models")
      ->capture_default_str();
  oracle->add_option("--out", oracle_out, "Inclusion probability TSV")
      ->required();
  oracle->add_option("--models", oracle_models, "Optional top-models TSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(scenario, replicate, sim_seed, sim_out, sim_batches,
                          sim_batch_size, sim_test_size, sim_p, sim_signals,
                          sim_scale);
    if (run->parsed())
      return cmd_run(method, data_dir, run_out, run_seed, access_window,
                     iterations, burn_in, top_k, run_prior, ridge,
                     stability_threshold, max_screening, no_memoize,
                     checkpoint_path, resume_path);
    if (eval->parsed()) {
      evaluate_run(eval_run, truth_path, test_path, eval_out, eval_replicate);
      std::cout << "evaluation written to " << eval_out << "\n";
      return 0;
    }
    if (oracle->parsed())
      return cmd_oracle(oracle_data, oracle_mode, oracle_prior, oracle_ridge,
                        oracle_top_k, oracle_out, oracle_models);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
