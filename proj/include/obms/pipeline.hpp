#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "obms/baselines.hpp"
#include "obms/logistic.hpp"
#include "obms/model_sampler.hpp"
#include "obms/modelspace.hpp"
#include "obms/mpm.hpp"
#include "obms/sim.hpp"
#include "obms/suffstats.hpp"

namespace obms {

// Stream orchestration: feed batches to a method in order, collect one
// output record per batch, and persist reports and checkpoints. Every
// method's chain RNG is forked from (seed, batch index), so a restored
// stream continues exactly where the uninterrupted one would be.

// Per-batch result of any method, in one shape so reports are uniform.
struct MethodOutput {
  int batch_index = 0;
  std::int64_t n_seen = 0;
  ModelIndicator selected;          // median-probability selection
  Eigen::VectorXd inclusion_probs;  // length p
  Eigen::VectorXd beta;             // reported estimate, length p + 1
  double acceptance_rate = 0.0;
  std::size_t distinct_visited = 0;
  bool screening = false;           // fixed baseline only
  double stability = std::numeric_limits<double>::quiet_NaN();
  // Highest posterior-probability models of this batch, best first.
  std::vector<std::pair<std::string, double>> top_models;
  std::string note;                 // anomaly marker, empty when clean
  double seconds = 0.0;             // wall time of this step
};

// Sequential access to a stream's batches, 1-based.
class BatchSource {
 public:
  virtual ~BatchSource() = default;
  virtual int count() const = 0;
  virtual BatchData at(int batch_index) = 0;
};

class GeneratorSource : public BatchSource {
 public:
  GeneratorSource(const ScenarioSpec& spec, int replicate)
      : spec_(spec), replicate_(replicate) {}
  int count() const override { return spec_.n_batches; }
  BatchData at(int batch_index) override {
    return make_batch(spec_, replicate_, batch_index);
  }

 private:
  ScenarioSpec spec_;
  int replicate_;
};

struct IngestStats {
  int rows_kept = 0;
  int rows_rejected = 0;
};

// Parses one delimited batch file: header `y,x1,...,xp`, one record per
// line. Rows with missing or non-numeric cells are dropped and counted; a
// bad header or empty usable file throws.
BatchData ingest_batch(const std::string& path, int batch_index,
                       IngestStats* stats = nullptr);

// Batch files named batch_*.csv inside a directory, in sorted name order.
class DirectorySource : public BatchSource {
 public:
  explicit DirectorySource(const std::string& dir);
  int count() const override { return static_cast<int>(files_.size()); }
  BatchData at(int batch_index) override;
  const IngestStats& last_ingest() const { return last_ingest_; }

 private:
  std::vector<std::string> files_;
  IngestStats last_ingest_;
};

// Writers for the simulate subcommand and tests. Values are printed with
// enough digits to round-trip doubles exactly.
void write_batch_csv(const std::string& path, const BatchData& batch);
void write_truth_file(const std::string& path, const Eigen::VectorXd& beta_true);
Eigen::VectorXd read_truth_file(const std::string& path);

struct ChangingConfig {
  int access_window = 10;
  SamplerConfig sampler;
  ModelPrior prior;
  IrlsOptions irls;
  std::uint64_t seed = 1;
  // The per-stream BIC memo is a pure speedup; timing studies switch it off
  // so per-batch cost reflects the un-memoized sampler.
  bool memoize_bic = true;
};

// The summary-statistic method: linear-surrogate MC3 on the running
// sufficient statistics every batch, full-model logistic estimate renewed
// online, median-probability selection with thresholded coefficients.
// Raw rows are kept only inside the access window.
class OnlineChangingRunner {
 public:
  OnlineChangingRunner(int p, const ChangingConfig& config);

  MethodOutput step(const BatchData& batch);

  int batches_seen() const { return batches_seen_; }
  const SuffStats& stats() const { return stats_; }
  bool renew_ready() const { return renew_.has_value(); }
  const RenewableState& renew() const { return *renew_; }

  void save_checkpoint(const std::string& path) const;
  static OnlineChangingRunner restore_checkpoint(const std::string& path);

 private:
  int p_;
  ChangingConfig config_;
  SuffStats stats_;
  std::vector<BatchData> window_;  // cleared once the window closes
  std::optional<RenewableState> renew_;
  ModelIndicator chain_start_;
  int batches_seen_ = 0;
};

struct FixedConfig {
  OnlineFixedModelSel::Options options;
  std::uint64_t seed = 1;
};

class OnlineFixedRunner {
 public:
  OnlineFixedRunner(int p, const FixedConfig& config);

  MethodOutput step(const BatchData& batch);

  int batches_seen() const { return batches_seen_; }
  const OnlineFixedModelSel& method() const { return method_; }

  // Post-screening state only; a mid-screening save is refused because the
  // screening stage depends on retained raw records and fit caches.
  void save_checkpoint(const std::string& path) const;
  static OnlineFixedRunner restore_checkpoint(const std::string& path);

 private:
  OnlineFixedRunner(int p, const FixedConfig& config, bool restored);

  int p_;
  FixedConfig config_;
  OnlineFixedModelSel method_;
  int batches_seen_ = 0;
};

struct OfflineConfig {
  SamplerConfig sampler;
  ModelPrior prior;
  IrlsOptions irls;
  std::uint64_t seed = 1;
};

// Reference method: keeps every record and reruns logistic MC3 on the full
// aggregate after each batch. No checkpoint support; a rerun needs the data
// anyway.
class OfflineRunner {
 public:
  OfflineRunner(int p, const OfflineConfig& config);

  MethodOutput step(const BatchData& batch);

  int batches_seen() const { return batches_seen_; }

 private:
  int p_;
  OfflineConfig config_;
  Eigen::MatrixXd X_;  // grows with the stream
  Eigen::VectorXd y_;
  WarmStartCache warm_;
  ModelIndicator chain_start_;
  int batches_seen_ = 0;
};

// Appends per-batch rows to the report files (report.tsv, probs.tsv,
// beta.tsv, sampler.tsv, timing.tsv) under out_dir. Everything except
// timing.tsv is byte-deterministic for a fixed (config, seed, data).
class RunWriter {
 public:
  // append = true continues existing report files (resumed runs); headers
  // are only written when a file is new or empty.
  RunWriter(const std::string& out_dir, const std::string& method, int p,
            bool append = false);
  ~RunWriter();
  void add(const MethodOutput& m);
  void flush();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Joins a run directory's reports with the truth and test files into
// evaluation rows (rmse/tpr/fpr/auc, wall time when available).
void evaluate_run(const std::string& run_dir, const std::string& truth_path,
                  const std::string& test_path, const std::string& out_path,
                  int replicate);

}  // namespace obms
