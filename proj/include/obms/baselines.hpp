#pragma once

#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "obms/linear_bic.hpp"
#include "obms/logistic.hpp"
#include "obms/model_sampler.hpp"
#include "obms/modelspace.hpp"
#include "obms/rng.hpp"
#include "obms/suffstats.hpp"

namespace obms {

// Competitor methods and exact references: full-enumeration BMA for small p,
// the offline logistic MC3 that refits on all accumulated records, and the
// screening-then-frozen-set online baseline.

// Exact posterior over all 2^p models. Models are listed in mask order
// (model k has predictor j included iff bit j of k is set).
struct EnumerationResult {
  std::vector<double> log_post;     // unnormalized, -inf for unfittable models
  std::vector<double> post_probs;   // normalized, sums to 1
  Eigen::VectorXd inclusion_probs;  // length p
  Eigen::VectorXd beta_bma;         // length p+1, posterior-weighted, zero-padded
  int p = 0;

  ModelIndicator model_at(std::size_t k) const {
    return ModelIndicator::from_mask(static_cast<std::uint64_t>(k), p);
  }
};

inline constexpr int kEnumerationCap = 20;

// Column subset {intercept} + {j+1 : gamma_j = 1} of a raw design matrix.
Eigen::MatrixXd submodel_design(const Eigen::MatrixXd& X,
                                const ModelIndicator& gamma);

// Gaussian working-model posterior from the sufficient statistics.
EnumerationResult enumerate_bma(const SuffStats& s, const ModelPrior& prior);

// Logistic posterior from raw data: every model fit by IRLS, BIC from the
// logistic log-likelihood. Offline-only by construction.
EnumerationResult enumerate_bma_logistic(const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y,
                                         const ModelPrior& prior,
                                         const IrlsOptions& irls = {});

// Fitted coefficients carried across batches so each refit starts from the
// previous aggregate's estimate.
using WarmStartCache =
    std::unordered_map<ModelIndicator, Eigen::VectorXd, ModelIndicator::Hash>;

struct OfflineMc3Result {
  Eigen::VectorXd inclusion_probs;
  Eigen::VectorXd beta_bma;  // post-burn-in visit-weighted model estimates
  std::vector<RankedModel> distinct_models;
  double acceptance_rate = 0.0;
  ModelIndicator final_model;
  std::size_t distinct_visited = 0;
};

// MC3 over models where each model's BIC comes from a logistic IRLS fit on
// the full accumulated data. Models whose fit does not converge are treated
// as impossible for this run. `warm` (optional) is read and updated with
// converged coefficient estimates keyed by model.
OfflineMc3Result offline_logistic_mc3(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y,
                                      const ModelPrior& prior,
                                      const SamplerConfig& config,
                                      const IrlsOptions& irls, Rng& rng,
                                      const ModelIndicator& start,
                                      WarmStartCache* warm = nullptr);

// RMSE of fitted class probabilities between two coefficient estimates over
// the given rows. Symmetric in the estimates and bounded by [0, 1].
double stability_metric(const Eigen::MatrixXd& X_all,
                        const Eigen::VectorXd& beta_b,
                        const Eigen::VectorXd& beta_bm1);

// One retained model after screening: its indicator, the renewable estimate
// on its own column subset, and the running second-order approximation of
// its cumulative log-likelihood.
struct FixedModelEntry {
  ModelIndicator gamma;
  RenewableState renew;
  double loglik = 0.0;
};

// Screening-then-fixed baseline. While screening it stores raw batches and
// reruns offline logistic MC3 on the aggregate; once the probability-scale
// RMSE between successive BMA estimates drops to the threshold (or the batch
// cap is hit) the post-burn-in model set of that final screening batch is
// frozen. Afterwards each retained model is renewed per batch and model
// weights come from BICs built on Taylor-tracked log-likelihoods.
class OnlineFixedModelSel {
 public:
  struct Options {
    double stability_threshold = 0.02;
    int max_screening_batches = 10;
    ModelPrior prior;
    SamplerConfig sampler;
    IrlsOptions irls;
  };

  OnlineFixedModelSel(int p, const Options& options);

  // Rebuilds a post-screening instance from persisted state.
  static OnlineFixedModelSel from_frozen(int p, const Options& options,
                                         std::vector<FixedModelEntry> frozen,
                                         int batches_used, std::int64_t n_seen,
                                         Eigen::VectorXd inclusion_probs,
                                         Eigen::VectorXd beta_bma,
                                         double last_stability);

  // Consumes the next batch in order. rng drives the screening chains.
  void step(const BatchData& batch, Rng& rng);

  bool screening_active() const { return screening_; }
  int screening_batches_used() const { return batches_used_; }
  double last_stability() const { return last_stability_; }
  double last_acceptance() const { return last_acceptance_; }
  std::size_t last_distinct() const { return last_distinct_; }
  int last_renew_failures() const { return last_renew_failures_; }

  // Highest-weight models of the most recent batch: visit shares while
  // screening, renewed BIC weights afterwards. Sorted by weight descending.
  const std::vector<std::pair<ModelIndicator, double>>& last_top() const {
    return last_top_;
  }

  // Current per-batch outputs (valid after the first step).
  const Eigen::VectorXd& inclusion_probs() const { return inclusion_probs_; }
  const Eigen::VectorXd& beta_bma() const { return beta_bma_; }
  const std::vector<FixedModelEntry>& frozen_models() const { return frozen_; }
  std::int64_t n_seen() const { return n_seen_; }

 private:
  void screening_step(const BatchData& batch, Rng& rng);
  void frozen_step(const BatchData& batch);
  void freeze(const OfflineMc3Result& result);
  Eigen::MatrixXd aggregate_X() const;
  Eigen::VectorXd aggregate_y() const;

  int p_;
  Options options_;
  bool screening_ = true;
  int batches_used_ = 0;
  double last_stability_ = std::numeric_limits<double>::quiet_NaN();
  double last_acceptance_ = std::numeric_limits<double>::quiet_NaN();
  std::size_t last_distinct_ = 0;
  int last_renew_failures_ = 0;
  std::vector<std::pair<ModelIndicator, double>> last_top_;
  std::int64_t n_seen_ = 0;

  std::vector<BatchData> raw_;  // dropped when screening ends
  WarmStartCache warm_;
  ModelIndicator chain_start_;
  bool have_prev_beta_ = false;
  Eigen::VectorXd prev_beta_bma_;

  std::vector<FixedModelEntry> frozen_;
  Eigen::VectorXd inclusion_probs_;
  Eigen::VectorXd beta_bma_;
};

}  // namespace obms
