#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "obms/modelspace.hpp"
#include "obms/rng.hpp"
#include "obms/suffstats.hpp"

namespace obms {

// Synthetic binary-response streams: i.i.d. standard normal predictors and
// Bernoulli responses through the logistic link at beta_true. Batches and
// test sets come from forked, counter-based RNG streams, so any (replicate,
// batch) cell is reproducible in isolation.

struct ScenarioSpec {
  int p = 0;
  Eigen::VectorXd beta_true;  // length p + 1, intercept first
  int n_batches = 0;
  int batch_size = 0;
  int replicates = 1;
  int test_size = 0;
  std::uint64_t seed = 0;
};

// The three study scenarios share one signal pattern (intercept and the
// first 20 slopes at 0.1, the rest zero; p = 80) and differ by an overall
// multiplier: 1, 1.5, and 1/1.5.
ScenarioSpec study_scenario(int which, std::uint64_t seed);

// Same shape at desk scale: p = 20 with the first 10 slopes as signals,
// fewer and smaller batches. Used by fast end-to-end checks.
ScenarioSpec desk_scenario(std::uint64_t seed);

// Free-form variant of the shared pattern: intercept and the first `signals`
// slopes at 0.1 * scale. Batch counts and sizes start unset.
ScenarioSpec custom_scenario(int p, int signals, double scale,
                             std::uint64_t seed);

// Indicators of the truly nonzero slopes (intercept not indexed).
ModelIndicator true_gamma(const ScenarioSpec& spec);

BatchData make_batch(const ScenarioSpec& spec, int replicate, int batch_index);
BatchData make_test_set(const ScenarioSpec& spec, int replicate);

// Root mean squared coordinate difference over all p + 1 coefficients.
double rmse_beta(const Eigen::VectorXd& est, const Eigen::VectorXd& truth);

// Selection quality of gamma_selected against gamma_true. A side with an
// empty denominator (no true signals, or no true noise) is reported as NaN.
struct Confusion {
  double tpr = 0.0;
  double fpr = 0.0;
};
Confusion tpr_fpr(const ModelIndicator& gamma_selected,
                  const ModelIndicator& gamma_true);

// Mann-Whitney AUC with midrank tie handling; NaN when labels are one-class.
double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

}  // namespace obms
