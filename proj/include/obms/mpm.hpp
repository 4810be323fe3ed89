#pragma once

#include <Eigen/Core>

#include "obms/modelspace.hpp"

namespace obms {

// Median probability model: keep exactly the predictors whose posterior
// inclusion probability reaches one half. The coefficient estimate is the
// full-model fit with excluded coordinates zeroed out; the intercept is not
// subject to selection and always survives.

struct MpmResult {
  ModelIndicator gamma;
  Eigen::VectorXd inclusion_probs;
};

// probs(j) is the inclusion probability of predictor j; each must lie in
// [0, 1]. Ties at exactly 0.5 are included.
MpmResult select_mpm(const Eigen::VectorXd& probs);

// beta_full has the intercept at index 0 and predictor j at index j + 1.
// Returns the same layout with de-selected predictors set to zero.
Eigen::VectorXd threshold_beta(const Eigen::VectorXd& beta_full,
                               const ModelIndicator& gamma);

}  // namespace obms
