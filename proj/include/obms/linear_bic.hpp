#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <unordered_map>

#include "obms/modelspace.hpp"
#include "obms/suffstats.hpp"

namespace obms {

// Gaussian working-model fit for one model, computed entirely from the
// sufficient statistics. `ok == false` marks a sentinel: the model cannot be
// fit (rank-deficient X'X or too few observations) and carries
// loglik = -inf, bic = +inf so a sampler never visits it.
struct LinearFit {
  Eigen::VectorXd alpha_hat;
  double sigma2_hat = 0.0;
  double loglik = 0.0;
  double bic = 0.0;
  int p_gamma = 0;
  bool ok = false;
};

inline constexpr double kSigma2Floor = 1e-12;

LinearFit fit_linear(const SuffStats& s, const ModelIndicator& gamma);

// BIC(gamma) = -2 loglik + p_gamma log N, +infinity for sentinel fits.
double bic_of(const SuffStats& s, const ModelIndicator& gamma);

// Scatter a submodel coefficient vector (intercept first, then the selected
// predictors in index order) into the full p+1 layout, zeros elsewhere.
Eigen::VectorXd expand_submodel_beta(const Eigen::VectorXd& sub_beta,
                                     const ModelIndicator& gamma);

// Per-chain memo of BIC values, keyed by model and pinned to one SuffStats
// revision: any update to the stream invalidates every entry.
class BicCache {
 public:
  explicit BicCache(const SuffStats& s) : s_(&s), revision_(s.revision()) {}

  double bic(const ModelIndicator& gamma);
  std::size_t size() const { return map_.size(); }
  bool stale() const { return revision_ != s_->revision(); }

 private:
  const SuffStats* s_;
  std::uint64_t revision_;
  std::unordered_map<ModelIndicator, double, ModelIndicator::Hash> map_;
};

}  // namespace obms
