#include "obms/linear_bic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace obms {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kRankTol = 1e-12;

LinearFit sentinel(int p_gamma) {
  LinearFit f;
  f.p_gamma = p_gamma;
  f.loglik = -std::numeric_limits<double>::infinity();
  f.bic = std::numeric_limits<double>::infinity();
  f.sigma2_hat = std::numeric_limits<double>::quiet_NaN();
  f.ok = false;
  return f;
}

}  // namespace

LinearFit fit_linear(const SuffStats& s, const ModelIndicator& gamma) {
  const int p_gamma = 1 + gamma.count();
  const double n = static_cast<double>(s.n());

  // The variance MLE is degenerate without at least one residual df.
  if (s.n() < p_gamma + 1) return sentinel(p_gamma);

  auto [xtx, xty] = s.extract_submodel(gamma);

  // Jitter ladder for numerically fragile factorizations. Exact rank
  // deficiency (a collinear column) is detected from the unjittered pivots
  // and is never rescued: such a model is sentinel-unvisitable.
  const double trace_jitter = 1e-8 * xtx.trace() / p_gamma;
  const double jitters[3] = {0.0, 1e-10, trace_jitter};

  for (int rung = 0; rung < 3; ++rung) {
    Eigen::MatrixXd m = xtx;
    if (jitters[rung] > 0.0) m.diagonal().array() += jitters[rung];

    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    const auto d = ldlt.vectorD();
    const double dmax = d.maxCoeff();
    const double dmin = d.minCoeff();
    // The pivot ratio must be inspected before the health check: an exactly
    // singular factorization reports NumericalIssue, and skipping ahead to a
    // jitter rung would rescue a model that has no unique fit.
    if (rung == 0 && !(dmin > dmax * kRankTol)) return sentinel(p_gamma);
    if (ldlt.info() != Eigen::Success) continue;
    if (dmin <= 0.0) continue;

    Eigen::VectorXd alpha = ldlt.solve(xty);
    if (!alpha.allFinite()) continue;

    const double rss = s.yty() - alpha.dot(xty);
    // A materially negative residual sum signals an untrustworthy solve.
    if (rss < -1e-6 * std::max(s.yty(), 1.0)) continue;

    LinearFit f;
    f.p_gamma = p_gamma;
    f.alpha_hat = std::move(alpha);
    f.sigma2_hat = std::max(rss / n, kSigma2Floor);
    f.loglik = -0.5 * n * (kLog2Pi + std::log(f.sigma2_hat) + 1.0);
    f.bic = -2.0 * f.loglik + p_gamma * std::log(n);
    f.ok = true;
    return f;
  }
  return sentinel(p_gamma);
}

double bic_of(const SuffStats& s, const ModelIndicator& gamma) {
  return fit_linear(s, gamma).bic;
}

Eigen::VectorXd expand_submodel_beta(const Eigen::VectorXd& sub_beta,
                                     const ModelIndicator& gamma) {
  if (sub_beta.size() != gamma.count() + 1)
    throw std::invalid_argument("expand_submodel_beta: length must be 1 + |gamma|");
  Eigen::VectorXd full = Eigen::VectorXd::Zero(gamma.length() + 1);
  full(0) = sub_beta(0);
  int k = 1;
  for (int j = 0; j < gamma.length(); ++j)
    if (gamma.test(j)) full(j + 1) = sub_beta(k++);
  return full;
}

double BicCache::bic(const ModelIndicator& gamma) {
  if (stale()) {
    map_.clear();
    revision_ = s_->revision();
  }
  auto it = map_.find(gamma);
  if (it != map_.end()) return it->second;
  const double value = bic_of(*s_, gamma);
  map_.emplace(gamma, value);
  return value;
}

}  // namespace obms
