#include "obms/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace obms {

namespace {

double neg_inf() { return -std::numeric_limits<double>::infinity(); }

// Normalizes unnormalized log masses in place and fills the inclusion and
// coefficient averages shared by both enumeration modes.
void finish_enumeration(EnumerationResult& r,
                        const std::vector<Eigen::VectorXd>& betas) {
  const std::size_t m = r.log_post.size();
  const double lse = log_sum_exp(r.log_post);
  if (!std::isfinite(lse))
    throw std::runtime_error("enumerate_bma: no model is fittable");

  r.post_probs.resize(m);
  r.inclusion_probs = Eigen::VectorXd::Zero(r.p);
  r.beta_bma = Eigen::VectorXd::Zero(r.p + 1);
  for (std::size_t k = 0; k < m; ++k) {
    const double prob =
        std::isfinite(r.log_post[k]) ? std::exp(r.log_post[k] - lse) : 0.0;
    r.post_probs[k] = prob;
    if (prob == 0.0) continue;
    for (int j = 0; j < r.p; ++j)
      if ((k >> j) & 1u) r.inclusion_probs(j) += prob;
    r.beta_bma += prob * betas[k];
  }
  r.inclusion_probs = r.inclusion_probs.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace

Eigen::MatrixXd submodel_design(const Eigen::MatrixXd& X,
                                const ModelIndicator& gamma) {
  if (X.cols() != gamma.length() + 1)
    throw std::invalid_argument("submodel_design: column count must be p + 1");
  Eigen::MatrixXd sub(X.rows(), gamma.count() + 1);
  sub.col(0) = X.col(0);
  int k = 1;
  for (int j = 0; j < gamma.length(); ++j)
    if (gamma.test(j)) sub.col(k++) = X.col(j + 1);
  return sub;
}

EnumerationResult enumerate_bma(const SuffStats& s, const ModelPrior& prior) {
  const int p = s.predictors();
  if (p > kEnumerationCap)
    throw std::invalid_argument("enumerate_bma: p exceeds the enumeration cap");

  const std::size_t m = std::size_t{1} << p;
  EnumerationResult r;
  r.p = p;
  r.log_post.resize(m);
  std::vector<Eigen::VectorXd> betas(m);
  for (std::size_t k = 0; k < m; ++k) {
    const ModelIndicator gamma = ModelIndicator::from_mask(k, p);
    const LinearFit fit = fit_linear(s, gamma);
    if (fit.ok) {
      r.log_post[k] = -0.5 * fit.bic + log_prior(gamma, prior);
      betas[k] = expand_submodel_beta(fit.alpha_hat, gamma);
    } else {
      r.log_post[k] = neg_inf();
      betas[k] = Eigen::VectorXd::Zero(p + 1);
    }
  }
  finish_enumeration(r, betas);
  return r;
}

EnumerationResult enumerate_bma_logistic(const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y,
                                         const ModelPrior& prior,
                                         const IrlsOptions& irls) {
  const int p = static_cast<int>(X.cols()) - 1;
  if (p < 1) throw std::invalid_argument("enumerate_bma_logistic: no predictors");
  if (p > kEnumerationCap)
    throw std::invalid_argument(
        "enumerate_bma_logistic: p exceeds the enumeration cap");

  const double log_n = std::log(static_cast<double>(X.rows()));
  const std::size_t m = std::size_t{1} << p;
  EnumerationResult r;
  r.p = p;
  r.log_post.resize(m);
  std::vector<Eigen::VectorXd> betas(m);
  for (std::size_t k = 0; k < m; ++k) {
    const ModelIndicator gamma = ModelIndicator::from_mask(k, p);
    const Eigen::MatrixXd sub = submodel_design(X, gamma);
    const LogisticFit fit = irls_fit(sub, y, irls);
    if (fit.converged) {
      const double bic = -2.0 * fit.loglik + (gamma.count() + 1) * log_n;
      r.log_post[k] = -0.5 * bic + log_prior(gamma, prior);
      betas[k] = expand_submodel_beta(fit.beta, gamma);
    } else {
      r.log_post[k] = neg_inf();
      betas[k] = Eigen::VectorXd::Zero(p + 1);
    }
  }
  finish_enumeration(r, betas);
  return r;
}

OfflineMc3Result offline_logistic_mc3(const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y,
                                      const ModelPrior& prior,
                                      const SamplerConfig& config,
                                      const IrlsOptions& irls, Rng& rng,
                                      const ModelIndicator& start,
                                      WarmStartCache* warm) {
  if (X.cols() != start.length() + 1)
    throw std::invalid_argument("offline_logistic_mc3: start length mismatch");
  const double log_n = std::log(static_cast<double>(X.rows()));

  struct Entry {
    double log_post;
    Eigen::VectorXd beta;  // submodel layout; empty when unfittable
  };
  std::unordered_map<ModelIndicator, Entry, ModelIndicator::Hash> memo;

  LogPostFn log_post = [&](const ModelIndicator& gamma) {
    auto it = memo.find(gamma);
    if (it != memo.end()) return it->second.log_post;

    const Eigen::MatrixXd sub = submodel_design(X, gamma);
    const Eigen::VectorXd* init = nullptr;
    if (warm) {
      auto w = warm->find(gamma);
      if (w != warm->end()) init = &w->second;
    }
    const LogisticFit fit = irls_fit(sub, y, irls, init);

    Entry e;
    if (fit.converged) {
      const double bic = -2.0 * fit.loglik + (gamma.count() + 1) * log_n;
      e.log_post = -0.5 * bic + log_prior(gamma, prior);
      e.beta = fit.beta;
      if (warm) (*warm)[gamma] = fit.beta;
    } else {
      e.log_post = neg_inf();
    }
    const double value = e.log_post;
    memo.emplace(gamma, std::move(e));
    return value;
  };

  const ChainResult chain = run_chain(log_post, start, config, rng);

  OfflineMc3Result r;
  r.inclusion_probs = chain.inclusion_probs;
  r.distinct_models = chain.distinct_models;
  r.acceptance_rate = chain.acceptance_rate;
  r.final_model = chain.final_model;
  r.distinct_visited = chain.distinct_visited;

  r.beta_bma = Eigen::VectorXd::Zero(start.length() + 1);
  std::int64_t weight = 0;
  for (const RankedModel& rm : chain.distinct_models) {
    const auto it = memo.find(rm.model);
    if (it == memo.end() || it->second.beta.size() == 0) continue;
    r.beta_bma +=
        static_cast<double>(rm.visits) * expand_submodel_beta(it->second.beta, rm.model);
    weight += rm.visits;
  }
  if (weight > 0) r.beta_bma /= static_cast<double>(weight);
  return r;
}

double stability_metric(const Eigen::MatrixXd& X_all,
                        const Eigen::VectorXd& beta_b,
                        const Eigen::VectorXd& beta_bm1) {
  if (beta_b.size() != X_all.cols() || beta_bm1.size() != X_all.cols())
    throw std::invalid_argument("stability_metric: coefficient length mismatch");
  if (X_all.rows() == 0)
    throw std::invalid_argument("stability_metric: no rows");
  const Eigen::VectorXd eta_b = X_all * beta_b;
  const Eigen::VectorXd eta_p = X_all * beta_bm1;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < X_all.rows(); ++i) {
    const double d = sigmoid(eta_b(i)) - sigmoid(eta_p(i));
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(X_all.rows()));
}

OnlineFixedModelSel::OnlineFixedModelSel(int p, const Options& options)
    : p_(p),
      options_(options),
      chain_start_(ModelIndicator::null_model(p)),
      inclusion_probs_(Eigen::VectorXd::Zero(p)),
      beta_bma_(Eigen::VectorXd::Zero(p + 1)) {
  if (options.max_screening_batches < 1)
    throw std::invalid_argument("OnlineFixedModelSel: need at least one screening batch");
}

OnlineFixedModelSel OnlineFixedModelSel::from_frozen(
    int p, const Options& options, std::vector<FixedModelEntry> frozen,
    int batches_used, std::int64_t n_seen, Eigen::VectorXd inclusion_probs,
    Eigen::VectorXd beta_bma, double last_stability) {
  if (frozen.empty())
    throw std::invalid_argument("from_frozen: frozen model set is empty");
  OnlineFixedModelSel m(p, options);
  m.screening_ = false;
  m.batches_used_ = batches_used;
  m.n_seen_ = n_seen;
  m.frozen_ = std::move(frozen);
  m.inclusion_probs_ = std::move(inclusion_probs);
  m.beta_bma_ = std::move(beta_bma);
  m.last_stability_ = last_stability;
  m.last_distinct_ = m.frozen_.size();
  return m;
}

void OnlineFixedModelSel::step(const BatchData& batch, Rng& rng) {
  batch.validate();
  if (batch.predictors() != p_)
    throw std::invalid_argument("OnlineFixedModelSel: predictor count mismatch");
  if (screening_)
    screening_step(batch, rng);
  else
    frozen_step(batch);
}

Eigen::MatrixXd OnlineFixedModelSel::aggregate_X() const {
  Eigen::Index rows = 0;
  for (const BatchData& b : raw_) rows += b.X.rows();
  Eigen::MatrixXd X(rows, p_ + 1);
  Eigen::Index at = 0;
  for (const BatchData& b : raw_) {
    X.middleRows(at, b.X.rows()) = b.X;
    at += b.X.rows();
  }
  return X;
}

Eigen::VectorXd OnlineFixedModelSel::aggregate_y() const {
  Eigen::Index rows = 0;
  for (const BatchData& b : raw_) rows += b.y.size();
  Eigen::VectorXd y(rows);
  Eigen::Index at = 0;
  for (const BatchData& b : raw_) {
    y.segment(at, b.y.size()) = b.y;
    at += b.y.size();
  }
  return y;
}

void OnlineFixedModelSel::screening_step(const BatchData& batch, Rng& rng) {
  raw_.push_back(batch);
  n_seen_ += batch.rows();
  ++batches_used_;

  const Eigen::MatrixXd X = aggregate_X();
  const Eigen::VectorXd y = aggregate_y();
  const OfflineMc3Result result = offline_logistic_mc3(
      X, y, options_.prior, options_.sampler, options_.irls, rng, chain_start_,
      &warm_);
  chain_start_ = result.final_model;
  inclusion_probs_ = result.inclusion_probs;
  beta_bma_ = result.beta_bma;
  last_acceptance_ = result.acceptance_rate;
  last_distinct_ = result.distinct_visited;
  last_renew_failures_ = 0;

  const double kept = static_cast<double>(options_.sampler.iterations -
                                          options_.sampler.burn_in);
  last_top_.clear();
  for (const RankedModel& rm : result.distinct_models) {
    if (static_cast<int>(last_top_.size()) >= options_.sampler.top_k) break;
    last_top_.emplace_back(rm.model, static_cast<double>(rm.visits) / kept);
  }

  bool stable = false;
  if (have_prev_beta_) {
    last_stability_ = stability_metric(X, beta_bma_, prev_beta_bma_);
    stable = last_stability_ <= options_.stability_threshold;
  }
  prev_beta_bma_ = beta_bma_;
  have_prev_beta_ = true;

  if (stable || batches_used_ >= options_.max_screening_batches) {
    freeze(result);
    screening_ = false;
    raw_.clear();
    raw_.shrink_to_fit();
    warm_.clear();
  }
}

void OnlineFixedModelSel::freeze(const OfflineMc3Result& result) {
  if (result.distinct_models.empty())
    throw std::logic_error("OnlineFixedModelSel: screening produced no models");

  const Eigen::MatrixXd X = aggregate_X();
  const Eigen::VectorXd y = aggregate_y();
  frozen_.reserve(result.distinct_models.size());
  for (const RankedModel& rm : result.distinct_models) {
    const Eigen::MatrixXd sub = submodel_design(X, rm.model);
    const Eigen::VectorXd* init = nullptr;
    auto w = warm_.find(rm.model);
    if (w != warm_.end()) init = &w->second;
    const LogisticFit fit = irls_fit(sub, y, options_.irls, init);

    FixedModelEntry entry;
    entry.gamma = rm.model;
    entry.renew = RenewableState::from_parts(fit.beta,
                                             logistic_information(sub, fit.beta),
                                             n_seen_, options_.irls.ridge_lambda);
    entry.loglik = logistic_loglik(sub, y, fit.beta);
    frozen_.push_back(std::move(entry));
  }
}

void OnlineFixedModelSel::frozen_step(const BatchData& batch) {
  n_seen_ += batch.rows();
  last_acceptance_ = std::numeric_limits<double>::quiet_NaN();
  last_distinct_ = frozen_.size();
  last_renew_failures_ = 0;
  const double log_n = std::log(static_cast<double>(n_seen_));

  std::vector<double> log_w(frozen_.size());
  for (std::size_t k = 0; k < frozen_.size(); ++k) {
    FixedModelEntry& entry = frozen_[k];

    BatchData sub;
    sub.X = submodel_design(batch.X, entry.gamma);
    sub.y = batch.y;
    sub.batch_index = batch.batch_index;

    // The historical log-likelihood at the renewed estimate is approximated
    // by its second-order expansion around the previous estimate, whose score
    // is zero there; then the new batch contributes exactly.
    const Eigen::VectorXd beta_prev = entry.renew.beta();
    const Eigen::MatrixXd info_prev = entry.renew.info();
    const RenewReport report = entry.renew.renew(sub);
    if (!report.converged) ++last_renew_failures_;
    const Eigen::VectorXd delta = entry.renew.beta() - beta_prev;
    entry.loglik += -0.5 * delta.dot(info_prev * delta) +
                    logistic_loglik(sub.X, sub.y, entry.renew.beta());

    const double bic = -2.0 * entry.loglik + (entry.gamma.count() + 1) * log_n;
    log_w[k] = -0.5 * bic + log_prior(entry.gamma, options_.prior);
  }

  const double lse = log_sum_exp(log_w);
  inclusion_probs_.setZero();
  beta_bma_.setZero();
  std::vector<double> weights(frozen_.size());
  for (std::size_t k = 0; k < frozen_.size(); ++k) {
    const double w = std::exp(log_w[k] - lse);
    weights[k] = w;
    const FixedModelEntry& entry = frozen_[k];
    for (int j = 0; j < p_; ++j)
      if (entry.gamma.test(j)) inclusion_probs_(j) += w;
    beta_bma_ += w * expand_submodel_beta(entry.renew.beta(), entry.gamma);
  }
  // Normalized weights can overshoot one by rounding; keep probabilities
  // inside their contract.
  inclusion_probs_ = inclusion_probs_.cwiseMax(0.0).cwiseMin(1.0);

  std::vector<std::size_t> order(frozen_.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return weights[a] > weights[b];
  });
  last_top_.clear();
  for (std::size_t k : order) {
    if (static_cast<int>(last_top_.size()) >= options_.sampler.top_k) break;
    last_top_.emplace_back(frozen_[k].gamma, weights[k]);
  }
}

}  // namespace obms
