#include "obms/logistic.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace obms {

namespace {

std::atomic<std::uint64_t> g_irls_calls{0};
std::atomic<int> g_irls_last_cols{0};

double log1pexp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Weight floor keeps X'WX factorizable when fitted probabilities saturate.
constexpr double kWeightFloor = 1e-10;

void mean_and_weight(const Eigen::VectorXd& eta, Eigen::VectorXd& pi,
                     Eigen::VectorXd& w) {
  const Eigen::Index n = eta.size();
  pi.resize(n);
  w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = sigmoid(eta(i));
    pi(i) = m;
    w(i) = std::max(m * (1.0 - m), kWeightFloor);
  }
}

double penalized_deviance(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& beta, double lambda) {
  return -2.0 * logistic_loglik(X, y, beta) + lambda * beta.squaredNorm();
}

}  // namespace

double sigmoid(double eta) {
  return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta))
                    : std::exp(eta) / (1.0 + std::exp(eta));
}

double logistic_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = X * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    ll += y(i) * eta(i) - log1pexp(eta(i));
  return ll;
}

Eigen::MatrixXd logistic_information(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = X * beta;
  Eigen::VectorXd pi, w;
  mean_and_weight(eta, pi, w);
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  info.selfadjointView<Eigen::Upper>().rankUpdate(
      (X.array().colwise() * w.array().sqrt()).matrix().transpose(), 1.0);
  return info.selfadjointView<Eigen::Upper>();
}

LogisticFit irls_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const IrlsOptions& opts, const Eigen::VectorXd* start) {
  if (X.rows() != y.size())
    throw std::invalid_argument("irls_fit: X rows must match y length");
  if (start && start->size() != X.cols())
    throw std::invalid_argument("irls_fit: start length must match X columns");
  g_irls_calls.fetch_add(1, std::memory_order_relaxed);
  g_irls_last_cols.store(static_cast<int>(X.cols()), std::memory_order_relaxed);

  const Eigen::Index d = X.cols();
  const double lambda = opts.ridge_lambda;

  LogisticFit fit;
  fit.beta = start ? *start : Eigen::VectorXd::Zero(d);
  double dev = penalized_deviance(X, y, fit.beta, lambda);

  Eigen::VectorXd pi, w;
  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::VectorXd eta = X * fit.beta;
    mean_and_weight(eta, pi, w);

    Eigen::VectorXd grad = X.transpose() * (y - pi) - lambda * fit.beta;
    fit.grad_norm = grad.lpNorm<Eigen::Infinity>();
    fit.iterations = it;
    if (fit.grad_norm <= opts.tol) {
      fit.converged = true;
      break;
    }

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    h.selfadjointView<Eigen::Upper>().rankUpdate(
        (X.array().colwise() * w.array().sqrt()).matrix().transpose(), 1.0);
    h = h.selfadjointView<Eigen::Upper>();
    h.diagonal().array() += lambda;

    const Eigen::VectorXd delta = h.ldlt().solve(grad);
    if (!delta.allFinite()) break;

    // Near the optimum a full Newton step gains less than float noise; the
    // slack keeps the line search from rejecting it and stalling.
    const double slack = 1e-10 * (1.0 + std::abs(dev));
    double step = 1.0;
    Eigen::VectorXd candidate = fit.beta + delta;
    double cand_dev = penalized_deviance(X, y, candidate, lambda);
    int halvings = 0;
    while (!(cand_dev <= dev + slack) && halvings < 30) {
      step *= 0.5;
      candidate = fit.beta + step * delta;
      cand_dev = penalized_deviance(X, y, candidate, lambda);
      ++halvings;
    }
    if (!(cand_dev <= dev + slack)) break;  // no descent direction left

    fit.beta = candidate;
    dev = cand_dev;
  }

  if (!fit.converged) {
    const Eigen::VectorXd eta = X * fit.beta;
    mean_and_weight(eta, pi, w);
    fit.grad_norm =
        (X.transpose() * (y - pi) - lambda * fit.beta).lpNorm<Eigen::Infinity>();
    fit.iterations = opts.max_iter;
  }
  fit.loglik = logistic_loglik(X, y, fit.beta);
  return fit;
}

RenewableState RenewableState::init_from_window(const Eigen::MatrixXd& X,
                                                const Eigen::VectorXd& y,
                                                const IrlsOptions& opts) {
  const LogisticFit fit = irls_fit(X, y, opts);
  RenewableState state;
  state.beta_ = fit.beta;
  state.info_ = logistic_information(X, fit.beta);
  state.n_seen_ = X.rows();
  state.ridge_lambda_ = opts.ridge_lambda;
  return state;
}

RenewableState RenewableState::from_parts(const Eigen::VectorXd& beta,
                                          const Eigen::MatrixXd& info,
                                          std::int64_t n_seen, double ridge_lambda) {
  RenewableState state;
  state.beta_ = beta;
  state.info_ = info;
  state.n_seen_ = n_seen;
  state.ridge_lambda_ = ridge_lambda;
  return state;
}

RenewReport RenewableState::renew(const BatchData& batch, double tol, int max_iter) {
  if (batch.X.cols() != beta_.size())
    throw std::invalid_argument("renew: batch column count mismatch");

  const Eigen::MatrixXd& X = batch.X;
  const Eigen::VectorXd& y = batch.y;
  const Eigen::VectorXd beta_prev = beta_;

  // Historical precision: accumulated data information plus the normal-prior
  // precision (counted once, not per batch).
  Eigen::MatrixXd hist = info_;
  hist.diagonal().array() += ridge_lambda_;

  // Local surrogate objective: current-batch log-likelihood minus the
  // quadratic historical term; its stationary point is the renewable
  // estimating equation.
  auto surrogate = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd d = b - beta_prev;
    return logistic_loglik(X, y, b) - 0.5 * d.dot(hist * d);
  };

  RenewReport report;
  Eigen::VectorXd beta = beta_prev;
  double obj = surrogate(beta);
  Eigen::VectorXd pi, w;

  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd eta = X * beta;
    mean_and_weight(eta, pi, w);
    const Eigen::VectorXd score =
        X.transpose() * (y - pi) + hist * (beta_prev - beta);
    report.grad_norm = score.lpNorm<Eigen::Infinity>();
    report.iterations = it;
    if (report.grad_norm <= tol) {
      report.converged = true;
      break;
    }

    Eigen::MatrixXd h = hist;
    h.selfadjointView<Eigen::Upper>().rankUpdate(
        (X.array().colwise() * w.array().sqrt()).matrix().transpose(), 1.0);
    h = h.selfadjointView<Eigen::Upper>();

    const Eigen::VectorXd delta = h.ldlt().solve(score);
    if (!delta.allFinite()) break;

    // Same noise slack as irls_fit: a full step whose gain is below float
    // noise must still be taken or the iteration stalls short of tol.
    const double slack = 1e-10 * (1.0 + std::abs(obj));
    double step = 1.0;
    Eigen::VectorXd candidate = beta + delta;
    double cand_obj = surrogate(candidate);
    int halvings = 0;
    while (!(cand_obj >= obj - slack) && halvings < 30) {
      step *= 0.5;
      candidate = beta + step * delta;
      cand_obj = surrogate(candidate);
      ++halvings;
    }
    if (!(cand_obj >= obj - slack)) break;

    beta = candidate;
    obj = cand_obj;
  }

  if (report.converged) {
    beta_ = beta;
    info_ += logistic_information(X, beta);
  } else {
    info_ += logistic_information(X, beta_prev);
  }
  n_seen_ += batch.X.rows();
  return report;
}

namespace diag {
std::uint64_t irls_call_count() { return g_irls_calls.load(std::memory_order_relaxed); }
int irls_last_cols() { return g_irls_last_cols.load(std::memory_order_relaxed); }
void reset_irls_counters() {
  g_irls_calls.store(0, std::memory_order_relaxed);
  g_irls_last_cols.store(0, std::memory_order_relaxed);
}
}  // namespace diag

}  // namespace obms
