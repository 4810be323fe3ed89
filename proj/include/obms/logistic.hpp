#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "obms/suffstats.hpp"

namespace obms {

// Result of a Newton/IRLS fit of the (optionally ridge-penalized) logistic
// log-likelihood. `converged` means the penalized score reached the gradient
// tolerance; otherwise `beta` is the last iterate.
struct LogisticFit {
  Eigen::VectorXd beta;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  double loglik = 0.0;  // unpenalized log-likelihood at beta
};

struct IrlsOptions {
  double ridge_lambda = 0.0;  // 0 = MLE; >0 = normal-prior posterior mode
  double tol = 1e-8;          // infinity-norm of the penalized score
  int max_iter = 50;
};

// Newton-Raphson with step halving on the penalized deviance. X must carry
// the intercept column; y must be 0/1. With ridge_lambda = 0 and separated
// data the MLE does not exist: the fit returns non-converged and the caller
// should supply a ridge. `start` warm-starts the iteration (null = zeros).
LogisticFit irls_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const IrlsOptions& opts = {},
                     const Eigen::VectorXd* start = nullptr);

// exp(eta) / (1 + exp(eta)), computed without overflow for any eta.
double sigmoid(double eta);

// Unpenalized logistic log-likelihood at beta.
double logistic_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& beta);

// Observed information X' W X at beta (data term only, no ridge).
Eigen::MatrixXd logistic_information(const Eigen::MatrixXd& X,
                                     const Eigen::VectorXd& beta);

struct RenewReport {
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
};

// Online full-model logistic estimate: the coefficient vector plus the
// accumulated observed information of all past batches, evaluated at the
// historical estimates. Updating with a new batch never touches old records.
class RenewableState {
 public:
  // Offline fit on the access-window rows, then information at the estimate.
  static RenewableState init_from_window(const Eigen::MatrixXd& X,
                                         const Eigen::VectorXd& y,
                                         const IrlsOptions& opts = {});

  static RenewableState from_parts(const Eigen::VectorXd& beta,
                                   const Eigen::MatrixXd& info,
                                   std::int64_t n_seen, double ridge_lambda);

  // Damped Newton on the current batch score plus the linearized historical
  // score info * (beta_prev - beta). On convergence the batch information is
  // accumulated at the new estimate; otherwise beta is kept and the batch
  // information is accumulated at the previous estimate.
  RenewReport renew(const BatchData& batch, double tol = 1e-8, int max_iter = 50);

  const Eigen::VectorXd& beta() const { return beta_; }
  const Eigen::MatrixXd& info() const { return info_; }
  std::int64_t n_seen() const { return n_seen_; }
  double ridge_lambda() const { return ridge_lambda_; }

 private:
  Eigen::VectorXd beta_;
  Eigen::MatrixXd info_;
  std::int64_t n_seen_ = 0;
  double ridge_lambda_ = 0.0;
};

namespace diag {
// Count of irls_fit invocations and the column count of the most recent one.
// The online-changing pipeline is required never to run a per-model logistic
// fit; tests assert on these.
std::uint64_t irls_call_count();
int irls_last_cols();
void reset_irls_counters();
}  // namespace diag

}  // namespace obms
