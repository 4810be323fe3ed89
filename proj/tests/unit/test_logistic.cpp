#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "obms/logistic.hpp"
#include "obms/rng.hpp"
#include "obms/suffstats.hpp"
#include "support/oracles.hpp"

using obms::BatchData;
using obms::IrlsOptions;
using obms::irls_fit;
using obms::LogisticFit;
using obms::logistic_information;
using obms::logistic_loglik;
using obms::RenewableState;
using obms::RenewReport;
using obms::Rng;
using obms::sigmoid;

namespace {

// Draws one design/response batch from the logistic model at beta_true.
BatchData logistic_batch(int rows, const Eigen::VectorXd& beta_true, Rng& rng,
                         int batch_index = 1) {
  const int cols = static_cast<int>(beta_true.size());
  BatchData b;
  b.batch_index = batch_index;
  b.X.resize(rows, cols);
  b.y.resize(rows);
  for (int i = 0; i < rows; ++i) {
    b.X(i, 0) = 1.0;
    for (int j = 1; j < cols; ++j) b.X(i, j) = rng.next_normal();
    const double eta = b.X.row(i).dot(beta_true);
    b.y(i) = rng.next_double() < sigmoid(eta) ? 1.0 : 0.0;
  }
  return b;
}

Eigen::VectorXd alternating_beta(int p, double scale) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
  beta(0) = 0.2;
  for (int j = 1; j <= p; ++j) beta(j) = (j % 2 == 0 ? -scale : scale);
  return beta;
}

}  // namespace

TEST_CASE("sigmoid is bounded, symmetric, and overflow-proof") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(5000.0) == 1.0);
  CHECK(sigmoid(-5000.0) == 0.0);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sigmoid(1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("converged IRLS zeroes the score") {
  Rng rng(300);
  const Eigen::VectorXd beta_true = alternating_beta(4, 0.8);
  const BatchData b = logistic_batch(500, beta_true, rng);

  const LogisticFit fit = irls_fit(b.X, b.y);
  REQUIRE(fit.converged);
  CHECK(fit.grad_norm <= 1e-8);

  const Eigen::VectorXd score = oracle::logistic_gradient(b.X, b.y, fit.beta);
  CHECK(score.lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK(fit.loglik ==
        doctest::Approx(logistic_loglik(b.X, b.y, fit.beta)).epsilon(1e-12));
}

TEST_CASE("ridge zeroes the penalized score") {
  Rng rng(301);
  const Eigen::VectorXd beta_true = alternating_beta(3, 1.0);
  const BatchData b = logistic_batch(300, beta_true, rng);

  IrlsOptions opts;
  opts.ridge_lambda = 2.5;
  const LogisticFit fit = irls_fit(b.X, b.y, opts);
  REQUIRE(fit.converged);
  const Eigen::VectorXd score =
      oracle::logistic_gradient(b.X, b.y, fit.beta, opts.ridge_lambda);
  CHECK(score.lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("separated data does not converge unpenalized but does with ridge") {
  // All-ones response: the unpenalized likelihood climbs forever.
  BatchData b;
  const int n = 40;
  Rng rng(302);
  b.X.resize(n, 2);
  b.y.resize(n);
  for (int i = 0; i < n; ++i) {
    b.X(i, 0) = 1.0;
    b.X(i, 1) = rng.next_normal();
    b.y(i) = 1.0;
  }

  // The unpenalized intercept runs away until the gradient underflows the
  // tolerance; finite, but far outside any plausible coefficient range.
  const LogisticFit raw = irls_fit(b.X, b.y);
  CHECK(raw.beta(0) > 5.0);

  IrlsOptions opts;
  opts.ridge_lambda = 1.0;
  const LogisticFit ridged = irls_fit(b.X, b.y, opts);
  REQUIRE(ridged.converged);
  CHECK(std::isfinite(ridged.beta(0)));
  CHECK(ridged.beta(0) > 0.0);
  CHECK(ridged.beta(0) < raw.beta(0));
  CHECK(std::abs(ridged.beta(0)) > std::abs(ridged.beta(1)));
}

TEST_CASE("null truth keeps the estimate near zero") {
  Rng rng(303);
  const Eigen::VectorXd beta_true = Eigen::VectorXd::Zero(6);
  const BatchData b = logistic_batch(10000, beta_true, rng);
  const LogisticFit fit = irls_fit(b.X, b.y);
  REQUIRE(fit.converged);
  CHECK(fit.beta.lpNorm<Eigen::Infinity>() <= 0.1);
}

TEST_CASE("a warm start at the optimum converges immediately") {
  Rng rng(304);
  const Eigen::VectorXd beta_true = alternating_beta(4, 0.6);
  const BatchData b = logistic_batch(400, beta_true, rng);

  const LogisticFit cold = irls_fit(b.X, b.y);
  REQUIRE(cold.converged);
  const LogisticFit warm = irls_fit(b.X, b.y, {}, &cold.beta);
  REQUIRE(warm.converged);
  CHECK(warm.iterations <= 2);
  CHECK((warm.beta - cold.beta).lpNorm<Eigen::Infinity>() <= 1e-10);

  Eigen::VectorXd wrong = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(irls_fit(b.X, b.y, {}, &wrong), std::invalid_argument);
}

TEST_CASE("renewed estimates track the full-data MLE") {
  Rng rng(305);
  const int p = 20;
  const int n_b = 1000;
  const int batches = 6;
  const Eigen::VectorXd beta_true = alternating_beta(p, 0.3);

  std::vector<BatchData> all;
  for (int b = 1; b <= batches; ++b)
    all.push_back(logistic_batch(n_b, beta_true, rng, b));

  RenewableState state = RenewableState::init_from_window(all[0].X, all[0].y);
  CHECK(state.n_seen() == n_b);
  for (int b = 1; b < batches; ++b) {
    const RenewReport rep = state.renew(all[b]);
    CHECK(rep.converged);
  }
  CHECK(state.n_seen() == static_cast<std::int64_t>(n_b) * batches);

  Eigen::MatrixXd X_all(n_b * batches, p + 1);
  Eigen::VectorXd y_all(n_b * batches);
  for (int b = 0; b < batches; ++b) {
    X_all.middleRows(b * n_b, n_b) = all[b].X;
    y_all.segment(b * n_b, n_b) = all[b].y;
  }
  const LogisticFit offline = irls_fit(X_all, y_all);
  REQUIRE(offline.converged);
  CHECK((state.beta() - offline.beta).lpNorm<Eigen::Infinity>() <= 1e-2);
}

TEST_CASE("accumulated information only grows") {
  Rng rng(306);
  const Eigen::VectorXd beta_true = alternating_beta(4, 0.5);
  RenewableState state = RenewableState::init_from_window(
      logistic_batch(200, beta_true, rng).X,
      logistic_batch(200, beta_true, rng).y);

  for (int b = 2; b <= 5; ++b) {
    const Eigen::MatrixXd before = state.info();
    state.renew(logistic_batch(200, beta_true, rng, b));
    const Eigen::MatrixXd delta = state.info() - before;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(delta);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("history pins slopes while a shifted batch moves the intercept") {
  Rng rng(307);
  const int p = 4;
  Eigen::VectorXd beta_true = alternating_beta(p, 0.7);
  const BatchData warmup = logistic_batch(4000, beta_true, rng);
  RenewableState state = RenewableState::init_from_window(warmup.X, warmup.y);
  const Eigen::VectorXd before = state.beta();

  // New batch: predictors all zero, responses mostly ones. Only the intercept
  // has any data signal; history holds everything else in place.
  BatchData post;
  const int n = 400;
  post.batch_index = 2;
  post.X = Eigen::MatrixXd::Zero(n, p + 1);
  post.X.col(0).setOnes();
  post.y.resize(n);
  for (int i = 0; i < n; ++i) post.y(i) = rng.next_double() < 0.9 ? 1.0 : 0.0;
  const RenewReport rep = state.renew(post);
  CHECK(rep.converged);

  const Eigen::VectorXd after = state.beta();
  CHECK(std::abs(after(0) - before(0)) > 0.05);
  for (int j = 1; j <= p; ++j) CHECK(std::abs(after(j) - before(j)) < 0.05);
}

TEST_CASE("a zero-iteration renewal still books the batch") {
  Rng rng(308);
  const Eigen::VectorXd beta_true = alternating_beta(3, 0.5);
  const BatchData init = logistic_batch(300, beta_true, rng);
  RenewableState state = RenewableState::init_from_window(init.X, init.y);
  const Eigen::VectorXd beta_before = state.beta();
  const Eigen::MatrixXd info_before = state.info();
  const std::int64_t n_before = state.n_seen();

  const BatchData next = logistic_batch(150, beta_true, rng, 2);
  const RenewReport rep = state.renew(next, 1e-8, 0);
  CHECK(!rep.converged);
  CHECK(rep.iterations == 0);
  CHECK(state.beta() == beta_before);
  CHECK(state.n_seen() == n_before + 150);
  // Non-converged: the batch information is taken at the kept estimate.
  const Eigen::MatrixXd expected =
      info_before + logistic_information(next.X, beta_before);
  CHECK((state.info() - expected).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("renew rejects a batch of the wrong width") {
  Rng rng(309);
  const Eigen::VectorXd beta_true = alternating_beta(3, 0.5);
  const BatchData init = logistic_batch(200, beta_true, rng);
  RenewableState state = RenewableState::init_from_window(init.X, init.y);

  const Eigen::VectorXd wide_truth = alternating_beta(5, 0.5);
  const BatchData wide = logistic_batch(100, wide_truth, rng, 2);
  CHECK_THROWS_AS(state.renew(wide), std::invalid_argument);
}

TEST_CASE("estimation error shrinks as batches accumulate") {
  const int p = 5;
  const int n_b = 500;
  const Eigen::VectorXd beta_true = alternating_beta(p, 0.6);

  int improved = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(900 + seed);
    const BatchData first = logistic_batch(n_b, beta_true, rng);
    RenewableState state = RenewableState::init_from_window(first.X, first.y);
    double err_early = std::numeric_limits<double>::quiet_NaN();
    for (int b = 2; b <= 10; ++b) {
      state.renew(logistic_batch(n_b, beta_true, rng, b));
      if (b == 2) err_early = (state.beta() - beta_true).norm();
    }
    const double err_late = (state.beta() - beta_true).norm();
    if (err_late <= err_early) ++improved;
  }
  CHECK(improved >= 3);
}

TEST_CASE("diagnostic counters follow irls_fit calls") {
  obms::diag::reset_irls_counters();
  CHECK(obms::diag::irls_call_count() == 0);

  Rng rng(310);
  const BatchData b = logistic_batch(100, alternating_beta(2, 0.5), rng);
  irls_fit(b.X, b.y);
  CHECK(obms::diag::irls_call_count() == 1);
  CHECK(obms::diag::irls_last_cols() == 3);
  obms::diag::reset_irls_counters();
}
