#include <cmath>
#include <limits>

#include "doctest.h"
#include "obms/baselines.hpp"
#include "obms/mpm.hpp"
#include "obms/rng.hpp"
#include "obms/suffstats.hpp"

using obms::ModelIndicator;
using obms::MpmResult;
using obms::Rng;
using obms::select_mpm;
using obms::threshold_beta;

TEST_CASE("inclusion at one half is inclusive") {
  Eigen::VectorXd probs(3);
  probs << 0.9, 0.5, 0.49;
  const MpmResult res = select_mpm(probs);
  CHECK(res.gamma.to_string() == "110");
  CHECK(res.inclusion_probs == probs);
}

TEST_CASE("all-low probabilities select the null model") {
  Eigen::VectorXd probs(4);
  probs << 0.0, 0.2, 0.49999, 0.1;
  CHECK(select_mpm(probs).gamma == ModelIndicator::null_model(4));
}

TEST_CASE("all-high probabilities select the full model") {
  Eigen::VectorXd probs(3);
  probs << 1.0, 0.5, 0.75;
  CHECK(select_mpm(probs).gamma == ModelIndicator::full_model(3));
}

TEST_CASE("invalid probabilities are rejected") {
  Eigen::VectorXd bad(2);
  bad << 0.5, -0.1;
  CHECK_THROWS_AS(select_mpm(bad), std::invalid_argument);
  bad << 1.1, 0.5;
  CHECK_THROWS_AS(select_mpm(bad), std::invalid_argument);
  bad << 0.5, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(select_mpm(bad), std::invalid_argument);
  Eigen::VectorXd empty(0);
  CHECK_THROWS_AS(select_mpm(empty), std::invalid_argument);
}

TEST_CASE("selection agrees with an exhaustive posterior") {
  const int p = 8;
  Rng rng(500);
  obms::BatchData b;
  const int n = 300;
  b.X.resize(n, p + 1);
  b.y.resize(n);
  for (int i = 0; i < n; ++i) {
    b.X(i, 0) = 1.0;
    for (int j = 1; j <= p; ++j) b.X(i, j) = rng.next_normal();
    const double eta = -0.1 + 0.9 * b.X(i, 1) - 0.8 * b.X(i, 2);
    b.y(i) = rng.next_double() < obms::sigmoid(eta) ? 1.0 : 0.0;
  }
  obms::SuffStats s(p);
  s.update(b);
  const obms::EnumerationResult exact =
      obms::enumerate_bma(s, obms::ModelPrior::uniform());

  const MpmResult res = select_mpm(exact.inclusion_probs);
  for (int j = 0; j < p; ++j)
    CHECK(res.gamma.test(j) == (exact.inclusion_probs(j) >= 0.5));
}

TEST_CASE("thresholding zeroes exactly the de-selected slopes") {
  Eigen::VectorXd beta(3);
  beta << 0.3, -0.2, 0.7;
  const Eigen::VectorXd out =
      threshold_beta(beta, ModelIndicator::from_string("01"));
  REQUIRE(out.size() == 3);
  CHECK(out(0) == 0.3);
  CHECK(out(1) == 0.0);
  CHECK(out(2) == 0.7);

  CHECK(threshold_beta(beta, ModelIndicator::full_model(2)) == beta);
  const Eigen::VectorXd nulled =
      threshold_beta(beta, ModelIndicator::null_model(2));
  CHECK(nulled(0) == 0.3);
  CHECK(nulled(1) == 0.0);
  CHECK(nulled(2) == 0.0);
}

TEST_CASE("thresholding is idempotent and support-faithful") {
  Rng rng(501);
  Eigen::VectorXd beta(6);
  for (int i = 0; i < 6; ++i) beta(i) = rng.next_normal();
  const ModelIndicator gamma = ModelIndicator::from_string("10110");
  const Eigen::VectorXd once = threshold_beta(beta, gamma);
  CHECK(threshold_beta(once, gamma) == once);
  for (int j = 0; j < 5; ++j) {
    if (gamma.test(j))
      CHECK(once(j + 1) == beta(j + 1));
    else
      CHECK(once(j + 1) == 0.0);
  }
}

TEST_CASE("selection ignores how far a probability sits from one half") {
  Eigen::VectorXd a(3), b(3);
  a << 0.51, 0.99, 0.02;
  b << 1.0, 0.5, 0.49;
  CHECK(select_mpm(a).gamma == select_mpm(b).gamma);
}

TEST_CASE("thresholding rejects a mismatched coefficient length") {
  Eigen::VectorXd beta(3);
  beta << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(threshold_beta(beta, ModelIndicator::full_model(3)),
                  std::invalid_argument);
}
