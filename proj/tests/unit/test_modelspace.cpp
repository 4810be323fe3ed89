#include <cmath>
#include <map>
#include <unordered_set>
#include <vector>

#include "doctest.h"
#include "obms/linear_bic.hpp"
#include "obms/modelspace.hpp"
#include "obms/rng.hpp"
#include "obms/suffstats.hpp"
#include "support/oracles.hpp"

using obms::BatchData;
using obms::log_posterior_unnorm;
using obms::log_prior;
using obms::log_sum_exp;
using obms::ModelIndicator;
using obms::ModelPrior;
using obms::Rng;
using obms::SuffStats;

namespace {

BatchData random_batch(int rows, int p, Rng& rng) {
  BatchData b;
  b.X.resize(rows, p + 1);
  b.y.resize(rows);
  for (int i = 0; i < rows; ++i) {
    b.X(i, 0) = 1.0;
    for (int j = 1; j <= p; ++j) b.X(i, j) = rng.next_normal();
    b.y(i) = rng.next_double() < 0.5 ? 1.0 : 0.0;
  }
  return b;
}

}  // namespace

TEST_CASE("indicator basics: construction, bits, popcount") {
  ModelIndicator m(5);
  CHECK(m.length() == 5);
  CHECK(m.count() == 0);
  m.set(2, true);
  m.set(4, true);
  CHECK(m.count() == 2);
  CHECK(m.test(2));
  CHECK(!m.test(3));
  m.set(2, true);  // idempotent set keeps the cached count honest
  CHECK(m.count() == 2);
  m.set(2, false);
  CHECK(m.count() == 1);
  CHECK(m.to_string() == "00001");

  CHECK(ModelIndicator::full_model(4).count() == 4);
  CHECK(ModelIndicator::null_model(4).count() == 0);
  CHECK_THROWS_AS(ModelIndicator(0), std::invalid_argument);
}

TEST_CASE("from_string and from_mask agree with to_string") {
  const ModelIndicator m = ModelIndicator::from_string("10110");
  CHECK(m.to_string() == "10110");
  CHECK(m.count() == 3);
  CHECK(m.test(0));
  CHECK(!m.test(1));

  // Bit j of the mask drives predictor j.
  const ModelIndicator k = ModelIndicator::from_mask(0b01101u, 5);
  CHECK(k.to_string() == "10110");
  CHECK(k == m);

  CHECK_THROWS_AS(ModelIndicator::from_string("1012"), std::invalid_argument);
  CHECK_THROWS_AS(ModelIndicator::from_mask(0, 65), std::invalid_argument);
}

TEST_CASE("flipped changes exactly one coordinate") {
  Rng rng(1);
  const int p = 70;  // spans two storage words
  ModelIndicator m(p);
  for (int j = 0; j < p; ++j) m.set(j, rng.next_double() < 0.5);
  for (int j = 0; j < p; ++j) {
    const ModelIndicator f = m.flipped(j);
    int hamming = 0;
    for (int i = 0; i < p; ++i) hamming += f.test(i) != m.test(i);
    CHECK(hamming == 1);
    CHECK(f.test(j) != m.test(j));
  }
}

TEST_CASE("ordering is lexicographic over the bit string") {
  Rng rng(2);
  const int p = 70;
  for (int trial = 0; trial < 300; ++trial) {
    ModelIndicator a(p), b(p);
    for (int j = 0; j < p; ++j) {
      a.set(j, rng.next_double() < 0.5);
      b.set(j, rng.next_double() < 0.5);
    }
    CHECK((a < b) == (a.to_string() < b.to_string()));
  }
  CHECK(ModelIndicator::from_string("011") < ModelIndicator::from_string("100"));
  CHECK(!(ModelIndicator::from_string("100") < ModelIndicator::from_string("100")));
}

TEST_CASE("hash respects equality and feeds unordered containers") {
  ModelIndicator::Hash h;
  const ModelIndicator a = ModelIndicator::from_string("0101");
  const ModelIndicator b = ModelIndicator::from_string("0101");
  CHECK(h(a) == h(b));

  std::unordered_set<ModelIndicator, ModelIndicator::Hash> set;
  for (std::uint64_t mask = 0; mask < 16; ++mask)
    set.insert(ModelIndicator::from_mask(mask, 4));
  CHECK(set.size() == 16);
  CHECK(set.count(ModelIndicator::from_string("1010")) == 1);
}

TEST_CASE("uniform prior is a constant") {
  const ModelPrior prior = ModelPrior::uniform();
  const double expected = -3.0 * std::log(2.0);
  for (std::uint64_t mask = 0; mask < 8; ++mask)
    CHECK(log_prior(ModelIndicator::from_mask(mask, 3), prior) ==
          doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("Beta(1,1) add-one prior ratio at p=4, k=1") {
  const ModelPrior prior = ModelPrior::beta_binomial(1.0, 1.0);
  const double lp1 = log_prior(ModelIndicator::from_string("1000"), prior);
  const double lp2 = log_prior(ModelIndicator::from_string("1100"), prior);
  CHECK(lp2 - lp1 == doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("Beta(1,1) endpoints and equal-size classes") {
  const ModelPrior prior = ModelPrior::beta_binomial(1.0, 1.0);
  const int p = 6;
  CHECK(log_prior(ModelIndicator::null_model(p), prior) ==
        doctest::Approx(log_prior(ModelIndicator::full_model(p), prior))
            .epsilon(1e-12));
  const double k2a = log_prior(ModelIndicator::from_string("110000"), prior);
  const double k2b = log_prior(ModelIndicator::from_string("000011"), prior);
  CHECK(k2a == doctest::Approx(k2b).epsilon(1e-14));

  // The Beta-Binomial prior must normalize over the whole space.
  std::vector<double> lp;
  for (std::uint64_t mask = 0; mask < (1u << p); ++mask)
    lp.push_back(log_prior(ModelIndicator::from_mask(mask, p), prior));
  CHECK(std::exp(log_sum_exp(lp)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("prior hyperparameters must be positive") {
  CHECK_THROWS_AS(ModelPrior::beta_binomial(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelPrior::beta_binomial(1.0, -2.0), std::invalid_argument);
}

TEST_CASE("models with identical extracted summaries have equal posteriors") {
  // A duplicated predictor column makes {x1} and {x2} indistinguishable.
  Rng rng(3);
  BatchData b = random_batch(30, 2, rng);
  b.X.col(2) = b.X.col(1);
  SuffStats s(2);
  s.update(b);
  const ModelPrior prior = ModelPrior::uniform();
  CHECK(log_posterior_unnorm(ModelIndicator::from_string("10"), s, prior) ==
        log_posterior_unnorm(ModelIndicator::from_string("01"), s, prior));
}

TEST_CASE("p=2 normalized posterior sums to one") {
  Rng rng(4);
  SuffStats s(2);
  s.update(random_batch(40, 2, rng));
  const ModelPrior prior = ModelPrior::uniform();
  std::vector<double> lp;
  for (std::uint64_t mask = 0; mask < 4; ++mask)
    lp.push_back(log_posterior_unnorm(ModelIndicator::from_mask(mask, 2), s, prior));
  const double lse = log_sum_exp(lp);
  double total = 0.0;
  for (double v : lp) total += std::exp(v - lse);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("p=3 normalized posterior matches the independent enumeration") {
  Rng rng(5);
  SuffStats s(3);
  s.update(random_batch(60, 3, rng));
  const ModelPrior prior = ModelPrior::uniform();

  std::vector<double> lp;
  for (std::uint64_t mask = 0; mask < 8; ++mask)
    lp.push_back(log_posterior_unnorm(ModelIndicator::from_mask(mask, 3), s, prior));

  const std::vector<double> expected = oracle::normalize_log_masses(lp);
  const double lse = log_sum_exp(lp);
  for (std::size_t k = 0; k < lp.size(); ++k)
    CHECK(std::exp(lp[k] - lse) == doctest::Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("posterior probabilities are invariant to a BIC shift") {
  // Adding a constant to every model's BIC shifts every log mass by -c/2
  // and must leave the normalized weights untouched.
  std::vector<double> lp = {-4.0, -1.5, -9.0, -2.25};
  const double c = 137.0;
  std::vector<double> shifted;
  for (double v : lp) shifted.push_back(v - 0.5 * c);
  const double lse = log_sum_exp(lp);
  const double lse_shifted = log_sum_exp(shifted);
  for (std::size_t k = 0; k < lp.size(); ++k)
    CHECK(std::exp(lp[k] - lse) ==
          doctest::Approx(std::exp(shifted[k] - lse_shifted)).epsilon(1e-12));
}

TEST_CASE("log_sum_exp handles sentinels and known values") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(log_sum_exp({0.0, 0.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(log_sum_exp({-inf, 0.0, -inf}) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(log_sum_exp({-inf, -inf}) == -inf);
  // Magnitudes far beyond exp range must not overflow.
  CHECK(log_sum_exp({1e4, 1e4}) ==
        doctest::Approx(1e4 + std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("unfittable models carry minus-infinity posterior") {
  Rng rng(6);
  BatchData b = random_batch(25, 2, rng);
  b.X.col(2) = b.X.col(1);  // duplicate column: the pair is rank deficient
  SuffStats s(2);
  s.update(b);
  const double lp = log_posterior_unnorm(ModelIndicator::from_string("11"), s,
                                         ModelPrior::uniform());
  CHECK(lp == -std::numeric_limits<double>::infinity());
}
