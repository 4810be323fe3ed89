#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace obms {

class SuffStats;

// Inclusion indicator over the p candidate predictors. The intercept is in
// every model and is never indexed here: bit j refers to predictor j+1 of the
// design matrix. Immutable length, cached popcount, hashable, and totally
// ordered (lexicographic over the 0/1 string) so caches and reports have a
// deterministic key order.
class ModelIndicator {
 public:
  // Zero-length placeholder; every real model comes from the factories below.
  ModelIndicator() = default;
  explicit ModelIndicator(int p);
  static ModelIndicator null_model(int p) { return ModelIndicator(p); }
  static ModelIndicator full_model(int p);
  static ModelIndicator from_string(std::string_view bits);
  // Bits taken from the low end of `mask`; requires p <= 64.
  static ModelIndicator from_mask(std::uint64_t mask, int p);

  int length() const { return p_; }
  int count() const { return count_; }
  bool test(int j) const;
  void set(int j, bool value);
  ModelIndicator flipped(int j) const;

  std::string to_string() const;

  bool operator==(const ModelIndicator& other) const = default;
  bool operator<(const ModelIndicator& other) const;

  struct Hash {
    std::size_t operator()(const ModelIndicator& m) const;
  };

 private:
  std::vector<std::uint64_t> words_;
  int p_ = 0;
  int count_ = 0;
};

enum class PriorKind { kUniform, kBetaBinomial };

// Prior over the model space: uniform p(gamma) = 2^-p, or Beta-Binomial with
// a Beta(a, b) prior on the inclusion probability.
struct ModelPrior {
  PriorKind kind = PriorKind::kUniform;
  double a = 1.0;
  double b = 1.0;

  static ModelPrior uniform() { return ModelPrior{PriorKind::kUniform, 1.0, 1.0}; }
  static ModelPrior beta_binomial(double a, double b);
};

double log_prior(const ModelIndicator& gamma, const ModelPrior& prior);

// Unnormalized log posterior mass of a model: -BIC(gamma)/2 + log p(gamma),
// with the BIC computed from the linear-model sufficient statistics.
// Sentinel (unfittable) models map to -infinity.
double log_posterior_unnorm(const ModelIndicator& gamma, const SuffStats& s,
                            const ModelPrior& prior);

// log(sum_i exp(x_i)) with the usual max shift; -infinity entries are skipped.
double log_sum_exp(const std::vector<double>& x);

}  // namespace obms
