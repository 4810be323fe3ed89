#include "obms/modelspace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "obms/linear_bic.hpp"

namespace obms {

namespace {
constexpr int kWordBits = 64;

int word_count(int p) { return (p + kWordBits - 1) / kWordBits; }
}  // namespace

ModelIndicator::ModelIndicator(int p) : p_(p) {
  if (p < 1) throw std::invalid_argument("ModelIndicator: p must be >= 1");
  words_.assign(word_count(p), 0);
}

ModelIndicator ModelIndicator::full_model(int p) {
  ModelIndicator m(p);
  for (int j = 0; j < p; ++j) m.set(j, true);
  return m;
}

ModelIndicator ModelIndicator::from_string(std::string_view bits) {
  ModelIndicator m(static_cast<int>(bits.size()));
  for (int j = 0; j < m.p_; ++j) {
    const char c = bits[static_cast<std::size_t>(j)];
    if (c != '0' && c != '1')
      throw std::invalid_argument("ModelIndicator: string must be 0/1");
    m.set(j, c == '1');
  }
  return m;
}

ModelIndicator ModelIndicator::from_mask(std::uint64_t mask, int p) {
  if (p > kWordBits) throw std::invalid_argument("from_mask: p must be <= 64");
  ModelIndicator m(p);
  for (int j = 0; j < p; ++j) m.set(j, (mask >> j) & 1u);
  return m;
}

bool ModelIndicator::test(int j) const {
  return (words_[static_cast<std::size_t>(j / kWordBits)] >> (j % kWordBits)) & 1u;
}

void ModelIndicator::set(int j, bool value) {
  if (j < 0 || j >= p_) throw std::out_of_range("ModelIndicator::set");
  std::uint64_t& w = words_[static_cast<std::size_t>(j / kWordBits)];
  const std::uint64_t bit = std::uint64_t{1} << (j % kWordBits);
  if (value && !(w & bit)) {
    w |= bit;
    ++count_;
  } else if (!value && (w & bit)) {
    w &= ~bit;
    --count_;
  }
}

ModelIndicator ModelIndicator::flipped(int j) const {
  ModelIndicator m(*this);
  m.set(j, !m.test(j));
  return m;
}

std::string ModelIndicator::to_string() const {
  std::string s(static_cast<std::size_t>(p_), '0');
  for (int j = 0; j < p_; ++j)
    if (test(j)) s[static_cast<std::size_t>(j)] = '1';
  return s;
}

bool ModelIndicator::operator<(const ModelIndicator& other) const {
  if (p_ != other.p_) return p_ < other.p_;
  // Lexicographic over the bit string: the lowest differing index decides,
  // and a 0 there sorts first.
  for (std::size_t w = 0; w < words_.size(); ++w) {
    const std::uint64_t diff = words_[w] ^ other.words_[w];
    if (diff != 0) {
      const int k = std::countr_zero(diff);
      return ((words_[w] >> k) & 1u) == 0;
    }
  }
  return false;
}

std::size_t ModelIndicator::Hash::operator()(const ModelIndicator& m) const {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(m.p_);
  for (std::uint64_t w : m.words_) {
    h ^= w + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h *= 0xBF58476D1CE4E5B9ULL;
    h ^= h >> 29;
  }
  return static_cast<std::size_t>(h);
}

ModelPrior ModelPrior::beta_binomial(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("ModelPrior: Beta hyperparameters must be positive");
  return ModelPrior{PriorKind::kBetaBinomial, a, b};
}

namespace {
double log_beta(double x, double y) {
  return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y);
}
}  // namespace

double log_prior(const ModelIndicator& gamma, const ModelPrior& prior) {
  const int p = gamma.length();
  switch (prior.kind) {
    case PriorKind::kUniform:
      return -p * std::log(2.0);
    case PriorKind::kBetaBinomial: {
      const int k = gamma.count();
      return log_beta(prior.a + k, prior.b + p - k) - log_beta(prior.a, prior.b);
    }
  }
  throw std::logic_error("log_prior: unknown prior kind");
}

double log_posterior_unnorm(const ModelIndicator& gamma, const SuffStats& s,
                            const ModelPrior& prior) {
  const double bic = bic_of(s, gamma);
  if (!std::isfinite(bic)) return -std::numeric_limits<double>::infinity();
  return -0.5 * bic + log_prior(gamma, prior);
}

double log_sum_exp(const std::vector<double>& x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : x)
    if (std::isfinite(v)) acc += std::exp(v - m);
  return m + std::log(acc);
}

}  // namespace obms
