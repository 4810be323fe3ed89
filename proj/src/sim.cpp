#include "obms/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "obms/logistic.hpp"

namespace obms {

namespace {

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

BatchData draw_rows(const ScenarioSpec& spec, int rows, Rng rng, int batch_index) {
  BatchData batch;
  batch.X.resize(rows, spec.p + 1);
  batch.y.resize(rows);
  batch.batch_index = batch_index;
  for (int i = 0; i < rows; ++i) {
    batch.X(i, 0) = 1.0;
    double eta = spec.beta_true(0);
    for (int j = 1; j <= spec.p; ++j) {
      const double x = rng.next_normal();
      batch.X(i, j) = x;
      eta += spec.beta_true(j) * x;
    }
    batch.y(i) = rng.next_double() < sigmoid(eta) ? 1.0 : 0.0;
  }
  return batch;
}

}  // namespace

ScenarioSpec custom_scenario(int p, int signals, double scale,
                             std::uint64_t seed) {
  if (p < 1 || signals < 0 || signals > p)
    throw std::invalid_argument("custom_scenario: need 0 <= signals <= p, p >= 1");
  ScenarioSpec spec;
  spec.p = p;
  spec.beta_true = Eigen::VectorXd::Zero(p + 1);
  spec.beta_true(0) = 0.1 * scale;
  for (int j = 1; j <= signals; ++j) spec.beta_true(j) = 0.1 * scale;
  spec.seed = seed;
  return spec;
}

ScenarioSpec study_scenario(int which, std::uint64_t seed) {
  double scale = 1.0;
  switch (which) {
    case 1: scale = 1.0; break;
    case 2: scale = 1.5; break;
    case 3: scale = 1.0 / 1.5; break;
    default:
      throw std::invalid_argument("study_scenario: scenario must be 1, 2, or 3");
  }
  ScenarioSpec spec = custom_scenario(80, 20, scale, seed);
  spec.n_batches = 50;
  spec.batch_size = 300;
  spec.replicates = 25;
  spec.test_size = 15000;
  return spec;
}

ScenarioSpec desk_scenario(std::uint64_t seed) {
  ScenarioSpec spec = custom_scenario(20, 10, 1.0, seed);
  spec.n_batches = 20;
  spec.batch_size = 300;
  spec.replicates = 5;
  spec.test_size = 15000;
  return spec;
}

ModelIndicator true_gamma(const ScenarioSpec& spec) {
  ModelIndicator gamma(spec.p);
  for (int j = 0; j < spec.p; ++j)
    if (spec.beta_true(j + 1) != 0.0) gamma.set(j, true);
  return gamma;
}

BatchData make_batch(const ScenarioSpec& spec, int replicate, int batch_index) {
  if (batch_index < 1) throw std::invalid_argument("make_batch: batch_index >= 1");
  Rng rng = Rng(spec.seed)
                .fork(streams::kBatchData)
                .fork(static_cast<std::uint64_t>(replicate))
                .fork(static_cast<std::uint64_t>(batch_index));
  return draw_rows(spec, spec.batch_size, rng, batch_index);
}

BatchData make_test_set(const ScenarioSpec& spec, int replicate) {
  Rng rng = Rng(spec.seed)
                .fork(streams::kTestData)
                .fork(static_cast<std::uint64_t>(replicate));
  return draw_rows(spec, spec.test_size, rng, 1);
}

double rmse_beta(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
  if (est.size() != truth.size())
    throw std::invalid_argument("rmse_beta: length mismatch");
  return std::sqrt((est - truth).squaredNorm() /
                   static_cast<double>(est.size()));
}

Confusion tpr_fpr(const ModelIndicator& gamma_selected,
                  const ModelIndicator& gamma_true) {
  if (gamma_selected.length() != gamma_true.length())
    throw std::invalid_argument("tpr_fpr: length mismatch");
  int true_pos = 0, false_pos = 0;
  for (int j = 0; j < gamma_true.length(); ++j) {
    if (gamma_selected.test(j)) {
      if (gamma_true.test(j))
        ++true_pos;
      else
        ++false_pos;
    }
  }
  const int signals = gamma_true.count();
  const int noise = gamma_true.length() - signals;
  Confusion c;
  c.tpr = signals > 0 ? static_cast<double>(true_pos) / signals : nan_value();
  c.fpr = noise > 0 ? static_cast<double>(false_pos) / noise : nan_value();
  return c;
}

double auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  const Eigen::Index n = scores.size();
  if (labels.size() != n) throw std::invalid_argument("auc: length mismatch");

  std::int64_t positives = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = labels(i);
    if (y != 0.0 && y != 1.0)
      throw std::invalid_argument("auc: labels must be 0/1");
    if (y == 1.0) ++positives;
  }
  const std::int64_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return nan_value();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return scores(a) < scores(b);
  });

  // Sum of positive-class midranks; ties inside a block share one rank.
  double rank_sum = 0.0;
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j < n && scores(order[j]) == scores(order[i])) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j + 1);  // 1-based
    for (Eigen::Index k = i; k < j; ++k)
      if (labels(order[k]) == 1.0) rank_sum += midrank;
    i = j;
  }
  return (rank_sum - 0.5 * static_cast<double>(positives) *
                         static_cast<double>(positives + 1)) /
         (static_cast<double>(positives) * static_cast<double>(negatives));
}

}  // namespace obms
