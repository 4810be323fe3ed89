#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "obms/modelspace.hpp"

namespace obms {

// One batch of a binary-response stream. Column 0 of X is the materialized
// intercept (all ones); y entries are exactly 0 or 1.
struct BatchData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  int batch_index = 1;

  int rows() const { return static_cast<int>(X.rows()); }
  int predictors() const { return static_cast<int>(X.cols()) - 1; }

  // Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

// Constant-size summaries of everything seen so far: N, y'y, X'y, X'X.
// These are exactly what the Gaussian linear likelihood needs, so any model's
// BIC is computable without the individual records. Accumulation is row by
// row in arrival order, which makes a streamed build bit-identical to a
// single pass over the concatenated data.
class SuffStats {
 public:
  explicit SuffStats(int p);

  // Rebuild from stored moments (checkpoint restore and tests).
  static SuffStats from_moments(std::int64_t n, double yty,
                                const Eigen::VectorXd& xty,
                                const Eigen::MatrixXd& xtx);

  void update(const BatchData& batch);

  // Principal submatrix of X'X and subvector of X'y for the columns
  // {intercept} + {j+1 : gamma_j = 1}.
  std::pair<Eigen::MatrixXd, Eigen::VectorXd> extract_submodel(
      const ModelIndicator& gamma) const;

  int predictors() const { return p_; }
  std::int64_t n() const { return n_; }
  double yty() const { return yty_; }
  const Eigen::VectorXd& xty() const { return xty_; }
  const Eigen::MatrixXd& xtx() const { return xtx_; }

  // Bumped on every update; BIC caches key on it to detect staleness.
  std::uint64_t revision() const { return revision_; }

 private:
  int p_;
  std::int64_t n_ = 0;
  double yty_ = 0.0;
  Eigen::VectorXd xty_;
  Eigen::MatrixXd xtx_;
  std::uint64_t revision_ = 0;
};

}  // namespace obms
