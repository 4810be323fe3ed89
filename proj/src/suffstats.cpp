#include "obms/suffstats.hpp"

#include <stdexcept>
#include <string>

namespace obms {

void BatchData::validate() const {
  if (X.rows() != y.size())
    throw std::invalid_argument("BatchData: row count of X must equal length of y");
  if (X.rows() < 1) throw std::invalid_argument("BatchData: batch must have >= 1 row");
  if (X.cols() < 2)
    throw std::invalid_argument("BatchData: X needs an intercept column and >= 1 predictor");
  if (batch_index < 1) throw std::invalid_argument("BatchData: batch_index must be positive");
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (X(i, 0) != 1.0)
      throw std::invalid_argument("BatchData: column 0 must be identically 1");
    const double yi = y(i);
    if (yi != 0.0 && yi != 1.0)
      throw std::invalid_argument("BatchData: response entries must be exactly 0 or 1 (row " +
                                  std::to_string(i) + ")");
  }
}

SuffStats::SuffStats(int p) : p_(p) {
  if (p < 1) throw std::invalid_argument("SuffStats: predictor count must be >= 1");
  xty_ = Eigen::VectorXd::Zero(p + 1);
  xtx_ = Eigen::MatrixXd::Zero(p + 1, p + 1);
}

SuffStats SuffStats::from_moments(std::int64_t n, double yty,
                                  const Eigen::VectorXd& xty,
                                  const Eigen::MatrixXd& xtx) {
  if (xtx.rows() != xtx.cols() || xtx.rows() != xty.size() || xty.size() < 2)
    throw std::invalid_argument("SuffStats::from_moments: inconsistent dimensions");
  SuffStats s(static_cast<int>(xty.size()) - 1);
  s.n_ = n;
  s.yty_ = yty;
  s.xty_ = xty;
  s.xtx_ = xtx;
  s.revision_ = 1;
  return s;
}

void SuffStats::update(const BatchData& batch) {
  if (batch.X.cols() != p_ + 1)
    throw std::invalid_argument("SuffStats::update: batch has " +
                                std::to_string(batch.X.cols()) + " columns, expected " +
                                std::to_string(p_ + 1));
  batch.validate();

  // Row-wise rank-1 accumulation on the upper triangle. The flop sequence
  // depends only on the row order, so streaming batches and a single pass
  // over the concatenation produce identical bits.
  for (Eigen::Index i = 0; i < batch.X.rows(); ++i) {
    const auto xi = batch.X.row(i).transpose();
    const double yi = batch.y(i);
    yty_ += yi * yi;
    xty_.noalias() += yi * xi;
    xtx_.selfadjointView<Eigen::Upper>().rankUpdate(xi, 1.0);
  }
  n_ += batch.X.rows();
  xtx_ = xtx_.selfadjointView<Eigen::Upper>();
  ++revision_;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> SuffStats::extract_submodel(
    const ModelIndicator& gamma) const {
  if (gamma.length() != p_)
    throw std::invalid_argument("extract_submodel: indicator length mismatch");

  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(gamma.count()) + 1);
  idx.push_back(0);
  for (int j = 0; j < p_; ++j)
    if (gamma.test(j)) idx.push_back(j + 1);

  const int k = static_cast<int>(idx.size());
  Eigen::MatrixXd sub_xtx(k, k);
  Eigen::VectorXd sub_xty(k);
  for (int r = 0; r < k; ++r) {
    sub_xty(r) = xty_(idx[static_cast<std::size_t>(r)]);
    for (int c = 0; c < k; ++c)
      sub_xtx(r, c) = xtx_(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
  }
  return {std::move(sub_xtx), std::move(sub_xty)};
}

}  // namespace obms
