#include "obms/mpm.hpp"

#include <cmath>
#include <stdexcept>

namespace obms {

MpmResult select_mpm(const Eigen::VectorXd& probs) {
  const int p = static_cast<int>(probs.size());
  if (p < 1) throw std::invalid_argument("select_mpm: no predictors");
  for (int j = 0; j < p; ++j) {
    const double q = probs(j);
    if (!(q >= 0.0 && q <= 1.0))
      throw std::invalid_argument("select_mpm: probabilities must lie in [0, 1]");
  }
  MpmResult result{ModelIndicator(p), probs};
  for (int j = 0; j < p; ++j)
    if (probs(j) >= 0.5) result.gamma.set(j, true);
  return result;
}

Eigen::VectorXd threshold_beta(const Eigen::VectorXd& beta_full,
                               const ModelIndicator& gamma) {
  if (beta_full.size() != gamma.length() + 1)
    throw std::invalid_argument("threshold_beta: beta length must be p + 1");
  Eigen::VectorXd beta = beta_full;
  for (int j = 0; j < gamma.length(); ++j)
    if (!gamma.test(j)) beta(j + 1) = 0.0;
  return beta;
}

}  // namespace obms
