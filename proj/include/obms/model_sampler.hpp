#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "obms/modelspace.hpp"
#include "obms/rng.hpp"

namespace obms {

// Metropolis-Hastings over inclusion indicators with single-coordinate flip
// proposals. The proposal is symmetric (each coordinate chosen with
// probability 1/p), so the acceptance ratio reduces to the posterior ratio.
// The target density is supplied as a callable so the same chain drives both
// the summary-statistic surrogate and the raw-data likelihood.

using LogPostFn = std::function<double(const ModelIndicator&)>;

struct SamplerConfig {
  int iterations = 10000;
  int burn_in = 2000;
  int top_k = 10;
  // Distinct-model bookkeeping evicts its lowest-visit entries at this size;
  // inclusion probabilities stay exact regardless.
  std::size_t max_distinct = 100000;
};

struct StepOutcome {
  bool accepted = false;
  int flipped = -1;
  double log_post_proposed = 0.0;
  double delta = 0.0;
};

// Called after every iteration with the 1-based iteration number, the step
// outcome, and the chain state after the step.
using StepObserver =
    std::function<void(int, const StepOutcome&, const ModelIndicator&)>;

struct RankedModel {
  ModelIndicator model;
  std::int64_t visits = 0;
  double log_post = 0.0;
};

struct ChainResult {
  Eigen::VectorXd inclusion_probs;          // one entry per predictor
  std::vector<RankedModel> top_models;      // by post-burn-in visit count
  std::vector<RankedModel> distinct_models; // every post-burn-in model seen
  double acceptance_rate = 0.0;
  ModelIndicator final_model;
  double final_log_post = 0.0;
  std::size_t distinct_visited = 0;
  bool distinct_cap_hit = false;
};

// One proposal/accept-reject step; mutates current/current_log_post in place.
// Draws exactly two variates per call (coordinate, acceptance uniform).
StepOutcome chain_step(const LogPostFn& log_post, ModelIndicator& current,
                       double& current_log_post, Rng& rng);

ChainResult run_chain(const LogPostFn& log_post, const ModelIndicator& start,
                      const SamplerConfig& config, Rng& rng,
                      const StepObserver& observer = nullptr);

}  // namespace obms
