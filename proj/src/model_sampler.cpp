#include "obms/model_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace obms {

StepOutcome chain_step(const LogPostFn& log_post, ModelIndicator& current,
                       double& current_log_post, Rng& rng) {
  const int p = current.length();
  StepOutcome out;
  out.flipped = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(p)));
  const double u = rng.next_double();

  const ModelIndicator proposed = current.flipped(out.flipped);
  out.log_post_proposed = log_post(proposed);
  out.delta = out.log_post_proposed - current_log_post;

  // delta is NaN only when both states are impossible; stay put then.
  if (out.delta >= 0.0 || u < std::exp(out.delta)) {
    current = proposed;
    current_log_post = out.log_post_proposed;
    out.accepted = true;
  }
  return out;
}

ChainResult run_chain(const LogPostFn& log_post, const ModelIndicator& start,
                      const SamplerConfig& config, Rng& rng,
                      const StepObserver& observer) {
  if (config.iterations < 1)
    throw std::invalid_argument("run_chain: iterations must be positive");
  if (config.burn_in < 0 || config.burn_in >= config.iterations)
    throw std::invalid_argument("run_chain: burn_in must lie in [0, iterations)");

  const int p = start.length();
  ModelIndicator current = start;
  double current_log_post = log_post(current);
  if (!std::isfinite(current_log_post)) {
    // An unfittable warm start would poison the acceptance ratio; restart
    // from the always-fittable intercept-only model.
    current = ModelIndicator::null_model(p);
    current_log_post = log_post(current);
  }

  std::vector<std::int64_t> inclusion_counts(p, 0);
  using VisitMap = std::unordered_map<ModelIndicator,
                                      std::pair<std::int64_t, double>,
                                      ModelIndicator::Hash>;
  VisitMap visits;
  std::int64_t accepted = 0;

  // Bounded distinct-model bookkeeping: at the cap, drop the lower-visit
  // half in one batch. Inclusion tallies never depend on this map.
  const auto prune = [&](VisitMap& m) {
    std::vector<std::pair<ModelIndicator, std::pair<std::int64_t, double>>>
        entries(m.begin(), m.end());
    const std::size_t keep = std::max<std::size_t>(1, config.max_distinct / 2);
    std::nth_element(entries.begin(), entries.begin() + (keep - 1), entries.end(),
                     [](const auto& a, const auto& b) {
                       return a.second.first > b.second.first;
                     });
    m.clear();
    for (std::size_t i = 0; i < keep; ++i)
      m.emplace(std::move(entries[i].first), entries[i].second);
  };

  ChainResult result;
  for (int t = 1; t <= config.iterations; ++t) {
    const StepOutcome out = chain_step(log_post, current, current_log_post, rng);
    if (out.accepted) ++accepted;

    if (t > config.burn_in) {
      for (int j = 0; j < p; ++j)
        if (current.test(j)) ++inclusion_counts[j];
      auto it = visits.find(current);
      if (it != visits.end()) {
        ++it->second.first;
      } else {
        if (visits.size() >= config.max_distinct) {
          prune(visits);
          result.distinct_cap_hit = true;
        }
        visits.emplace(current, std::make_pair(std::int64_t{1}, current_log_post));
      }
    }
    if (observer) observer(t, out, current);
  }

  const double kept = static_cast<double>(config.iterations - config.burn_in);
  result.inclusion_probs.resize(p);
  for (int j = 0; j < p; ++j)
    result.inclusion_probs(j) = static_cast<double>(inclusion_counts[j]) / kept;

  result.distinct_models.reserve(visits.size());
  for (const auto& [model, entry] : visits)
    result.distinct_models.push_back({model, entry.first, entry.second});
  std::sort(result.distinct_models.begin(), result.distinct_models.end(),
            [](const RankedModel& a, const RankedModel& b) {
              if (a.visits != b.visits) return a.visits > b.visits;
              return a.model < b.model;
            });
  result.top_models.assign(
      result.distinct_models.begin(),
      result.distinct_models.begin() +
          std::min<std::size_t>(result.distinct_models.size(),
                                static_cast<std::size_t>(std::max(config.top_k, 0))));

  result.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(config.iterations);
  result.final_model = current;
  result.final_log_post = current_log_post;
  result.distinct_visited = visits.size();
  return result;
}

}  // namespace obms
