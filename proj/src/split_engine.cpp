#include "sstht/split_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sstht/core.hpp"

namespace sstht {

void HoeffdingParams::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigurationError("delta must lie in (0, 1)");
  if (!(tau >= 0.0)) throw ConfigurationError("tau must be non-negative");
  if (grace_period < 1) throw ConfigurationError("grace_period must be at least 1");
}

double hoeffding_bound(double n, double delta) {
  if (!(n >= 1.0)) throw std::invalid_argument("hoeffding_bound requires n >= 1");
  return std::sqrt(std::log(2.0 / delta) / (2.0 * n));
}

SplitDecision decide_split(const SplitSuggestion& best, const SplitSuggestion* second, MeritRatio& ratio,
                           double examples_seen, const HoeffdingParams& params) {
  if (!(best.merit > 0.0)) return SplitDecision::KeepWaiting;
  const double h_sb = second ? std::max(second->merit, 0.0) : 0.0;
  ratio.observe(h_sb / best.merit);
  const double xi = hoeffding_bound(examples_seen, params.delta);
  if (ratio.r_bar + xi < 1.0 || xi < params.tau) return SplitDecision::Split;
  return SplitDecision::KeepWaiting;
}

}  // namespace sstht
