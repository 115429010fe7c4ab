#pragma once

#include <cstddef>
#include <optional>

#include "sstht/observers.hpp"

namespace sstht {

struct HoeffdingParams {
  double delta = 1e-7;
  double tau = 0.05;
  std::size_t grace_period = 200;

  /// Throws ConfigurationError unless 0 < delta < 1, tau >= 0, grace >= 1.
  void validate() const;
};

/// Running mean of second-best / best merit ratios observed at one leaf.
struct MeritRatio {
  double r_bar = 0.0;
  std::size_t n_ratio = 0;

  void observe(double ratio) {
    ++n_ratio;
    r_bar += (ratio - r_bar) / static_cast<double>(n_ratio);
  }
};

/// sqrt(ln(2/delta) / (2n)). Throws std::invalid_argument for n == 0.
double hoeffding_bound(double n, double delta);

enum class SplitDecision { KeepWaiting, Split };

/// Folds the merit ratio of this attempt into `ratio` and applies the
/// r_bar + xi < 1 or xi < tau rule, where xi is computed from
/// `examples_seen`. A non-positive best merit never splits and leaves the
/// ratio untouched. A missing second suggestion counts as merit 0, and a
/// negative second merit is clamped to 0.
SplitDecision decide_split(const SplitSuggestion& best, const SplitSuggestion* second, MeritRatio& ratio,
                           double examples_seen, const HoeffdingParams& params);

}  // namespace sstht
