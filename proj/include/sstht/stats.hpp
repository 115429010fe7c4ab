#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sstht {

inline constexpr double kDegenerateSd = 1e-12;

/// Sample variance from a count and first/second moment sums. Returns 0 for
/// n < 2 and clamps rounding-induced negatives at 0. The sums may be taken
/// over shifted values; the result is shift invariant.
double sample_variance(double n, double sum, double sum_sq);

/// Count, sum and sum of squares of one variable.
///
/// Sums are accumulated relative to the first observed value so that large
/// offsets do not cancel catastrophically; sum() and sum_sq() report the
/// unshifted totals.
class RunningStats {
 public:
  RunningStats() = default;

  /// Rebuilds stats from sums that were accumulated over (v - shift).
  static RunningStats from_shifted(double n, double shifted_sum, double shifted_sum_sq, double shift);

  void update(double v);
  void merge(const RunningStats& other);

  double count() const { return n_; }
  double sum() const { return s1_ + n_ * shift_; }
  double sum_sq() const { return s2_ + 2.0 * shift_ * s1_ + n_ * shift_ * shift_; }
  double mean() const { return n_ > 0 ? shift_ + s1_ / n_ : 0.0; }
  double variance() const { return sample_variance(n_, s1_, s2_); }
  double sd() const;

  /// (v - mean) / sd, or 0 when n < 2 or sd is degenerate.
  double zscore(double v) const;
  /// z * sd + mean; falls back to the mean (0 when empty) for degenerate sd.
  double inverse_zscore(double z) const;

  bool operator==(const RunningStats&) const = default;

 private:
  double n_ = 0.0;
  double shift_ = 0.0;
  double s1_ = 0.0;
  double s2_ = 0.0;
};

/// One RunningStats per variable.
using VectorStats = std::vector<RunningStats>;

/// Mean of per-variable sample variances (intra-cluster variance).
double icvar(std::span<const RunningStats> stats);

}  // namespace sstht
