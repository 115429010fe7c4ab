#include "sstht/stats.hpp"

#include <cmath>

namespace sstht {

double sample_variance(double n, double sum, double sum_sq) {
  if (n < 2.0) return 0.0;
  const double v = (sum_sq - sum * sum / n) / (n - 1.0);
  return v > 0.0 ? v : 0.0;
}

RunningStats RunningStats::from_shifted(double n, double shifted_sum, double shifted_sum_sq, double shift) {
  RunningStats rs;
  if (n <= 0.0) return rs;
  rs.n_ = n;
  rs.shift_ = shift;
  rs.s1_ = shifted_sum;
  rs.s2_ = shifted_sum_sq;
  return rs;
}

void RunningStats::update(double v) {
  if (n_ == 0.0) shift_ = v;
  const double c = v - shift_;
  n_ += 1.0;
  s1_ += c;
  s2_ += c * c;
}

void RunningStats::merge(const RunningStats& other) {
  if (other.n_ == 0.0) return;
  if (n_ == 0.0) {
    *this = other;
    return;
  }
  // re-express other's sums relative to our shift
  const double k = other.shift_ - shift_;
  s2_ += other.s2_ + 2.0 * k * other.s1_ + other.n_ * k * k;
  s1_ += other.s1_ + other.n_ * k;
  n_ += other.n_;
}

double RunningStats::sd() const { return std::sqrt(variance()); }

double RunningStats::zscore(double v) const {
  if (n_ < 2.0) return 0.0;
  const double s = sd();
  if (s < kDegenerateSd) return 0.0;
  // Center against the shift first: v - shift is exact or nearly so for nearby values.
  return ((v - shift_) - s1_ / n_) / s;
}

double RunningStats::inverse_zscore(double z) const {
  if (n_ == 0.0) return 0.0;
  const double s = sd();
  if (n_ < 2.0 || s < kDegenerateSd) return mean();
  return z * s + mean();
}

double icvar(std::span<const RunningStats> stats) {
  if (stats.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : stats) acc += s.variance();
  return acc / static_cast<double>(stats.size());
}

}  // namespace sstht
