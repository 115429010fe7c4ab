#include "sstht/observers.hpp"

#include <cmath>

namespace sstht {

double TargetMoments::icvar(std::span<const double> m, std::size_t d) {
  double acc = 0.0;
  for (std::size_t t = 0; t < d; ++t) acc += sample_variance(m[0], m[1 + t], m[1 + d + t]);
  return acc / static_cast<double>(d);
}

void TargetMoments::add(std::span<double> m, std::span<const double> shifted_y) {
  const std::size_t d = shifted_y.size();
  m[0] += 1.0;
  for (std::size_t t = 0; t < d; ++t) {
    m[1 + t] += shifted_y[t];
    m[1 + d + t] += shifted_y[t] * shifted_y[t];
  }
}

VectorStats TargetMoments::to_stats(std::span<const double> m, std::span<const double> shift) {
  const std::size_t d = shift.size();
  VectorStats out(d);
  for (std::size_t t = 0; t < d; ++t) out[t] = RunningStats::from_shifted(m[0], m[1 + t], m[1 + d + t], shift[t]);
  return out;
}

double icvar_reduction(std::span<const double> parent, std::span<const std::span<const double>> branches,
                       std::size_t d) {
  const double n = parent[0];
  if (n <= 0.0) return 0.0;
  double merit = TargetMoments::icvar(parent, d);
  for (const auto& b : branches) {
    if (b[0] <= 0.0) continue;
    merit -= b[0] / n * TargetMoments::icvar(b, d);
  }
  return merit;
}

namespace {

// Shifts y by the observer's per-target constant, fixing the constant on the
// first insertion.
void shift_targets(std::vector<double>& shift, bool first, std::span<const double> y, std::vector<double>& out) {
  if (first) shift.assign(y.begin(), y.end());
  for (std::size_t t = 0; t < y.size(); ++t) out[t] = y[t] - shift[t];
}

}  // namespace

NumericObserver::NumericObserver(std::size_t num_targets)
    : d_(num_targets), shift_(num_targets, 0.0), shifted_y_(num_targets), total_(TargetMoments::width(num_targets), 0.0) {}

std::int32_t NumericObserver::new_node(double key) {
  nodes_.push_back(Node{key});
  moments_.resize(moments_.size() + width(), 0.0);
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

void NumericObserver::insert(double v, std::span<const double> y) {
  shift_targets(shift_, total_[0] == 0.0, y, shifted_y_);
  TargetMoments::add(total_, shifted_y_);
  if (nodes_.empty()) {
    new_node(v);
    TargetMoments::add(node_moments_mut(0), shifted_y_);
    return;
  }
  std::size_t cur = 0;
  for (;;) {
    Node& node = nodes_[cur];
    if (v == node.key) {
      TargetMoments::add(node_moments_mut(cur), shifted_y_);
      return;
    }
    if (v < node.key) {
      TargetMoments::add(node_moments_mut(cur), shifted_y_);
      if (node.left == kNone) {
        const auto child = new_node(v);
        nodes_[cur].left = child;
        TargetMoments::add(node_moments_mut(static_cast<std::size_t>(child)), shifted_y_);
        return;
      }
      cur = static_cast<std::size_t>(node.left);
    } else {
      if (node.right == kNone) {
        const auto child = new_node(v);
        nodes_[cur].right = child;
        TargetMoments::add(node_moments_mut(static_cast<std::size_t>(child)), shifted_y_);
        return;
      }
      cur = static_cast<std::size_t>(node.right);
    }
  }
}

std::optional<NumericObserver::ScanResult> NumericObserver::scan_splits(std::size_t feature) const {
  if (nodes_.size() < 2) return std::nullopt;
  const std::size_t w = width();
  std::vector<double> right(w);
  std::vector<double> best_left(w), second_left(w);
  double best_merit = -INFINITY, second_merit = -INFINITY;
  double best_key = 0.0, second_key = 0.0;
  bool have_best = false, have_second = false;

  for_each_threshold([&](double key, std::span<const double> left) {
    if (left[0] >= total_[0]) return;  // nothing to the right
    for (std::size_t i = 0; i < w; ++i) right[i] = total_[i] - left[i];
    const std::span<const double> parts[] = {left, right};
    const double merit = icvar_reduction(total_, parts, d_);
    if (!have_best || merit > best_merit) {
      if (have_best) {
        second_merit = best_merit;
        second_key = best_key;
        second_left = best_left;
        have_second = true;
      }
      best_merit = merit;
      best_key = key;
      best_left.assign(left.begin(), left.end());
      have_best = true;
    } else if (!have_second || merit > second_merit) {
      second_merit = merit;
      second_key = key;
      second_left.assign(left.begin(), left.end());
      have_second = true;
    }
  });
  if (!have_best) return std::nullopt;

  auto make = [&](double key, double merit, const std::vector<double>& left) {
    SplitSuggestion s;
    s.feature = feature;
    s.threshold = key;
    s.merit = merit;
    for (std::size_t i = 0; i < w; ++i) right[i] = total_[i] - left[i];
    s.branches.push_back(TargetMoments::to_stats(left, shift_));
    s.branches.push_back(TargetMoments::to_stats(right, shift_));
    return s;
  };
  ScanResult out{make(best_key, best_merit, best_left), std::nullopt};
  if (have_second) out.runner_up = make(second_key, second_merit, second_left);
  return out;
}

NominalObserver::NominalObserver(std::size_t num_targets, std::size_t num_categories)
    : d_(num_targets),
      categories_(num_categories),
      shift_(num_targets, 0.0),
      shifted_y_(num_targets),
      moments_(num_categories * TargetMoments::width(num_targets), 0.0),
      total_(TargetMoments::width(num_targets), 0.0) {}

void NominalObserver::insert(std::size_t category, std::span<const double> y) {
  shift_targets(shift_, total_[0] == 0.0, y, shifted_y_);
  TargetMoments::add(total_, shifted_y_);
  const std::size_t w = TargetMoments::width(d_);
  TargetMoments::add(std::span<double>(moments_.data() + category * w, w), shifted_y_);
}

std::optional<SplitSuggestion> NominalObserver::suggest(std::size_t feature) const {
  const std::size_t w = TargetMoments::width(d_);
  std::vector<std::span<const double>> parts;
  parts.reserve(categories_);
  std::size_t seen = 0;
  for (std::size_t c = 0; c < categories_; ++c) {
    parts.emplace_back(moments_.data() + c * w, w);
    if (parts.back()[0] > 0.0) ++seen;
  }
  if (seen < 2) return std::nullopt;
  SplitSuggestion s;
  s.feature = feature;
  s.nominal = true;
  s.merit = icvar_reduction(total_, parts, d_);
  for (const auto& p : parts) s.branches.push_back(TargetMoments::to_stats(p, shift_));
  return s;
}

}  // namespace sstht
