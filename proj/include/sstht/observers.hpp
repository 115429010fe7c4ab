#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sstht/stats.hpp"

namespace sstht {

/// Candidate split produced by a feature observer.
///
/// Numeric suggestions have two branches (v <= threshold, v > threshold).
/// Nominal suggestions have one branch per declared category, in category
/// order; categories never observed get empty stats.
struct SplitSuggestion {
  std::size_t feature = 0;
  bool nominal = false;
  double threshold = 0.0;
  double merit = 0.0;
  std::vector<VectorStats> branches;
};

/// Flat multi-target moments: [n, sum_0..sum_{d-1}, sumsq_0..sumsq_{d-1}],
/// accumulated over targets shifted by a per-observer constant.
class TargetMoments {
 public:
  static constexpr std::size_t width(std::size_t d) { return 1 + 2 * d; }
  static double icvar(std::span<const double> m, std::size_t d);
  static void add(std::span<double> m, std::span<const double> shifted_y);
  static VectorStats to_stats(std::span<const double> m, std::span<const double> shift);
};

/// ICVar(parent) - sum_p |p|/|P| ICVar(p) over flat moments. Branches with
/// zero count contribute nothing.
double icvar_reduction(std::span<const double> parent, std::span<const std::span<const double>> branches,
                       std::size_t d);

/// Extended binary search tree over the observed values of one numeric
/// feature. Each node keeps the target moments of every instance that
/// descended into its left subtree or landed on its key.
class NumericObserver {
 public:
  struct ScanResult {
    SplitSuggestion best;
    std::optional<SplitSuggestion> runner_up;
  };

  explicit NumericObserver(std::size_t num_targets);

  void insert(double v, std::span<const double> y);

  /// Best and second-best thresholds (v <= key) by ICVarR. Merits are
  /// evaluated against the moments of every instance this observer has seen.
  /// Returns nothing when fewer than two distinct keys were observed.
  std::optional<ScanResult> scan_splits(std::size_t feature) const;

  /// Visits candidate thresholds in ascending order with the moments of all
  /// observations v <= key.
  template <typename Fn>
  void for_each_threshold(Fn&& fn) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t num_targets() const { return d_; }
  double observed() const { return total_.empty() ? 0.0 : total_[0]; }
  std::span<const double> total_moments() const { return total_; }

  // Structural access for tests.
  static constexpr std::int32_t kNone = -1;
  std::int32_t root() const { return nodes_.empty() ? kNone : 0; }
  double key(std::int32_t node) const { return nodes_[static_cast<std::size_t>(node)].key; }
  std::int32_t left(std::int32_t node) const { return nodes_[static_cast<std::size_t>(node)].left; }
  std::int32_t right(std::int32_t node) const { return nodes_[static_cast<std::size_t>(node)].right; }
  std::span<const double> node_moments(std::int32_t node) const {
    return {moments_.data() + static_cast<std::size_t>(node) * width(), width()};
  }

 private:
  struct Node {
    double key;
    std::int32_t left = kNone;
    std::int32_t right = kNone;
  };

  std::size_t width() const { return TargetMoments::width(d_); }
  std::span<double> node_moments_mut(std::size_t node) {
    return {moments_.data() + node * width(), width()};
  }
  std::int32_t new_node(double key);

  std::size_t d_;
  std::vector<double> shift_;
  std::vector<double> shifted_y_;
  std::vector<Node> nodes_;
  std::vector<double> moments_;
  std::vector<double> total_;
};

/// Per-category target moments of one nominal feature.
class NominalObserver {
 public:
  NominalObserver(std::size_t num_targets, std::size_t num_categories);

  void insert(std::size_t category, std::span<const double> y);

  /// Multiway suggestion over all declared categories; nothing when fewer
  /// than two categories were observed.
  std::optional<SplitSuggestion> suggest(std::size_t feature) const;

  std::size_t num_categories() const { return categories_; }
  std::size_t num_targets() const { return d_; }
  double count(std::size_t category) const { return moments_[category * TargetMoments::width(d_)]; }
  double observed() const { return total_.empty() ? 0.0 : total_[0]; }

 private:
  std::size_t d_;
  std::size_t categories_;
  std::vector<double> shift_;
  std::vector<double> shifted_y_;
  std::vector<double> moments_;
  std::vector<double> total_;
};

template <typename Fn>
void NumericObserver::for_each_threshold(Fn&& fn) const {
  if (nodes_.empty()) return;
  const std::size_t w = width();
  std::vector<std::int32_t> stack;
  std::vector<double> acc_stack;  // acc of the subtree rooted at each stacked node
  std::vector<double> acc(w, 0.0);
  std::vector<double> cumulative(w);
  std::int32_t cur = 0;
  for (;;) {
    while (cur != kNone) {
      stack.push_back(cur);
      acc_stack.insert(acc_stack.end(), acc.begin(), acc.end());
      cur = nodes_[static_cast<std::size_t>(cur)].left;
    }
    if (stack.empty()) break;
    const std::int32_t node = stack.back();
    stack.pop_back();
    const auto own = node_moments(node);
    const std::size_t base = acc_stack.size() - w;
    for (std::size_t i = 0; i < w; ++i) cumulative[i] = acc_stack[base + i] + own[i];
    acc_stack.resize(base);
    fn(nodes_[static_cast<std::size_t>(node)].key, std::span<const double>(cumulative));
    acc = cumulative;
    cur = nodes_[static_cast<std::size_t>(node)].right;
  }
}

}  // namespace sstht
