#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "sstht/core.hpp"
#include "sstht/leaf_models.hpp"
#include "sstht/observers.hpp"
#include "sstht/split_engine.hpp"
#include "sstht/stats.hpp"

namespace sstht {

struct TreeConfig {
  LearnerVariant variant = LearnerVariant::SsthtAdaptive;
  HoeffdingParams hoeffding;
  double learning_rate = 0.01;
  std::uint64_t rng_seed = 1;
  UpdateSign sign = UpdateSign::Descent;

  void validate() const;
};

using FeatureObserver = std::variant<NumericObserver, NominalObserver>;

struct LeafNode {
  VectorStats target_stats;
  VectorStats feature_stats;
  std::vector<FeatureObserver> observers;
  LeafPredictorSet predictors;
  MeritRatio ratio;
  double examples_seen = 0.0;
  std::size_t since_attempt = 0;
};

struct Node;

struct SplitNode {
  std::size_t feature = 0;
  bool nominal = false;
  double threshold = 0.0;
  std::vector<std::unique_ptr<Node>> children;
};

struct Node {
  std::variant<LeafNode, SplitNode> content;

  bool is_leaf() const { return std::holds_alternative<LeafNode>(content); }
  const LeafNode& leaf() const { return std::get<LeafNode>(content); }
  LeafNode& leaf() { return std::get<LeafNode>(content); }
  const SplitNode& split() const { return std::get<SplitNode>(content); }
};

/// Incremental multi-target Hoeffding regression tree.
///
/// Every variant grows the same structure: split decisions read only the
/// leaf statistics and feature observers. The variant decides which leaf
/// predictors are maintained and how a prediction is chosen.
///
/// learn() needs exclusive access; predict() is const and may run
/// concurrently with other predict() calls.
class HoeffdingTree {
 public:
  HoeffdingTree(StreamSchema schema, TreeConfig config);

  /// Throws ConfigurationError when x does not fit the schema.
  Prediction predict(const Instance& x) const;

  /// Routes x to one leaf and updates it; attempts a split every
  /// grace_period examples seen by that leaf. Instances with a non-finite
  /// target are skipped and counted in rejected_instances().
  void learn(const Instance& x);

  const StreamSchema& schema() const { return schema_; }
  const TreeConfig& config() const { return config_; }
  const Node& root() const { return *root_; }

  /// Leaf that x routes to. Missing numeric values go left; unseen or
  /// missing nominal values go to the first child.
  const Node& route(const Instance& x) const;

  /// Standardizes features with a leaf's feature statistics; missing -> 0.
  static void standardize(const LeafNode& leaf, const Instance& x, std::vector<double>& out);

  std::size_t leaf_count() const;
  std::size_t split_count() const { return splits_; }
  std::size_t split_attempts() const { return attempts_; }
  std::size_t rejected_instances() const { return rejected_; }
  std::size_t instances_learned() const { return learned_; }

  /// Platform-independent size in bytes, counted in 8-byte words:
  ///   split node: 3 words (feature, kind, threshold) + 1 per child
  ///   leaf: 4 header words (examples seen, attempt counter, ratio mean and
  ///     count), 4 words per RunningStats over d targets and m features,
  ///     every layer's weights, 2d words per tracked faded-error table
  ///   numeric observer: 1 + 3d words + (4 + 2d) words per E-BST node
  ///   nominal observer: 1 + 3d words + (1 + 2d) words per category
  std::size_t model_size_bytes() const;

  /// Split predicates in preorder; identical across variants on the same stream.
  std::string serialize_skeleton() const;
  /// Full state dump (skeleton, statistics, observers, weights, errors).
  std::string serialize() const;

  static constexpr std::size_t kWordBytes = 8;
  static std::size_t leaf_bytes(const LeafNode& leaf);
  /// Words a leaf carries for layers and error tables of the given variant.
  static std::size_t predictor_words(LearnerVariant variant, std::size_t num_features, std::size_t num_targets);

 private:
  LeafNode make_leaf(VectorStats target_stats, VectorStats feature_stats, LeafPredictorSet predictors) const;
  Node& route_mut(const Instance& x);
  void attempt_split(Node& node);

  StreamSchema schema_;
  TreeConfig config_;
  std::unique_ptr<Node> root_;
  std::size_t splits_ = 0;
  std::size_t attempts_ = 0;
  std::size_t rejected_ = 0;
  std::size_t learned_ = 0;
  std::vector<double> x_std_;
};

}  // namespace sstht
