#include "sstht/tree.hpp"

#include <cstdio>
#include <functional>
#include <sstream>

namespace sstht {

void TreeConfig::validate() const {
  hoeffding.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigurationError("learning_rate must be positive");
}

HoeffdingTree::HoeffdingTree(StreamSchema schema, TreeConfig config)
    : schema_(std::move(schema)), config_(config) {
  config_.validate();
  const std::size_t m = schema_.num_features();
  const std::size_t d = schema_.num_targets();
  LeafPredictorSet predictors(config_.variant, m, d, config_.learning_rate, config_.sign);
  std::mt19937_64 rng(config_.rng_seed);
  predictors.init_weights(rng);
  root_ = std::make_unique<Node>(Node{make_leaf(VectorStats(d), VectorStats(m), std::move(predictors))});
  x_std_.resize(m);
}

LeafNode HoeffdingTree::make_leaf(VectorStats target_stats, VectorStats feature_stats,
                                  LeafPredictorSet predictors) const {
  const std::size_t d = schema_.num_targets();
  std::vector<FeatureObserver> observers;
  observers.reserve(schema_.num_features());
  for (const auto& f : schema_.features()) {
    if (f.kind == FeatureKind::Nominal)
      observers.emplace_back(std::in_place_type<NominalObserver>, d, f.categories.size());
    else
      observers.emplace_back(std::in_place_type<NumericObserver>, d);
  }
  return LeafNode{std::move(target_stats), std::move(feature_stats), std::move(observers), std::move(predictors),
                  MeritRatio{}, 0.0, 0};
}

const Node& HoeffdingTree::route(const Instance& x) const {
  const Node* node = root_.get();
  while (!node->is_leaf()) {
    const SplitNode& s = node->split();
    const double v = x.features[s.feature];
    std::size_t child = 0;
    if (s.nominal) {
      if (!is_missing(v) && v >= 0 && v < static_cast<double>(s.children.size())) child = static_cast<std::size_t>(v);
    } else {
      child = (is_missing(v) || v <= s.threshold) ? 0 : 1;
    }
    node = s.children[child].get();
  }
  return *node;
}

Node& HoeffdingTree::route_mut(const Instance& x) { return const_cast<Node&>(route(x)); }

void HoeffdingTree::standardize(const LeafNode& leaf, const Instance& x, std::vector<double>& out) {
  out.resize(x.features.size());
  for (std::size_t j = 0; j < x.features.size(); ++j) {
    const double v = x.features[j];
    out[j] = is_missing(v) ? 0.0 : leaf.feature_stats[j].zscore(v);
  }
}

Prediction HoeffdingTree::predict(const Instance& x) const {
  validate_features(schema_, x);
  const LeafNode& leaf = route(x).leaf();
  std::vector<double> x_std;
  standardize(leaf, x, x_std);
  return leaf.predictors.select_and_predict(x_std, leaf.target_stats);
}

void HoeffdingTree::learn(const Instance& x) {
  if (validate(schema_, x) != InstanceCheck::Ok) {
    ++rejected_;
    return;
  }
  Node& node = route_mut(x);
  LeafNode& leaf = node.leaf();
  standardize(leaf, x, x_std_);
  leaf.predictors.learn(x_std_, x.targets, leaf.target_stats);

  for (std::size_t t = 0; t < x.targets.size(); ++t) leaf.target_stats[t].update(x.targets[t]);
  for (std::size_t j = 0; j < x.features.size(); ++j) {
    const double v = x.features[j];
    if (is_missing(v)) continue;
    leaf.feature_stats[j].update(v);
    if (auto* num = std::get_if<NumericObserver>(&leaf.observers[j]))
      num->insert(v, x.targets);
    else
      std::get<NominalObserver>(leaf.observers[j]).insert(static_cast<std::size_t>(v), x.targets);
  }
  leaf.examples_seen += 1.0;
  ++learned_;
  if (++leaf.since_attempt >= config_.hoeffding.grace_period) attempt_split(node);
}

void HoeffdingTree::attempt_split(Node& node) {
  LeafNode& leaf = node.leaf();
  ++attempts_;
  leaf.since_attempt = 0;

  // one candidate per feature: that feature's best suggestion
  std::vector<SplitSuggestion> candidates;
  for (std::size_t j = 0; j < leaf.observers.size(); ++j) {
    if (const auto* num = std::get_if<NumericObserver>(&leaf.observers[j])) {
      if (auto r = num->scan_splits(j)) candidates.push_back(std::move(r->best));
    } else if (auto s = std::get<NominalObserver>(leaf.observers[j]).suggest(j)) {
      candidates.push_back(std::move(*s));
    }
  }
  if (candidates.empty()) return;
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].merit > candidates[best].merit) best = i;
  const SplitSuggestion* second = nullptr;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i == best) continue;
    if (!second || candidates[i].merit > second->merit) second = &candidates[i];
  }

  if (decide_split(candidates[best], second, leaf.ratio, leaf.examples_seen, config_.hoeffding) !=
      SplitDecision::Split)
    return;

  SplitSuggestion& chosen = candidates[best];
  SplitNode split;
  split.feature = chosen.feature;
  split.nominal = chosen.nominal;
  split.threshold = chosen.threshold;
  for (auto& branch : chosen.branches) {
    split.children.push_back(std::make_unique<Node>(
        Node{make_leaf(std::move(branch), leaf.feature_stats, leaf.predictors.inherit())}));
  }
  node.content = std::move(split);
  ++splits_;
}

std::size_t HoeffdingTree::leaf_count() const {
  std::size_t n = 0;
  std::vector<const Node*> stack{root_.get()};
  while (!stack.empty()) {
    const Node* node = stack.back();
    stack.pop_back();
    if (node->is_leaf()) {
      ++n;
      continue;
    }
    for (const auto& c : node->split().children) stack.push_back(c.get());
  }
  return n;
}

std::size_t HoeffdingTree::predictor_words(LearnerVariant variant, std::size_t m, std::size_t d) {
  const VariantTraits traits = VariantTraits::of(variant);
  std::size_t words = 0;
  if (traits.needs_base()) words += d * (m + 1);
  if (traits.needs_meta()) words += d * (d + 1);
  for (bool tracked : traits.tracked)
    if (tracked) words += 2 * d;
  return words;
}

std::size_t HoeffdingTree::leaf_bytes(const LeafNode& leaf) {
  const std::size_t d = leaf.target_stats.size();
  const std::size_t m = leaf.feature_stats.size();
  std::size_t words = 4 + 4 * (d + m);
  for (const auto& obs : leaf.observers) {
    words += 1 + 3 * d;
    if (const auto* num = std::get_if<NumericObserver>(&obs))
      words += num->node_count() * (4 + 2 * d);
    else
      words += std::get<NominalObserver>(obs).num_categories() * (1 + 2 * d);
  }
  words += predictor_words(leaf.predictors.variant(), m, d);
  return words * kWordBytes;
}

std::size_t HoeffdingTree::model_size_bytes() const {
  std::size_t bytes = 0;
  std::vector<const Node*> stack{root_.get()};
  while (!stack.empty()) {
    const Node* node = stack.back();
    stack.pop_back();
    if (node->is_leaf()) {
      bytes += leaf_bytes(node->leaf());
      continue;
    }
    const SplitNode& s = node->split();
    bytes += (3 + s.children.size()) * kWordBytes;
    for (const auto& c : s.children) stack.push_back(c.get());
  }
  return bytes;
}

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << ' ' << buf;
}

void put_stats(std::ostream& os, const RunningStats& s) {
  put(os, s.count());
  put(os, s.sum());
  put(os, s.sum_sq());
}

void put_moments(std::ostream& os, std::span<const double> m) {
  for (double v : m) put(os, v);
}

void dump(std::ostream& os, const Node& node, bool full) {
  if (!node.is_leaf()) {
    const SplitNode& s = node.split();
    os << "S " << s.feature << (s.nominal ? " nominal" : " numeric");
    if (!s.nominal) put(os, s.threshold);
    os << ' ' << s.children.size() << '\n';
    for (const auto& c : s.children) dump(os, *c, full);
    return;
  }
  os << 'L';
  if (!full) {
    os << '\n';
    return;
  }
  const LeafNode& leaf = node.leaf();
  put(os, leaf.examples_seen);
  os << ' ' << leaf.since_attempt;
  put(os, leaf.ratio.r_bar);
  os << ' ' << leaf.ratio.n_ratio << '\n';
  os << " targets";
  for (const auto& s : leaf.target_stats) put_stats(os, s);
  os << "\n features";
  for (const auto& s : leaf.feature_stats) put_stats(os, s);
  os << '\n';
  for (const auto& obs : leaf.observers) {
    if (const auto* num = std::get_if<NumericObserver>(&obs)) {
      os << " ebst " << num->node_count();
      put_moments(os, num->total_moments());
      num->for_each_threshold([&](double key, std::span<const double> left) {
        put(os, key);
        put_moments(os, left);
      });
    } else {
      const auto& nom = std::get<NominalObserver>(obs);
      os << " nominal";
      for (std::size_t c = 0; c < nom.num_categories(); ++c) put(os, nom.count(c));
    }
    os << '\n';
  }
  const auto& p = leaf.predictors;
  if (p.base()) {
    os << " base";
    for (double w : p.base()->weights()) put(os, w);
    os << '\n';
  }
  if (p.meta()) {
    os << " meta";
    for (double w : p.meta()->weights()) put(os, w);
    os << '\n';
  }
  for (std::size_t k = 0; k < kNumPredictorKinds; ++k) {
    const FadedError* e = p.errors(static_cast<PredictorKind>(k));
    if (!e) continue;
    os << " fmae " << to_string(static_cast<PredictorKind>(k));
    for (std::size_t t = 0; t < e->num_targets(); ++t) {
      put(os, e->numerator(t));
      put(os, e->denominator(t));
    }
    os << '\n';
  }
}

}  // namespace

std::string HoeffdingTree::serialize_skeleton() const {
  std::ostringstream os;
  os << "sstht-skeleton 1\n";
  dump(os, *root_, false);
  return os.str();
}

std::string HoeffdingTree::serialize() const {
  std::ostringstream os;
  os << "sstht-tree 1 " << to_string(config_.variant) << ' ' << schema_.num_features() << ' '
     << schema_.num_targets() << '\n';
  dump(os, *root_, true);
  return os.str();
}

}  // namespace sstht
