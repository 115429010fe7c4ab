#include "sstht/core.hpp"

#include <algorithm>
#include <set>

namespace sstht {

StreamSchema::StreamSchema(std::vector<FeatureSpec> features, std::vector<std::string> targets)
    : features_(std::move(features)), targets_(std::move(targets)) {
  if (features_.empty()) throw ConfigurationError("schema needs at least one feature");
  if (targets_.empty()) throw ConfigurationError("schema needs at least one target");
  std::set<std::string> names;
  for (const auto& f : features_) {
    if (!names.insert(f.name).second) throw ConfigurationError("duplicate column name: " + f.name);
    if (f.kind == FeatureKind::Nominal) {
      if (f.categories.empty()) throw ConfigurationError("nominal feature without categories: " + f.name);
      std::set<std::string> cats(f.categories.begin(), f.categories.end());
      if (cats.size() != f.categories.size())
        throw ConfigurationError("duplicate category in feature " + f.name);
    }
  }
  for (const auto& t : targets_)
    if (!names.insert(t).second) throw ConfigurationError("duplicate column name: " + t);
}

std::size_t StreamSchema::num_nominal() const {
  return static_cast<std::size_t>(std::count_if(features_.begin(), features_.end(), [](const FeatureSpec& f) {
    return f.kind == FeatureKind::Nominal;
  }));
}

std::string_view to_string(LearnerVariant v) {
  switch (v) {
    case LearnerVariant::MtrhtMean: return "mtrht_mean";
    case LearnerVariant::MtrhtPerceptron: return "mtrht_perceptron";
    case LearnerVariant::IsoupAdaptive: return "isoup_adaptive";
    case LearnerVariant::Sstht: return "sstht";
    case LearnerVariant::SsthtAdaptive: return "sstht_adaptive";
  }
  return "unknown";
}

std::optional<LearnerVariant> parse_variant(std::string_view name) {
  for (auto v : kAllVariants)
    if (to_string(v) == name) return v;
  return std::nullopt;
}

std::string_view to_string(PredictorKind k) {
  switch (k) {
    case PredictorKind::Mean: return "mean";
    case PredictorKind::Perceptron: return "perceptron";
    case PredictorKind::Stacked: return "stacked";
  }
  return "unknown";
}

void validate_features(const StreamSchema& schema, const Instance& x) {
  if (x.features.size() != schema.num_features())
    throw ConfigurationError("instance has " + std::to_string(x.features.size()) + " features, schema declares " +
                             std::to_string(schema.num_features()));
  for (std::size_t j = 0; j < x.features.size(); ++j) {
    const double v = x.features[j];
    if (is_missing(v)) continue;
    if (schema.is_nominal(j)) {
      const auto& cats = schema.feature(j).categories;
      if (v < 0 || v >= static_cast<double>(cats.size()) || v != std::floor(v))
        throw ConfigurationError("nominal index out of range for feature " + schema.feature(j).name);
    } else if (!std::isfinite(v)) {
      throw ConfigurationError("non-finite value for numeric feature " + schema.feature(j).name);
    }
  }
}

InstanceCheck validate(const StreamSchema& schema, const Instance& x) {
  validate_features(schema, x);
  if (x.targets.size() != schema.num_targets())
    throw ConfigurationError("instance has " + std::to_string(x.targets.size()) + " targets, schema declares " +
                             std::to_string(schema.num_targets()));
  for (double y : x.targets)
    if (!std::isfinite(y)) return InstanceCheck::NonFiniteTarget;
  return InstanceCheck::Ok;
}

}  // namespace sstht
