#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sstht {

/// Raised when an instance or configuration does not fit the declared schema.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FeatureKind { Numeric, Nominal };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  std::vector<std::string> categories;  // nominal only

  static FeatureSpec numeric(std::string name) { return {std::move(name), FeatureKind::Numeric, {}}; }
  static FeatureSpec nominal(std::string name, std::vector<std::string> categories) {
    return {std::move(name), FeatureKind::Nominal, std::move(categories)};
  }

  bool operator==(const FeatureSpec&) const = default;
};

/// Ordered input features and target names of a stream.
class StreamSchema {
 public:
  StreamSchema() = default;
  /// Throws ConfigurationError when names collide, m or d is zero, or a
  /// nominal feature has no categories.
  StreamSchema(std::vector<FeatureSpec> features, std::vector<std::string> targets);

  std::size_t num_features() const { return features_.size(); }
  std::size_t num_targets() const { return targets_.size(); }
  const std::vector<FeatureSpec>& features() const { return features_; }
  const std::vector<std::string>& targets() const { return targets_; }
  const FeatureSpec& feature(std::size_t j) const { return features_[j]; }
  bool is_nominal(std::size_t j) const { return features_[j].kind == FeatureKind::Nominal; }
  std::size_t num_nominal() const;

  bool operator==(const StreamSchema&) const = default;

 private:
  std::vector<FeatureSpec> features_;
  std::vector<std::string> targets_;
};

/// Missing feature values are encoded as quiet NaN. Nominal values hold the
/// category index as an integral double.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

struct Instance {
  std::vector<double> features;
  std::vector<double> targets;
};

enum class LearnerVariant { MtrhtMean, MtrhtPerceptron, IsoupAdaptive, Sstht, SsthtAdaptive };

inline constexpr LearnerVariant kAllVariants[] = {
    LearnerVariant::MtrhtMean, LearnerVariant::MtrhtPerceptron, LearnerVariant::IsoupAdaptive,
    LearnerVariant::Sstht, LearnerVariant::SsthtAdaptive};

std::string_view to_string(LearnerVariant v);
std::optional<LearnerVariant> parse_variant(std::string_view name);

enum class PredictorKind { Mean = 0, Perceptron = 1, Stacked = 2 };
inline constexpr std::size_t kNumPredictorKinds = 3;

std::string_view to_string(PredictorKind k);

struct Prediction {
  std::vector<double> values;
  std::vector<PredictorKind> per_target_source;
};

enum class InstanceCheck { Ok, NonFiniteTarget };

/// Throws ConfigurationError on length mismatch or out-of-range nominal
/// index. A non-finite target is reported, not thrown, so learners can
/// count and skip it.
InstanceCheck validate(const StreamSchema& schema, const Instance& x);

/// Same as validate but ignores targets (prediction input).
void validate_features(const StreamSchema& schema, const Instance& x);

}  // namespace sstht
