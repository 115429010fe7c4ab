#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "sstht/core.hpp"
#include "sstht/stats.hpp"

namespace sstht {

/// Which way the delta rule moves weights. Descent is w += eta (target - out) x;
/// Reversed applies w += eta (out - target) x instead.
enum class UpdateSign { Descent, Reversed };

/// Affine map from `inputs` values to `outputs` values. Row r holds
/// [bias, w_1 .. w_inputs]; the bias input is fixed at 1.
class LinearLayer {
 public:
  LinearLayer(std::size_t outputs, std::size_t inputs, double learning_rate);

  /// Draws every weight from U[-1, 1].
  void randomize(std::mt19937_64& rng);

  void predict(std::span<const double> in, std::span<double> out) const;

  /// One delta-rule step per output row using `predicted` as the layer's
  /// output for `in`.
  void update(std::span<const double> in, std::span<const double> predicted, std::span<const double> target,
              UpdateSign sign = UpdateSign::Descent);

  std::size_t outputs() const { return outputs_; }
  std::size_t inputs() const { return inputs_; }
  std::size_t parameter_count() const { return weights_.size(); }
  double learning_rate() const { return eta_; }
  double weight(std::size_t row, std::size_t col) const { return weights_[row * (inputs_ + 1) + col]; }
  double& weight(std::size_t row, std::size_t col) { return weights_[row * (inputs_ + 1) + col]; }
  std::span<const double> weights() const { return weights_; }

  bool operator==(const LinearLayer&) const = default;

 private:
  std::size_t outputs_;
  std::size_t inputs_;
  double eta_;
  std::vector<double> weights_;
};

/// Base perceptrons: d rows over the m standardized features.
using PerceptronLayer = LinearLayer;
/// Stacked perceptrons: d rows over the d base outputs.
using MetaLayer = LinearLayer;

/// Exponentially faded mean absolute error per target, decay 0.95.
class FadedError {
 public:
  static constexpr double kDecay = 0.95;

  explicit FadedError(std::size_t num_targets) : num_(num_targets, 0.0), den_(num_targets, 0.0) {}

  void update(std::size_t target, double abs_error) {
    num_[target] = kDecay * num_[target] + abs_error;
    den_[target] = kDecay * den_[target] + 1.0;
  }
  /// 0 before the first update.
  double fmae(std::size_t target) const { return den_[target] > 0.0 ? num_[target] / den_[target] : 0.0; }
  double numerator(std::size_t target) const { return num_[target]; }
  double denominator(std::size_t target) const { return den_[target]; }
  std::size_t num_targets() const { return num_.size(); }

  bool operator==(const FadedError&) const = default;

 private:
  std::vector<double> num_;
  std::vector<double> den_;
};

/// Predictors a variant keeps error statistics for. The stacked predictor
/// needs the base layer, so variants tracking it also compute perceptron
/// outputs.
struct VariantTraits {
  std::array<bool, kNumPredictorKinds> tracked{};
  bool adaptive = false;
  PredictorKind fixed = PredictorKind::Mean;

  static VariantTraits of(LearnerVariant v);
  bool needs_base() const { return tracked[1] || tracked[2]; }
  bool needs_meta() const { return tracked[2]; }
};

struct LeafOutputs {
  std::vector<double> base_std;  // empty when the variant has no base layer
  std::vector<double> meta_std;  // empty when the variant has no meta layer
  std::array<std::vector<double>, kNumPredictorKinds> values;  // original scale; empty when not tracked
};

/// The prediction stack of one leaf.
class LeafPredictorSet {
 public:
  LeafPredictorSet(LearnerVariant variant, std::size_t num_features, std::size_t num_targets, double learning_rate,
                   UpdateSign sign);

  /// Randomizes base and meta weights in that order.
  void init_weights(std::mt19937_64& rng);

  /// Copy for a child leaf: same weights, fresh error tables.
  LeafPredictorSet inherit() const;

  /// All tracked predictor outputs for standardized features `x_std`.
  LeafOutputs compute(std::span<const double> x_std, std::span<const RunningStats> target_stats) const;

  /// Per-target argmin of fMAE over tracked predictors (ties go to
  /// mean, then perceptron, then stacked) for adaptive variants; the
  /// variant's sole predictor otherwise.
  Prediction select_and_predict(std::span<const double> x_std, std::span<const RunningStats> target_stats) const;

  /// Predictor selected for target t under the current error tables.
  PredictorKind selected(std::size_t t) const;

  /// Updates the faded errors of every tracked predictor, then takes one
  /// delta-rule step on the base and meta layers. Target statistics must be
  /// the ones used for prediction, i.e. not yet updated with `y`.
  void learn(std::span<const double> x_std, std::span<const double> y, std::span<const RunningStats> target_stats);

  LearnerVariant variant() const { return variant_; }
  const VariantTraits& traits() const { return traits_; }
  bool tracks(PredictorKind k) const { return traits_.tracked[static_cast<std::size_t>(k)]; }
  const std::optional<PerceptronLayer>& base() const { return base_; }
  const std::optional<MetaLayer>& meta() const { return meta_; }
  std::optional<PerceptronLayer>& base() { return base_; }
  std::optional<MetaLayer>& meta() { return meta_; }
  const FadedError* errors(PredictorKind k) const {
    const auto& e = errors_[static_cast<std::size_t>(k)];
    return e ? &*e : nullptr;
  }
  FadedError* errors(PredictorKind k) {
    auto& e = errors_[static_cast<std::size_t>(k)];
    return e ? &*e : nullptr;
  }

 private:
  LearnerVariant variant_;
  VariantTraits traits_;
  std::size_t d_;
  UpdateSign sign_;
  std::optional<PerceptronLayer> base_;
  std::optional<MetaLayer> meta_;
  std::array<std::optional<FadedError>, kNumPredictorKinds> errors_;
};

}  // namespace sstht
