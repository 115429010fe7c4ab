#include "sstht/leaf_models.hpp"

#include <cmath>

namespace sstht {

LinearLayer::LinearLayer(std::size_t outputs, std::size_t inputs, double learning_rate)
    : outputs_(outputs), inputs_(inputs), eta_(learning_rate), weights_(outputs * (inputs + 1), 0.0) {}

void LinearLayer::randomize(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& w : weights_) w = u(rng);
}

void LinearLayer::predict(std::span<const double> in, std::span<double> out) const {
  const std::size_t stride = inputs_ + 1;
  for (std::size_t r = 0; r < outputs_; ++r) {
    const double* w = weights_.data() + r * stride;
    double acc = w[0];
    for (std::size_t j = 0; j < inputs_; ++j) acc += w[j + 1] * in[j];
    out[r] = acc;
  }
}

void LinearLayer::update(std::span<const double> in, std::span<const double> predicted,
                         std::span<const double> target, UpdateSign sign) {
  const std::size_t stride = inputs_ + 1;
  for (std::size_t r = 0; r < outputs_; ++r) {
    const double err = sign == UpdateSign::Descent ? target[r] - predicted[r] : predicted[r] - target[r];
    const double step = eta_ * err;
    double* w = weights_.data() + r * stride;
    w[0] += step;
    for (std::size_t j = 0; j < inputs_; ++j) w[j + 1] += step * in[j];
  }
}

VariantTraits VariantTraits::of(LearnerVariant v) {
  VariantTraits t;
  switch (v) {
    case LearnerVariant::MtrhtMean:
      t.tracked = {true, false, false};
      t.fixed = PredictorKind::Mean;
      break;
    case LearnerVariant::MtrhtPerceptron:
      t.tracked = {false, true, false};
      t.fixed = PredictorKind::Perceptron;
      break;
    case LearnerVariant::IsoupAdaptive:
      t.tracked = {true, true, false};
      t.adaptive = true;
      break;
    case LearnerVariant::Sstht:
      t.tracked = {false, true, true};
      t.fixed = PredictorKind::Stacked;
      break;
    case LearnerVariant::SsthtAdaptive:
      t.tracked = {true, true, true};
      t.adaptive = true;
      break;
  }
  return t;
}

LeafPredictorSet::LeafPredictorSet(LearnerVariant variant, std::size_t num_features, std::size_t num_targets,
                                   double learning_rate, UpdateSign sign)
    : variant_(variant), traits_(VariantTraits::of(variant)), d_(num_targets), sign_(sign) {
  if (traits_.needs_base()) base_.emplace(num_targets, num_features, learning_rate);
  if (traits_.needs_meta()) meta_.emplace(num_targets, num_targets, learning_rate);
  for (std::size_t k = 0; k < kNumPredictorKinds; ++k)
    if (traits_.tracked[k]) errors_[k].emplace(num_targets);
}

void LeafPredictorSet::init_weights(std::mt19937_64& rng) {
  if (base_) base_->randomize(rng);
  if (meta_) meta_->randomize(rng);
}

LeafPredictorSet LeafPredictorSet::inherit() const {
  LeafPredictorSet child = *this;
  for (auto& e : child.errors_)
    if (e) e.emplace(d_);
  return child;
}

LeafOutputs LeafPredictorSet::compute(std::span<const double> x_std,
                                      std::span<const RunningStats> target_stats) const {
  LeafOutputs out;
  if (tracks(PredictorKind::Mean)) {
    auto& v = out.values[0];
    v.resize(d_);
    for (std::size_t t = 0; t < d_; ++t) v[t] = target_stats[t].mean();
  }
  if (base_) {
    out.base_std.resize(d_);
    base_->predict(x_std, out.base_std);
    auto& v = out.values[1];
    v.resize(d_);
    for (std::size_t t = 0; t < d_; ++t) v[t] = target_stats[t].inverse_zscore(out.base_std[t]);
  }
  if (meta_) {
    out.meta_std.resize(d_);
    meta_->predict(out.base_std, out.meta_std);
    auto& v = out.values[2];
    v.resize(d_);
    for (std::size_t t = 0; t < d_; ++t) v[t] = target_stats[t].inverse_zscore(out.meta_std[t]);
  }
  return out;
}

PredictorKind LeafPredictorSet::selected(std::size_t t) const {
  if (!traits_.adaptive) return traits_.fixed;
  PredictorKind best = PredictorKind::Mean;
  double best_err = INFINITY;
  for (std::size_t k = 0; k < kNumPredictorKinds; ++k) {
    if (!errors_[k]) continue;
    const double e = errors_[k]->fmae(t);
    if (e < best_err) {
      best_err = e;
      best = static_cast<PredictorKind>(k);
    }
  }
  return best;
}

Prediction LeafPredictorSet::select_and_predict(std::span<const double> x_std,
                                                std::span<const RunningStats> target_stats) const {
  const LeafOutputs out = compute(x_std, target_stats);
  Prediction p;
  p.values.resize(d_);
  p.per_target_source.resize(d_);
  for (std::size_t t = 0; t < d_; ++t) {
    const PredictorKind k = selected(t);
    p.per_target_source[t] = k;
    p.values[t] = out.values[static_cast<std::size_t>(k)][t];
  }
  return p;
}

void LeafPredictorSet::learn(std::span<const double> x_std, std::span<const double> y,
                             std::span<const RunningStats> target_stats) {
  const LeafOutputs out = compute(x_std, target_stats);
  for (std::size_t k = 0; k < kNumPredictorKinds; ++k) {
    if (!errors_[k]) continue;
    for (std::size_t t = 0; t < d_; ++t) errors_[k]->update(t, std::abs(y[t] - out.values[k][t]));
  }
  if (!base_) return;
  std::vector<double> y_std(d_);
  for (std::size_t t = 0; t < d_; ++t) y_std[t] = target_stats[t].zscore(y[t]);
  base_->update(x_std, out.base_std, y_std, sign_);
  if (meta_) meta_->update(out.base_std, out.meta_std, y_std, sign_);
}

}  // namespace sstht
