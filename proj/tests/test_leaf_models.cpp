#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "sstht/leaf_models.hpp"

using namespace sstht;

namespace {

// Dense reference for y = W [1; x].
std::vector<double> dense_affine(const LinearLayer& layer, const std::vector<double>& x) {
  std::vector<double> y(layer.outputs(), 0.0);
  for (std::size_t r = 0; r < layer.outputs(); ++r) {
    std::vector<double> row(layer.weights().begin() + static_cast<long>(r * (layer.inputs() + 1)),
                            layer.weights().begin() + static_cast<long>((r + 1) * (layer.inputs() + 1)));
    std::vector<double> aug = {1.0};
    aug.insert(aug.end(), x.begin(), x.end());
    for (std::size_t c = 0; c < aug.size(); ++c) y[r] += row[c] * aug[c];
  }
  return y;
}

// Closed-form simple linear regression.
std::pair<double, double> least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {(sy - slope * sx) / n, slope};
}

VectorStats stats_over(const std::vector<std::vector<double>>& rows) {
  VectorStats s(rows[0].size());
  for (const auto& r : rows)
    for (std::size_t t = 0; t < r.size(); ++t) s[t].update(r[t]);
  return s;
}

}  // namespace

TEST_CASE("affine evaluation") {
  LinearLayer layer(1, 1, 0.01);
  double out[1];
  const double x[] = {3.0};
  layer.predict(x, out);
  CHECK(out[0] == 0.0);
  layer.weight(0, 0) = 1.0;
  layer.weight(0, 1) = 2.0;
  layer.predict(x, out);
  CHECK(out[0] == 7.0);
}

TEST_CASE("prediction matches a dense reference") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  LinearLayer layer(4, 6, 0.01);
  layer.randomize(rng);
  for (double w : layer.weights()) {
    CHECK(w >= -1.0);
    CHECK(w <= 1.0);
  }
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(6);
    for (auto& v : x) v = n01(rng);
    std::vector<double> out(4);
    layer.predict(x, out);
    const auto ref = dense_affine(layer, x);
    for (std::size_t r = 0; r < 4; ++r) CHECK(std::abs(out[r] - ref[r]) < 1e-12);
  }
}

TEST_CASE("single delta-rule step") {
  LinearLayer layer(1, 1, 0.1);
  const double x[] = {0.0}, pred[] = {0.0}, target[] = {1.0};
  layer.update(x, pred, target);
  CHECK(layer.weight(0, 0) == doctest::Approx(0.1));
  CHECK(layer.weight(0, 1) == 0.0);

  LinearLayer literal(1, 1, 0.1);
  literal.update(x, pred, target, UpdateSign::Reversed);
  CHECK(literal.weight(0, 0) == doctest::Approx(-0.1));

  LinearLayer still(2, 3, 0.5);
  std::mt19937_64 rng(1);
  still.randomize(rng);
  const auto before = still;
  const double xs[] = {1.0, -2.0, 0.5};
  double out[2];
  still.predict(xs, out);
  still.update(xs, out, out);
  CHECK(still == before);
}

TEST_CASE("delta rule converges to the least-squares line") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-std::sqrt(3.0), std::sqrt(3.0));
  LinearLayer layer(1, 1, 0.01);
  std::vector<double> xs, ys;
  for (int i = 0; i < 10000; ++i) {
    const double x[] = {u(rng)};
    const double y[] = {2.0 * x[0] + 1.0};
    double out[1];
    layer.predict(x, out);
    layer.update(x, out, y);
    xs.push_back(x[0]);
    ys.push_back(y[0]);
  }
  const auto [bias, slope] = least_squares(xs, ys);
  CHECK(std::abs(layer.weight(0, 0) - bias) < 0.05);
  CHECK(std::abs(layer.weight(0, 1) - slope) < 0.05);
}

TEST_CASE("meta layer passthrough and annihilation") {
  LinearLayer meta(3, 3, 0.01);
  const double base[] = {0.5, -1.5, 2.0};
  double out[3];
  meta.predict(base, out);
  for (double v : out) CHECK(v == 0.0);
  for (std::size_t t = 0; t < 3; ++t) meta.weight(t, t + 1) = 1.0;
  meta.predict(base, out);
  for (std::size_t t = 0; t < 3; ++t) CHECK(out[t] == base[t]);
}

TEST_CASE("faded error") {
  FadedError e(2);
  CHECK(e.fmae(0) == 0.0);
  e.update(0, 1.0);
  CHECK(e.fmae(0) == 1.0);
  e.update(0, 0.0);
  CHECK(e.fmae(0) == 0.95 / 1.95);
  CHECK(e.fmae(0) == doctest::Approx(0.48718).epsilon(1e-5));

  for (int i = 0; i < 500; ++i) e.update(1, 2.5);
  CHECK(std::abs(e.fmae(1) - 2.5) < 1e-6);
  CHECK(e.denominator(1) < 20.0);
}

TEST_CASE("variant traits") {
  CHECK(VariantTraits::of(LearnerVariant::MtrhtMean).tracked == std::array{true, false, false});
  CHECK(VariantTraits::of(LearnerVariant::MtrhtPerceptron).tracked == std::array{false, true, false});
  CHECK(VariantTraits::of(LearnerVariant::IsoupAdaptive).tracked == std::array{true, true, false});
  CHECK(VariantTraits::of(LearnerVariant::Sstht).tracked == std::array{false, true, true});
  CHECK(VariantTraits::of(LearnerVariant::SsthtAdaptive).tracked == std::array{true, true, true});
  CHECK(VariantTraits::of(LearnerVariant::Sstht).fixed == PredictorKind::Stacked);
  CHECK_FALSE(VariantTraits::of(LearnerVariant::Sstht).adaptive);
}

TEST_CASE("layer shapes") {
  LeafPredictorSet set(LearnerVariant::SsthtAdaptive, 5, 3, 0.01, UpdateSign::Descent);
  REQUIRE(set.base().has_value());
  REQUIRE(set.meta().has_value());
  CHECK(set.base()->parameter_count() == 3 * (5 + 1));
  CHECK(set.meta()->parameter_count() == 3 * (3 + 1));
  LeafPredictorSet mean(LearnerVariant::MtrhtMean, 5, 3, 0.01, UpdateSign::Descent);
  CHECK_FALSE(mean.base().has_value());
  CHECK(mean.errors(PredictorKind::Perceptron) == nullptr);
}

TEST_CASE("adaptive selection picks the lowest faded error") {
  LeafPredictorSet set(LearnerVariant::SsthtAdaptive, 2, 2, 0.01, UpdateSign::Descent);
  set.errors(PredictorKind::Mean)->update(0, 0.5);
  set.errors(PredictorKind::Perceptron)->update(0, 0.3);
  set.errors(PredictorKind::Stacked)->update(0, 0.2);
  CHECK(set.selected(0) == PredictorKind::Stacked);
  // Untouched target: all zero, so the first in mean < perceptron < stacked.
  CHECK(set.selected(1) == PredictorKind::Mean);

  set.errors(PredictorKind::Mean)->update(1, 0.4);
  set.errors(PredictorKind::Perceptron)->update(1, 0.4);
  set.errors(PredictorKind::Stacked)->update(1, 0.4);
  CHECK(set.selected(1) == PredictorKind::Mean);
  set.errors(PredictorKind::Mean)->update(1, 1.0);
  CHECK(set.selected(1) == PredictorKind::Perceptron);

  const auto stats = stats_over({{1.0, 2.0}, {3.0, 6.0}});
  const double x[] = {0.1, -0.2};
  const auto p = set.select_and_predict(x, stats);
  const auto all = set.compute(x, stats);
  CHECK(p.per_target_source[0] == PredictorKind::Stacked);
  CHECK(p.values[0] == all.values[2][0]);
  CHECK(p.per_target_source[1] == PredictorKind::Perceptron);
  CHECK(p.values[1] == all.values[1][1]);
}

TEST_CASE("selection is invariant to rescaling all errors") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    LeafPredictorSet a(LearnerVariant::SsthtAdaptive, 1, 1, 0.01, UpdateSign::Descent);
    LeafPredictorSet b = a;
    for (std::size_t k = 0; k < 3; ++k) {
      const double err = u(rng);
      a.errors(static_cast<PredictorKind>(k))->update(0, err);
      b.errors(static_cast<PredictorKind>(k))->update(0, 7.5 * err);
    }
    CHECK(a.selected(0) == b.selected(0));
  }
}

TEST_CASE("non-adaptive stacked always reports stacked") {
  LeafPredictorSet set(LearnerVariant::Sstht, 2, 3, 0.01, UpdateSign::Descent);
  set.errors(PredictorKind::Perceptron)->update(0, 0.0);
  set.errors(PredictorKind::Stacked)->update(0, 100.0);
  const auto stats = stats_over({{0, 0, 0}, {1, 2, 3}});
  const double x[] = {0.0, 0.0};
  const auto p = set.select_and_predict(x, stats);
  for (auto k : p.per_target_source) CHECK(k == PredictorKind::Stacked);
}

TEST_CASE("mean predictor reports target means") {
  LeafPredictorSet set(LearnerVariant::MtrhtMean, 1, 2, 0.01, UpdateSign::Descent);
  const auto stats = stats_over({{1.0, 3.0}, {3.0, 5.0}});
  const double x[] = {0.0};
  const auto p = set.select_and_predict(x, stats);
  CHECK(p.values == std::vector<double>{2.0, 4.0});
}

TEST_CASE("learning updates faded errors in original scale") {
  LeafPredictorSet set(LearnerVariant::IsoupAdaptive, 1, 1, 0.01, UpdateSign::Descent);
  std::mt19937_64 rng(2);
  set.init_weights(rng);
  const auto stats = stats_over({{0.0}, {2.0}});
  const double x[] = {0.5}, y[] = {4.0};
  const auto before = set.compute(x, stats);
  set.learn(x, y, stats);
  CHECK(set.errors(PredictorKind::Mean)->fmae(0) == doctest::Approx(3.0));
  CHECK(set.errors(PredictorKind::Perceptron)->fmae(0) == doctest::Approx(std::abs(4.0 - before.values[1][0])));
}

TEST_CASE("stacked layer learns from base outputs") {
  LeafPredictorSet set(LearnerVariant::Sstht, 2, 2, 0.1, UpdateSign::Descent);
  std::mt19937_64 rng(8);
  set.init_weights(rng);
  const auto stats = stats_over({{0.0, 10.0}, {2.0, 14.0}});
  const double x[] = {1.0, -1.0}, y[] = {1.5, 9.0};
  const auto out = set.compute(x, stats);
  auto meta = *set.meta();
  std::vector<double> y_std = {stats[0].zscore(y[0]), stats[1].zscore(y[1])};
  meta.update(out.base_std, out.meta_std, y_std);
  set.learn(x, y, stats);
  CHECK(*set.meta() == meta);
}

TEST_CASE("inherit keeps weights and resets errors") {
  LeafPredictorSet set(LearnerVariant::SsthtAdaptive, 3, 2, 0.01, UpdateSign::Descent);
  std::mt19937_64 rng(5);
  set.init_weights(rng);
  set.errors(PredictorKind::Stacked)->update(1, 3.0);
  const auto child = set.inherit();
  CHECK(*child.base() == *set.base());
  CHECK(*child.meta() == *set.meta());
  CHECK(child.errors(PredictorKind::Stacked)->denominator(1) == 0.0);
}

TEST_CASE("one learning step reduces the perceptron error on that example") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    LeafPredictorSet set(LearnerVariant::MtrhtPerceptron, 3, 2, 0.01, UpdateSign::Descent);
    set.init_weights(rng);
    const auto stats = stats_over({{0.0, 5.0}, {2.0, 9.0}, {1.0, 4.0}});
    const double x[] = {u(rng), u(rng), u(rng)}, y[] = {u(rng), 6.0 + u(rng)};
    const auto before = set.compute(x, stats).values[1];
    set.learn(x, y, stats);
    const auto after = set.compute(x, stats).values[1];
    for (std::size_t t = 0; t < 2; ++t) {
      if (before[t] == y[t]) continue;
      CHECK(std::abs(after[t] - y[t]) < std::abs(before[t] - y[t]));
    }
  }
}
