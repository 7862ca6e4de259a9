// Copyright 2026 The fdlp-dereverb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "fdlp/error.h"
#include "fdlp/joint_trainer.h"
#include "test_util.h"

using namespace fdlp;
using fdlp::testing::max_abs;
using fdlp::testing::max_abs_diff;
using fdlp::testing::random_matrix;

namespace {

EstimatorConfig tiny_estimator_config(std::size_t bands) {
  EstimatorConfig c;
  c.num_bands = bands;
  c.layers = {{5, 3, Activation::kTanh}, {3, 2, Activation::kTanh}, {3, 1, Activation::kLogGainClamp}};
  return c;
}

GainEstimator tiny_estimator(std::size_t bands, std::uint64_t seed) {
  GainEstimator e(tiny_estimator_config(bands), seed);
  std::mt19937_64 rng(seed + 7);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (Tensor& t : e.parameters())
    for (double& v : t.values) v += u(rng);
  e.parameters().back().values[0] = -1.0;
  return e;
}

ClassifierConfig tiny_classifier_config(std::size_t bands, std::size_t classes) {
  ClassifierConfig c;
  c.num_bands = bands;
  c.context_left = 2;
  c.context_right = 2;
  c.hidden = 6;
  c.num_classes = classes;
  return c;
}

// Segment whose early part is a slowly wandering spectral peak; labels
// follow its band-energy centroid.
JointBatch make_batch(std::size_t q, std::size_t n, std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double phase = 6.283 * u(rng), rate = 0.05 + 0.1 * u(rng);
  Matrix early(q, n), late(q, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double centre = 0.5 * (q - 1) * (1.0 + std::sin(phase + rate * i));
    for (std::size_t b = 0; b < q; ++b) {
      const double d = (b - centre);
      early(b, i) = std::exp(-d * d) + 0.01;
      late(b, i) = 0.3 * (0.5 + u(rng)) * (i > 0 ? early(b, i - 1) : early(b, i));
    }
  }
  JointBatch out;
  SubbandEnvelopes e, l;
  e.data = early;
  l.data = late;
  Matrix rev = early;
  for (std::size_t i = 0; i < rev.size(); ++i) rev.values()[i] += late.values()[i];
  out.reverb_log_env = log_envelope(rev);
  out.target_log_gain = training_target(oracle_gain(e, l));
  out.labels = centroid_labels(early, classes);
  return out;
}

std::vector<JointBatch> make_data(std::size_t count, std::size_t q, std::size_t n,
                                  std::size_t classes) {
  std::vector<JointBatch> d;
  for (std::size_t i = 0; i < count; ++i) d.push_back(make_batch(q, n, classes, 500 + i));
  return d;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  const double ab = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  const double aa = std::inner_product(a.begin(), a.end(), a.begin(), 0.0);
  const double bb = std::inner_product(b.begin(), b.end(), b.begin(), 0.0);
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("cross entropy values") {
  CHECK(cross_entropy_loss(Matrix(5, 4, 0.0), std::vector<int>{0, 1, 2, 3, 0}) ==
        doctest::Approx(std::log(4.0)));
  Matrix z(2, 3);
  z.storage() = {2.0, 0.0, -1.0, 0.5, 0.5, 3.0};
  const std::vector<int> lab = {0, 2};
  const double l0 = std::log(std::exp(2.0) + 1.0 + std::exp(-1.0)) - 2.0;
  const double l1 = std::log(2 * std::exp(0.5) + std::exp(3.0)) - 3.0;
  CHECK(cross_entropy_loss(z, lab) == doctest::Approx(0.5 * (l0 + l1)).epsilon(1e-14));
  const Matrix p = softmax_rows(z);
  for (std::size_t r = 0; r < 2; ++r)
    CHECK(p(r, 0) + p(r, 1) + p(r, 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p(1, 0) == doctest::Approx(std::exp(0.5) / (2 * std::exp(0.5) + std::exp(3.0))));
  // Confident and right is nearly free.
  Matrix sure(1, 2);
  sure.storage() = {40.0, 0.0};
  CHECK(cross_entropy_loss(sure, std::vector<int>{0}) < 1e-15);
}

TEST_CASE("joint loss arithmetic") {
  CHECK(kDefaultMu == 0.4);
  CHECK(joint_loss(1.0, 0.5, 0.4) == 1.2);
  CHECK(joint_loss(2.5, 3.0, 0.0) == 2.5);
  CHECK_THROWS_AS(joint_loss(1.0, 1.0, -0.1), InvalidInput);
  const GainEstimator est = tiny_estimator(3, 1);
  const ToyClassifier clf(tiny_classifier_config(3, 2), 2);
  const JointBatch b = make_batch(3, 32, 2, 3);
  JointConfig cfg;
  const JointLossReport r = joint_segment_loss(est, clf, b, cfg);
  CHECK(r.total == r.ce + 0.4 * r.mse);
}

TEST_CASE("centroid labels") {
  Matrix env(36, 800, 1e-12);
  for (std::size_t i = 0; i < 400; ++i) env(35, i) = 1.0;
  for (std::size_t i = 400; i < 800; ++i) env(4, i) = 1.0;
  const std::vector<int> lab = centroid_labels(env, 8);
  REQUIRE(lab.size() == 198);
  CHECK(lab.front() == 7);
  CHECK(lab.back() == 4 * 8 / 36);
  for (int v : centroid_labels(random_matrix(36, 800, 1), 8)) {
    CHECK(v >= 0);
    CHECK(v < 8);
  }
}

TEST_CASE("classifier shapes") {
  const ToyClassifier c;
  CHECK(c.config().input_width() == 21 * 36);
  CHECK(c.parameters()[0].shape == Shape{128, 756});
  CHECK(c.parameters()[2].shape == Shape{8, 128});
  FeatureMatrix f;
  f.data = random_matrix(198, 36, 2);
  const Matrix z = classifier_logits(c, f);
  CHECK(z.rows() == 198);
  CHECK(z.cols() == 8);
  CHECK_THROWS_AS(ToyClassifier(tiny_classifier_config(3, 1), 1), InvalidInput);
}

TEST_CASE("full joint pipeline passes finite differences") {
  const GainEstimator est = tiny_estimator(3, 11);
  ToyClassifier clf(tiny_classifier_config(3, 2), 12);
  const JointBatch b = make_batch(3, 32, 2, 13);
  JointConfig cfg;
  JointGradients g;
  joint_segment_loss(est, clf, b, cfg, &g);
  const double h = 1e-5;
  auto total = [&](const GainEstimator& e, const ToyClassifier& c) {
    return joint_segment_loss(e, c, b, cfg).total;
  };
  for (std::size_t t = 0; t < g.estimator.size(); ++t) {
    std::vector<double> numeric(g.estimator[t].size());
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      GainEstimator up = est, down = est;
      up.parameters()[t].values[i] += h;
      down.parameters()[t].values[i] -= h;
      numeric[i] = (total(up, clf) - total(down, clf)) / (2 * h);
    }
    CAPTURE(t);
    CHECK(max_abs_diff(g.estimator[t], numeric) / std::max(max_abs(numeric), 1e-8) <= 1e-4);
  }
  for (std::size_t t = 0; t < g.classifier.size(); ++t) {
    std::vector<double> numeric(g.classifier[t].size());
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      ToyClassifier up = clf, down = clf;
      up.parameters()[t].values[i] += h;
      down.parameters()[t].values[i] -= h;
      numeric[i] = (total(est, up) - total(est, down)) / (2 * h);
    }
    CAPTURE(t);
    CHECK(max_abs_diff(g.classifier[t], numeric) / std::max(max_abs(numeric), 1e-8) <= 1e-4);
  }
}

TEST_CASE("gradient routing shapes at default scale") {
  GainEstimator est;
  ToyClassifier clf;
  const JointBatch b = make_batch(36, 800, 8, 21);
  JointGradients g;
  joint_segment_loss(est, clf, b, JointConfig{}, &g);
  CHECK(g.feature_grad_shape == Shape{198, 36});
  CHECK(g.envelope_grad_shape == Shape{36, 800});
}

TEST_CASE("detached classifier leaves only the weighted MSE on the estimator") {
  const GainEstimator est = tiny_estimator(3, 31);
  const ToyClassifier clf(tiny_classifier_config(3, 2), 32);
  const JointBatch b = make_batch(3, 32, 2, 33);
  JointConfig cfg;
  cfg.detach_classifier = true;
  cfg.mu = 0.7;
  JointGradients g;
  joint_segment_loss(est, clf, b, cfg, &g);
  std::vector<std::vector<double>> pure;
  pair_loss(est, {b.reverb_log_env, b.target_log_gain}, 0.0, &pure);
  for (std::size_t t = 0; t < pure.size(); ++t)
    for (std::size_t i = 0; i < pure[t].size(); ++i)
      CHECK(g.estimator[t][i] == doctest::Approx(0.7 * pure[t][i]).epsilon(1e-12));
  CHECK(g.feature_grad_shape.empty());

  cfg.mu = 0.0;
  joint_segment_loss(est, clf, b, cfg, &g);
  for (const auto& t : g.estimator) CHECK(max_abs(t) == 0.0);
  CHECK(max_abs(g.classifier[0]) > 0.0);
}

TEST_CASE("frozen estimator stays put") {
  const std::vector<JointBatch> data = make_data(4, 3, 32, 2);
  JointConfig cfg;
  cfg.epochs = 2;
  cfg.freeze_estimator = true;
  const GainEstimator est = tiny_estimator(3, 41);
  const JointResult r = train_joint(data, est, ToyClassifier(tiny_classifier_config(3, 2), 42), cfg);
  for (std::size_t i = 0; i < est.parameters().size(); ++i)
    CHECK(r.estimator.parameters()[i] == est.parameters()[i]);
  CHECK(r.first_estimator_update.empty());
  CHECK(r.history.size() == 3);
}

TEST_CASE("huge mu makes the first step a pure MSE step") {
  const std::vector<JointBatch> data = make_data(6, 3, 32, 2);
  const GainEstimator est = tiny_estimator(3, 51);
  const ToyClassifier clf(tiny_classifier_config(3, 2), 52);
  JointConfig cfg;
  cfg.mu = 1e6;
  cfg.epochs = 1;
  cfg.batch = 3;
  cfg.seed = 9;
  const JointResult r = train_joint(data, est, clf, cfg);

  // Same first batch, MSE only, one Adam step by hand.
  const std::vector<std::size_t> order = epoch_order(data.size(), cfg.seed, 1);
  std::vector<std::vector<double>> sum, g;
  for (std::size_t j = 0; j < 3; ++j) {
    const JointBatch& b = data[order[j]];
    pair_loss(est, {b.reverb_log_env, b.target_log_gain}, 0.0, &g);
    if (sum.empty()) sum.assign(g.size(), {});
    for (std::size_t t = 0; t < g.size(); ++t) {
      sum[t].resize(g[t].size(), 0.0);
      for (std::size_t i = 0; i < g[t].size(); ++i) sum[t][i] += g[t][i] / 3.0;
    }
  }
  std::vector<Tensor> p = est.parameters();
  Adam(cfg.adam).step(p, sum);
  std::vector<double> manual;
  for (std::size_t t = 0; t < p.size(); ++t)
    for (std::size_t i = 0; i < p[t].size(); ++i)
      manual.push_back(p[t].values[i] - est.parameters()[t].values[i]);
  REQUIRE(manual.size() == r.first_estimator_update.size());
  CHECK(cosine(manual, r.first_estimator_update) >= 0.999);
}

TEST_CASE("zero mu with a frozen classifier still lowers cross entropy") {
  const std::vector<JointBatch> data = make_data(8, 3, 64, 2);
  GainEstimator est = tiny_estimator(3, 61);
  JointConfig pre;
  pre.epochs = 10;
  pre.adam.lr = 1e-2;
  ToyClassifier clf = pretrain_classifier(data, est, tiny_classifier_config(3, 2), pre);
  JointConfig cfg;
  cfg.mu = 0.0;
  cfg.epochs = 5;
  cfg.freeze_classifier = true;
  cfg.adam.lr = 1e-2;
  const JointResult r = train_joint(data, est, clf, cfg);
  REQUIRE(r.history.size() == 6);
  for (std::size_t e = 1; e < r.history.size(); ++e)
    CHECK(r.history[e].ce < r.history[e - 1].ce);
  for (std::size_t i = 0; i < clf.parameters().size(); ++i)
    CHECK(r.classifier.parameters()[i] == clf.parameters()[i]);
}

TEST_CASE("joint input validation") {
  JointConfig cfg;
  const GainEstimator est = tiny_estimator(3, 1);
  const ToyClassifier other(tiny_classifier_config(4, 2), 1);
  CHECK_THROWS_AS(train_joint(make_data(2, 3, 32, 2), est, other, cfg), InvalidInput);
  CHECK_THROWS_AS(train_joint({}, est, ToyClassifier(tiny_classifier_config(3, 2), 1), cfg),
                  InvalidInput);
  JointBatch b = make_batch(3, 32, 2, 1);
  b.labels.pop_back();
  CHECK_THROWS_AS(joint_segment_loss(est, ToyClassifier(tiny_classifier_config(3, 2), 1), b, cfg),
                  InvalidInput);
}
