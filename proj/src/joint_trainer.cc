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


#include "fdlp/joint_trainer.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "fdlp/core_dsp.h"
#include "fdlp/error.h"

namespace fdlp {

ToyClassifier::ToyClassifier(ClassifierConfig config, std::uint64_t seed)
    : config_(config) {
  if (config_.num_bands == 0 || config_.hidden == 0 || config_.num_classes < 2)
    throw InvalidInput("classifier: need bands, hidden units and >= 2 classes");
  const std::size_t d = config_.input_width(), h = config_.hidden;
  const std::size_t s = config_.num_classes;
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Tensor& t, std::size_t fan_in) {
    const double a = std::sqrt(3.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-a, a);
    for (double& v : t.values) v = u(rng);
  };
  Tensor w1({h, d}), w2({s, h});
  fill(w1, d);
  fill(w2, h);
  params_ = {std::move(w1), Tensor({h}), std::move(w2), Tensor({s})};
  feat_mean_.assign(config_.num_bands, 0.0);
  feat_std_.assign(config_.num_bands, 1.0);
}

ToyClassifier::ToyClassifier(ClassifierConfig config, std::vector<Tensor> params,
                             std::vector<double> feat_mean,
                             std::vector<double> feat_std)
    : ToyClassifier(config, 0) {
  if (params.size() != params_.size())
    throw InvalidInput("classifier: expected 4 parameter tensors");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape != params_[i].shape)
      throw InvalidInput("classifier: parameter " + std::to_string(i) +
                         " has the wrong shape");
    for (double v : params[i].values)
      if (!std::isfinite(v)) throw InvalidInput("classifier: non-finite parameter");
  }
  params_ = std::move(params);
  set_normalization(std::move(feat_mean), std::move(feat_std));
}

void ToyClassifier::set_normalization(std::vector<double> mean,
                                      std::vector<double> stddev) {
  if (mean.size() != config_.num_bands || stddev.size() != config_.num_bands)
    throw InvalidInput("classifier: normalization size does not match bands");
  for (std::size_t q = 0; q < stddev.size(); ++q)
    if (!std::isfinite(mean[q]) || !(stddev[q] > 0.0) || !std::isfinite(stddev[q]))
      throw InvalidInput("classifier: invalid normalization for band " +
                         std::to_string(q));
  feat_mean_ = std::move(mean);
  feat_std_ = std::move(stddev);
}

ag::Var ToyClassifier::forward(ag::Tape& tape, ag::Var features,
                               std::vector<ag::Var>& params) const {
  if (features.shape().size() != 2 || features.shape()[1] != config_.num_bands)
    throw InvalidInput("classifier: expected " +
                       std::to_string(config_.num_bands) + " feature bands");
  params.clear();
  for (const Tensor& t : params_) params.push_back(tape.parameter(t));
  std::vector<double> gain(feat_std_.size());
  for (std::size_t q = 0; q < gain.size(); ++q) gain[q] = 1.0 / feat_std_[q];
  ag::Var x = ag::column_affine(features, feat_mean_, gain);
  x = ag::splice(x, config_.context_left, config_.context_right);
  ag::Var h = ag::tanh(ag::linear(x, params[0], params[1]));
  return ag::linear(h, params[2], params[3]);
}

Matrix classifier_logits(const ToyClassifier& classifier,
                         const FeatureMatrix& features) {
  ag::Tape tape;
  std::vector<ag::Var> params;
  ag::Var y = classifier.forward(
      tape,
      tape.constant(features.data.storage(),
                    {features.num_frames(), features.num_bands()}),
      params);
  Matrix out(y.shape()[0], y.shape()[1]);
  out.storage() = y.value();
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto z = logits.row(r);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) sum += (p(r, k) = std::exp(z[k] - mx));
    for (std::size_t k = 0; k < z.size(); ++k) p(r, k) /= sum;
  }
  return p;
}

double cross_entropy_loss(const Matrix& logits, std::span<const int> labels) {
  ag::Tape tape;
  return ag::cross_entropy(
             tape.constant(logits.storage(), {logits.rows(), logits.cols()}),
             labels)
      .value()[0];
}

double joint_loss(double e_ce, double e_mse, double mu) {
  if (!(mu >= 0.0)) throw InvalidInput("joint_loss: mu must be >= 0");
  return e_ce + mu * e_mse;
}

std::vector<int> centroid_labels(const Matrix& clean_env,
                                 std::size_t num_classes) {
  if (num_classes < 1) throw InvalidInput("centroid_labels: need >= 1 class");
  const FeatureMatrix f = integrate_envelopes(clean_env, kDefaultEnvelopeRate);
  const std::size_t nq = f.num_bands();
  std::vector<int> labels(f.num_frames());
  for (std::size_t m = 0; m < f.num_frames(); ++m) {
    double num = 0.0, den = 0.0;
    for (std::size_t q = 0; q < nq; ++q) {
      const double e = std::exp(f.data(m, q));
      num += static_cast<double>(q) * e;
      den += e;
    }
    const double c = den > 0.0 ? num / den : 0.0;
    const auto k = static_cast<std::size_t>(
        c * static_cast<double>(num_classes) / static_cast<double>(nq));
    labels[m] = static_cast<int>(std::min(k, num_classes - 1));
  }
  return labels;
}

JointLossReport joint_segment_loss(const GainEstimator& estimator,
                                   const ToyClassifier& classifier,
                                   const JointBatch& batch,
                                   const JointConfig& config,
                                   JointGradients* grads) {
  if (!batch.reverb_log_env.same_shape(batch.target_log_gain))
    throw InvalidInput("joint: envelope and target shapes differ");
  if (!(config.mu >= 0.0)) throw InvalidInput("joint: mu must be >= 0");
  ag::Tape tape;
  const Shape shape{batch.reverb_log_env.rows(), batch.reverb_log_env.cols()};
  ag::Var x = tape.constant(batch.reverb_log_env.storage(), shape);
  ag::Var target = tape.constant(batch.target_log_gain.storage(), shape);

  std::vector<ag::Var> ep, cp;
  ag::Var log_gain = estimator.forward(tape, x, ep);
  ag::Var routed = config.detach_classifier ? ag::detach(log_gain) : log_gain;
  ag::Var env = ag::exp(ag::add(x, routed));
  const std::vector<double> kernel = hamming_window(kIntegrationWindow);
  ag::Var feats = ag::log_floor(
      ag::strided_integrate(env, kernel, kIntegrationHop), kEnvelopeFloor);
  ag::Var logits = classifier.forward(tape, feats, cp);
  ag::Var ce = ag::cross_entropy(logits, batch.labels);
  ag::Var mse = ag::mse(log_gain, target);
  ag::Var total = ag::add(ce, ag::scale(mse, config.mu));

  JointLossReport r{ce.value()[0], mse.value()[0], total.value()[0]};
  if (grads != nullptr) {
    tape.backward(total);
    grads->loss = r;
    grads->estimator.clear();
    grads->classifier.clear();
    for (const ag::Var& v : ep) grads->estimator.push_back(v.grad());
    for (const ag::Var& v : cp) grads->classifier.push_back(v.grad());
    grads->feature_grad_shape.clear();
    grads->envelope_grad_shape.clear();
    if (feats.requires_grad())
      grads->feature_grad_shape = {feats.shape()[0],
                                   feats.grad().size() / feats.shape()[0]};
    if (env.requires_grad())
      grads->envelope_grad_shape = {env.shape()[0],
                                    env.grad().size() / env.shape()[0]};
  }
  return r;
}

JointLossReport joint_dataset_loss(const GainEstimator& estimator,
                                   const ToyClassifier& classifier,
                                   const std::vector<JointBatch>& data,
                                   const JointConfig& config) {
  if (data.empty()) throw InvalidInput("joint: empty dataset");
  JointLossReport acc;
  for (const JointBatch& b : data) {
    const JointLossReport r = joint_segment_loss(estimator, classifier, b, config);
    acc.ce += r.ce;
    acc.mse += r.mse;
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  acc.ce *= inv;
  acc.mse *= inv;
  acc.total = joint_loss(acc.ce, acc.mse, config.mu);
  return acc;
}

namespace {

void zero_like(std::vector<std::vector<double>>& acc,
               const std::vector<Tensor>& params) {
  acc.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    acc[i].assign(params[i].size(), 0.0);
}

void accumulate(std::vector<std::vector<double>>& acc,
                const std::vector<std::vector<double>>& g) {
  for (std::size_t i = 0; i < acc.size(); ++i)
    for (std::size_t k = 0; k < acc[i].size(); ++k) acc[i][k] += g[i][k];
}

void scale_all(std::vector<std::vector<double>>& acc, double c) {
  for (auto& g : acc)
    for (double& v : g) v *= c;
}

double norm_of(const GainEstimator& e, const ToyClassifier& c) {
  const double a = e.parameter_norm();
  double b = 0.0;
  for (const Tensor& t : c.parameters())
    for (double v : t.values) b += v * v;
  return std::sqrt(a * a + b);
}

}  // namespace

JointResult train_joint(const std::vector<JointBatch>& data,
                        GainEstimator estimator, ToyClassifier classifier,
                        const JointConfig& config) {
  if (data.empty()) throw InvalidInput("train_joint: empty dataset");
  if (config.batch == 0) throw InvalidInput("train_joint: batch must be >= 1");
  if (estimator.config().num_bands != classifier.config().num_bands)
    throw InvalidInput("train_joint: estimator and classifier band counts differ");

  JointResult result{std::move(estimator), std::move(classifier), {}, {}};
  GainEstimator& est = result.estimator;
  ToyClassifier& clf = result.classifier;
  Adam est_opt(config.adam), clf_opt(config.adam);
  result.history.push_back(joint_dataset_loss(est, clf, data, config));

  JointGradients g;
  std::vector<std::vector<double>> ge, gc;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::vector<std::size_t> order = epoch_order(data.size(), config.seed, epoch);
    for (std::size_t start = 0, b = 0; start < order.size();
         start += config.batch, ++b) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      zero_like(ge, est.parameters());
      zero_like(gc, clf.parameters());
      for (std::size_t j = start; j < end; ++j) {
        const JointBatch& item = data[order[j]];
        joint_segment_loss(est, clf, item, config, &g);
        if (!std::isfinite(g.loss.total))
          throw TrainingDiverged(epoch, b, norm_of(est, clf));
        if (!config.detach_classifier) {
          const std::size_t nq = item.reverb_log_env.rows();
          const std::size_t n = item.reverb_log_env.cols();
          if (g.feature_grad_shape != Shape{feature_frame_count(n), nq} ||
              g.envelope_grad_shape != Shape{nq, n})
            throw NumericalError("train_joint: gradient routing shape mismatch",
                                 epoch);
        }
        accumulate(ge, g.estimator);
        accumulate(gc, g.classifier);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      scale_all(ge, inv);
      scale_all(gc, inv);
      if (!config.freeze_estimator) {
        const std::vector<Tensor> before = est.parameters();
        est_opt.step(est.parameters(), ge);
        if (result.first_estimator_update.empty())
          for (std::size_t i = 0; i < before.size(); ++i)
            for (std::size_t k = 0; k < before[i].size(); ++k)
              result.first_estimator_update.push_back(
                  est.parameters()[i].values[k] - before[i].values[k]);
      }
      if (!config.freeze_classifier) clf_opt.step(clf.parameters(), gc);
    }
    const JointLossReport r = joint_dataset_loss(est, clf, data, config);
    if (!std::isfinite(r.total))
      throw TrainingDiverged(epoch, order.size() / config.batch, norm_of(est, clf));
    result.history.push_back(r);
  }
  return result;
}

FeatureMatrix dereverberated_features(const GainEstimator& estimator,
                                      const Matrix& reverb_log_env) {
  const Matrix g = estimator_forward(estimator, reverb_log_env);
  Matrix env(g.rows(), g.cols());
  for (std::size_t i = 0; i < env.size(); ++i)
    env.values()[i] = std::exp(reverb_log_env.values()[i] + g.values()[i]);
  return integrate_envelopes(env, kDefaultEnvelopeRate);
}

void fit_feature_normalization(ToyClassifier& classifier,
                               const GainEstimator& estimator,
                               const std::vector<JointBatch>& data) {
  if (data.empty()) throw InvalidInput("fit_feature_normalization: empty dataset");
  const std::size_t nq = classifier.config().num_bands;
  std::vector<double> sum(nq, 0.0), sq(nq, 0.0);
  double count = 0.0;
  for (const JointBatch& b : data) {
    const FeatureMatrix f = dereverberated_features(estimator, b.reverb_log_env);
    for (std::size_t m = 0; m < f.num_frames(); ++m)
      for (std::size_t q = 0; q < nq; ++q) {
        sum[q] += f.data(m, q);
        sq[q] += f.data(m, q) * f.data(m, q);
      }
    count += static_cast<double>(f.num_frames());
  }
  std::vector<double> mean(nq), sd(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    mean[q] = sum[q] / count;
    sd[q] = std::max(std::sqrt(std::max(sq[q] / count - mean[q] * mean[q], 0.0)),
                     1e-6);
  }
  classifier.set_normalization(std::move(mean), std::move(sd));
}

ToyClassifier pretrain_classifier(const std::vector<JointBatch>& data,
                                  const GainEstimator& estimator,
                                  const ClassifierConfig& model,
                                  const JointConfig& config) {
  ToyClassifier clf(model, config.seed);
  fit_feature_normalization(clf, estimator, data);
  JointConfig c = config;
  c.freeze_estimator = true;
  c.freeze_classifier = false;
  return train_joint(data, estimator, std::move(clf), c).classifier;
}

}  // namespace fdlp
