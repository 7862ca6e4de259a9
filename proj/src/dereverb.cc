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


#include "fdlp/dereverb.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fdlp/core_dsp.h"
#include "fdlp/error.h"

namespace fdlp {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw InvalidInput(std::string(op) + ": shape mismatch (" +
                       std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                       " vs " + std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()) + ")");
}

std::size_t in_channels(const EstimatorConfig& c, std::size_t layer) {
  return layer == 0 ? 1 : c.layers[layer - 1].out_channels;
}

}  // namespace

GainTrajectory oracle_gain(const SubbandEnvelopes& early,
                           const SubbandEnvelopes& late) {
  check_same_shape(early.data, late.data, "oracle_gain");
  GainTrajectory g{Matrix(early.data.rows(), early.data.cols())};
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    const double e = std::max(early.data.values()[i], kEnvelopeFloor);
    const double l = std::max(late.data.values()[i], 0.0);
    if (!std::isfinite(e) || !std::isfinite(l))
      throw InvalidInput("oracle_gain: non-finite envelope value");
    g.data.values()[i] = e / (e + l);
  }
  return g;
}

SubbandEnvelopes apply_log_gain(const SubbandEnvelopes& reverb,
                                const Matrix& log_gain) {
  check_same_shape(reverb.data, log_gain, "apply_gain");
  SubbandEnvelopes out = reverb;
  out.warnings.clear();
  for (std::size_t i = 0; i < log_gain.size(); ++i) {
    const double lg = log_gain.values()[i];
    if (!(lg <= 0.0)) throw InvalidInput("apply_gain: gain outside (0, 1]");
    const double env = std::max(reverb.data.values()[i], kEnvelopeFloor);
    out.data.values()[i] = std::max(std::exp(lg + std::log(env)), kEnvelopeFloor);
  }
  return out;
}

SubbandEnvelopes apply_gain(const SubbandEnvelopes& reverb,
                            const GainTrajectory& gain) {
  Matrix lg(gain.data.rows(), gain.data.cols());
  for (std::size_t i = 0; i < lg.size(); ++i) {
    const double g = gain.data.values()[i];
    if (!(g > 0.0 && g <= 1.0))
      throw InvalidInput("apply_gain: gain outside (0, 1]");
    lg.values()[i] = std::log(g);
  }
  return apply_log_gain(reverb, lg);
}

Matrix log_envelope(const Matrix& env) {
  Matrix out(env.rows(), env.cols());
  for (std::size_t i = 0; i < env.size(); ++i)
    out.values()[i] = std::log(std::max(env.values()[i], kEnvelopeFloor));
  return out;
}

Matrix training_target(const GainTrajectory& gain, double limit) {
  const double lowest = -0.95 * limit;
  Matrix out(gain.data.rows(), gain.data.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.values()[i] = std::clamp(std::log(gain.data.values()[i]), lowest, 0.0);
  return out;
}

void validate(const EstimatorConfig& c) {
  if (c.num_bands == 0) throw InvalidInput("estimator: num_bands must be >= 1");
  if (c.layers.empty()) throw InvalidInput("estimator: no layers");
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    const ConvLayerSpec& s = c.layers[l];
    if (s.width == 0 || s.width % 2 == 0)
      throw InvalidInput("estimator: layer " + std::to_string(l) +
                         " width must be odd");
    if (s.out_channels == 0)
      throw InvalidInput("estimator: layer " + std::to_string(l) +
                         " has no output channels");
    const bool last = l + 1 == c.layers.size();
    if ((s.activation == Activation::kLogGainClamp) != last)
      throw InvalidInput("estimator: the log-gain clamp must be the final "
                         "activation");
  }
  if (c.layers.back().out_channels != 1)
    throw InvalidInput("estimator: final layer must have one channel");
  if (c.band_mix_layer < -1 ||
      c.band_mix_layer >= static_cast<int>(c.layers.size()))
    throw InvalidInput("estimator: band mix layer out of range");
  if (!(c.log_gain_limit > 0.0))
    throw InvalidInput("estimator: log gain limit must be > 0");
}

GainEstimator::GainEstimator(EstimatorConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  validate(config_);
  std::mt19937_64 rng(seed);
  const std::size_t nq = config_.num_bands;
  for (std::size_t l = 0; l < config_.layers.size(); ++l) {
    const ConvLayerSpec& s = config_.layers[l];
    const std::size_t cin = in_channels(config_, l);
    Tensor w({s.out_channels, cin, s.width});
    if (l + 1 < config_.layers.size()) {
      const double a = std::sqrt(3.0 / static_cast<double>(cin * s.width));
      std::uniform_real_distribution<double> u(-a, a);
      for (double& v : w.values) v = u(rng);
    }
    params_.push_back(std::move(w));
    params_.emplace_back(Shape{s.out_channels});
    if (static_cast<int>(l) == config_.band_mix_layer) {
      Tensor m({nq, nq});
      for (std::size_t q = 0; q < nq; ++q) m.values[q * nq + q] = 1.0;
      params_.push_back(std::move(m));
      params_.emplace_back(Shape{nq});
    }
  }
  norm_mean_.assign(nq, 0.0);
  norm_std_.assign(nq, 1.0);
}

GainEstimator::GainEstimator(EstimatorConfig config, std::vector<Tensor> params,
                             std::vector<double> norm_mean,
                             std::vector<double> norm_std)
    : GainEstimator(std::move(config), 0) {
  if (params.size() != params_.size())
    throw InvalidInput("estimator: expected " + std::to_string(params_.size()) +
                       " parameter tensors, got " +
                       std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape != params_[i].shape)
      throw InvalidInput("estimator: parameter " + std::to_string(i) +
                         " has the wrong shape");
    for (double v : params[i].values)
      if (!std::isfinite(v))
        throw InvalidInput("estimator: non-finite parameter");
  }
  params_ = std::move(params);
  set_normalization(std::move(norm_mean), std::move(norm_std));
}

std::vector<std::string> GainEstimator::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < config_.layers.size(); ++l) {
    names.push_back("conv" + std::to_string(l) + ".weight");
    names.push_back("conv" + std::to_string(l) + ".bias");
    if (static_cast<int>(l) == config_.band_mix_layer) {
      names.push_back("mix.weight");
      names.push_back("mix.bias");
    }
  }
  return names;
}

double GainEstimator::parameter_norm() const {
  double acc = 0.0;
  for (const Tensor& t : params_)
    for (double v : t.values) acc += v * v;
  return std::sqrt(acc);
}

void GainEstimator::set_normalization(std::vector<double> mean,
                                      std::vector<double> stddev) {
  if (mean.size() != config_.num_bands || stddev.size() != config_.num_bands)
    throw InvalidInput("estimator: normalization size does not match bands");
  for (std::size_t q = 0; q < stddev.size(); ++q)
    if (!std::isfinite(mean[q]) || !(stddev[q] > 0.0) ||
        !std::isfinite(stddev[q]))
      throw InvalidInput("estimator: invalid normalization for band " +
                         std::to_string(q));
  norm_mean_ = std::move(mean);
  norm_std_ = std::move(stddev);
}

ag::Var GainEstimator::forward(ag::Tape& tape, ag::Var log_env,
                               std::vector<ag::Var>& params) const {
  const std::size_t nq = config_.num_bands;
  if (log_env.shape().size() != 2 || log_env.shape()[0] != nq)
    throw InvalidInput("estimator_forward: expected " + std::to_string(nq) +
                       " bands");
  const std::size_t n = log_env.shape()[1];
  params.clear();
  for (const Tensor& t : params_) params.push_back(tape.parameter(t));

  // Per-band standardization broadcast along time.
  std::vector<double> shift(nq * n), gain(nq * n);
  for (std::size_t q = 0; q < nq; ++q)
    for (std::size_t i = 0; i < n; ++i) {
      shift[q * n + i] = norm_mean_[q];
      gain[q * n + i] = 1.0 / norm_std_[q];
    }
  ag::Var x = ag::column_affine(ag::reshape(log_env, {1, nq * n}), shift, gain);
  x = ag::reshape(x, {1, nq, n});

  std::size_t p = 0;
  for (std::size_t l = 0; l < config_.layers.size(); ++l) {
    ag::Var z = ag::conv_time(x, params[p], params[p + 1]);
    p += 2;
    if (static_cast<int>(l) == config_.band_mix_layer) {
      z = ag::band_mix(z, params[p], params[p + 1]);
      p += 2;
    }
    switch (config_.layers[l].activation) {
      case Activation::kIdentity: x = z; break;
      case Activation::kTanh: x = ag::tanh(z); break;
      case Activation::kLogGainClamp:
        x = ag::log_gain_clamp(z, config_.log_gain_limit);
        break;
    }
  }
  return ag::reshape(x, {nq, n});
}

Matrix estimator_forward(const GainEstimator& estimator, const Matrix& log_env) {
  ag::Tape tape;
  std::vector<ag::Var> params;
  ag::Var y = estimator.forward(
      tape, tape.constant(log_env.storage(), {log_env.rows(), log_env.cols()}),
      params);
  Matrix out(log_env.rows(), log_env.cols());
  out.storage() = y.value();
  return out;
}

double mse_loss(const Matrix& predicted, const Matrix& target) {
  check_same_shape(predicted, target, "mse_loss");
  if (predicted.empty()) throw InvalidInput("mse_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted.values()[i] - target.values()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(predicted.size());
}

double spectral_correlation_loss(const Matrix& log_env) {
  return spectral_correlation_value(log_env.values(), log_env.rows(),
                                    log_env.cols());
}

void fit_normalization(GainEstimator& estimator,
                       const std::vector<TrainingPair>& data) {
  const std::size_t nq = estimator.config().num_bands;
  if (data.empty()) throw InvalidInput("fit_normalization: empty dataset");
  std::vector<double> sum(nq, 0.0), sq(nq, 0.0);
  double count = 0.0;
  for (const TrainingPair& p : data) {
    if (p.reverb_log_env.rows() != nq)
      throw InvalidInput("fit_normalization: band count mismatch");
    for (std::size_t q = 0; q < nq; ++q)
      for (double v : p.reverb_log_env.row(q)) {
        sum[q] += v;
        sq[q] += v * v;
      }
    count += static_cast<double>(p.reverb_log_env.cols());
  }
  std::vector<double> mean(nq), sd(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    mean[q] = sum[q] / count;
    const double var = std::max(sq[q] / count - mean[q] * mean[q], 0.0);
    sd[q] = std::max(std::sqrt(var), 1e-6);
  }
  estimator.set_normalization(std::move(mean), std::move(sd));
}

LossReport pair_loss(const GainEstimator& estimator, const TrainingPair& pair,
                     double lambda, std::vector<std::vector<double>>* grads) {
  check_same_shape(pair.reverb_log_env, pair.target_log_gain, "pair_loss");
  ag::Tape tape;
  const Shape shape{pair.reverb_log_env.rows(), pair.reverb_log_env.cols()};
  ag::Var x = tape.constant(pair.reverb_log_env.storage(), shape);
  ag::Var target = tape.constant(pair.target_log_gain.storage(), shape);
  std::vector<ag::Var> params;
  ag::Var log_gain = estimator.forward(tape, x, params);
  ag::Var mse = ag::mse(log_gain, target);
  ag::Var sc = ag::spectral_correlation(ag::add(x, log_gain));
  ag::Var total = ag::add(mse, ag::scale(sc, lambda));

  LossReport r{mse.value()[0], sc.value()[0], total.value()[0]};
  if (grads != nullptr) {
    tape.backward(total);
    grads->resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) (*grads)[i] = params[i].grad();
  }
  return r;
}

LossReport dataset_loss(const GainEstimator& estimator,
                        const std::vector<TrainingPair>& data, double lambda) {
  if (data.empty()) throw InvalidInput("dataset_loss: empty dataset");
  LossReport acc;
  for (const TrainingPair& p : data) {
    const LossReport r = pair_loss(estimator, p, lambda);
    acc.mse += r.mse;
    acc.spectral_corr += r.spectral_corr;
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  acc.mse *= inv;
  acc.spectral_corr *= inv;
  acc.total = acc.mse + lambda * acc.spectral_corr;
  return acc;
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed,
                                     std::size_t epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + epoch);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

TrainResult train_estimator(const std::vector<TrainingPair>& data,
                            const TrainConfig& config,
                            const EstimatorConfig& model) {
  GainEstimator est(model, config.seed);
  fit_normalization(est, data);
  return train_estimator(data, config, std::move(est));
}

TrainResult train_estimator(const std::vector<TrainingPair>& data,
                            const TrainConfig& config, GainEstimator initial) {
  if (data.empty()) throw InvalidInput("train_estimator: empty dataset");
  if (config.batch == 0) throw InvalidInput("train_estimator: batch must be >= 1");
  if (!(config.adam.lr > 0.0) || !(config.lambda >= 0.0))
    throw InvalidInput("train_estimator: invalid learning rate or lambda");

  TrainResult result{std::move(initial), {}};
  GainEstimator& est = result.estimator;
  Adam adam(config.adam);
  result.history.push_back(dataset_loss(est, data, config.lambda));

  std::vector<std::vector<double>> grads, sum;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::vector<std::size_t> order = epoch_order(data.size(), config.seed, epoch);
    for (std::size_t start = 0, b = 0; start < order.size();
         start += config.batch, ++b) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      sum.assign(est.parameters().size(), {});
      for (std::size_t i = 0; i < sum.size(); ++i)
        sum[i].assign(est.parameters()[i].size(), 0.0);
      for (std::size_t j = start; j < end; ++j) {
        const LossReport r = pair_loss(est, data[order[j]], config.lambda, &grads);
        if (!std::isfinite(r.total))
          throw TrainingDiverged(epoch, b, est.parameter_norm());
        for (std::size_t i = 0; i < sum.size(); ++i)
          for (std::size_t k = 0; k < sum[i].size(); ++k) sum[i][k] += grads[i][k];
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& g : sum)
        for (double& v : g) v *= inv;
      adam.step(est.parameters(), sum);
    }
    const LossReport r = dataset_loss(est, data, config.lambda);
    if (!std::isfinite(r.total))
      throw TrainingDiverged(epoch, order.size() / config.batch, est.parameter_norm());
    result.history.push_back(r);
  }
  return result;
}

}  // namespace fdlp
