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


#ifndef FDLP_DEREVERB_H_
#define FDLP_DEREVERB_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fdlp/autograd.h"
#include "fdlp/matrix.h"
#include "fdlp/subband_fdlp.h"

namespace fdlp {

inline constexpr double kDefaultLambda = 0.05;
inline constexpr double kDefaultLogGainLimit = 8.0;

// Q x N envelope gain, every entry in (0, 1].
struct GainTrajectory {
  Matrix data;
};

GainTrajectory oracle_gain(const SubbandEnvelopes& early,
                           const SubbandEnvelopes& late);

// exp(log gain + log envelope), floored.
SubbandEnvelopes apply_gain(const SubbandEnvelopes& reverb,
                            const GainTrajectory& gain);
SubbandEnvelopes apply_log_gain(const SubbandEnvelopes& reverb,
                                const Matrix& log_gain);

// Natural log of a floored envelope matrix.
Matrix log_envelope(const Matrix& env);

// Log of an oracle gain limited to what the estimator's output range can
// reach.
Matrix training_target(const GainTrajectory& gain,
                       double limit = kDefaultLogGainLimit);

enum class Activation : std::uint8_t {
  kIdentity = 0,
  kTanh = 1,
  kLogGainClamp = 2,
};

struct ConvLayerSpec {
  std::size_t width = 1;
  std::size_t out_channels = 1;
  Activation activation = Activation::kIdentity;
  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

struct EstimatorConfig {
  std::size_t num_bands = kDefaultNumBands;
  std::vector<ConvLayerSpec> layers = {{41, 16, Activation::kTanh},
                                       {21, 16, Activation::kTanh},
                                       {9, 1, Activation::kLogGainClamp}};
  // Layer whose pre-activation output gets a full-band affine mix; -1 = none.
  int band_mix_layer = 1;
  double log_gain_limit = kDefaultLogGainLimit;
  friend bool operator==(const EstimatorConfig&, const EstimatorConfig&) =
      default;
};

void validate(const EstimatorConfig& config);

// Temporal-convolution gain estimator: log envelopes Q x N -> log gain Q x N.
class GainEstimator {
 public:
  GainEstimator() : GainEstimator(EstimatorConfig{}, 0) {}
  GainEstimator(EstimatorConfig config, std::uint64_t seed);
  // Restores a stored estimator; shapes are checked against the config.
  GainEstimator(EstimatorConfig config, std::vector<Tensor> params,
                std::vector<double> norm_mean, std::vector<double> norm_std);

  const EstimatorConfig& config() const { return config_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  std::vector<std::string> parameter_names() const;
  double parameter_norm() const;

  const std::vector<double>& norm_mean() const { return norm_mean_; }
  const std::vector<double>& norm_std() const { return norm_std_; }
  void set_normalization(std::vector<double> mean, std::vector<double> stddev);

  // Records the forward pass. params receives the parameter leaves in
  // declaration order.
  ag::Var forward(ag::Tape& tape, ag::Var log_env,
                  std::vector<ag::Var>& params) const;

 private:
  EstimatorConfig config_;
  std::vector<Tensor> params_;
  std::vector<double> norm_mean_;
  std::vector<double> norm_std_;
};

Matrix estimator_forward(const GainEstimator& estimator, const Matrix& log_env);

double mse_loss(const Matrix& predicted, const Matrix& target);
// Mean squared off-diagonal Pearson correlation between rows.
double spectral_correlation_loss(const Matrix& log_env);

struct LossReport {
  double mse = 0.0;
  double spectral_corr = 0.0;
  double total = 0.0;
};

struct TrainingPair {
  Matrix reverb_log_env;   // Q x N
  Matrix target_log_gain;  // Q x N
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t epochs = 10;
  std::size_t batch = 4;
  double lambda = kDefaultLambda;
  std::uint64_t seed = 1;
};

struct TrainResult {
  GainEstimator estimator;
  // history[0] is the training-set loss before any update, history[e] after
  // epoch e.
  std::vector<LossReport> history;
};

// Per-band mean and standard deviation of the reverberant log envelopes.
void fit_normalization(GainEstimator& estimator,
                       const std::vector<TrainingPair>& data);

// Loss of one pair; computes gradients into grads when non-null.
LossReport pair_loss(const GainEstimator& estimator, const TrainingPair& pair,
                     double lambda,
                     std::vector<std::vector<double>>* grads = nullptr);

LossReport dataset_loss(const GainEstimator& estimator,
                        const std::vector<TrainingPair>& data, double lambda);

// Starts from a fresh estimator seeded by config.seed with normalization
// fitted on data.
TrainResult train_estimator(const std::vector<TrainingPair>& data,
                            const TrainConfig& config,
                            const EstimatorConfig& model = {});
TrainResult train_estimator(const std::vector<TrainingPair>& data,
                            const TrainConfig& config, GainEstimator initial);

// Batch order of one epoch, shared by all trainers.
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed,
                                     std::size_t epoch);

}  // namespace fdlp

#endif  // FDLP_DEREVERB_H_
