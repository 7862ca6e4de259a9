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


#ifndef FDLP_JOINT_TRAINER_H_
#define FDLP_JOINT_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fdlp/autograd.h"
#include "fdlp/dereverb.h"
#include "fdlp/features.h"
#include "fdlp/matrix.h"

namespace fdlp {

inline constexpr double kDefaultMu = 0.4;
inline constexpr std::size_t kDefaultNumClasses = 8;

struct ClassifierConfig {
  std::size_t num_bands = kDefaultNumBands;
  std::size_t context_left = kContextLeft;
  std::size_t context_right = kContextRight;
  std::size_t hidden = 128;
  std::size_t num_classes = kDefaultNumClasses;
  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) =
      default;

  std::size_t input_width() const {
    return (context_left + context_right + 1) * num_bands;
  }
};

// Spliced features -> tanh hidden layer -> class logits. Features are
// standardized per band before splicing.
class ToyClassifier {
 public:
  ToyClassifier() : ToyClassifier(ClassifierConfig{}, 0) {}
  ToyClassifier(ClassifierConfig config, std::uint64_t seed);
  ToyClassifier(ClassifierConfig config, std::vector<Tensor> params,
                std::vector<double> feat_mean, std::vector<double> feat_std);

  const ClassifierConfig& config() const { return config_; }
  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  const std::vector<double>& feature_mean() const { return feat_mean_; }
  const std::vector<double>& feature_std() const { return feat_std_; }
  void set_normalization(std::vector<double> mean, std::vector<double> stddev);

  // features [T, Q] -> logits [T, S].
  ag::Var forward(ag::Tape& tape, ag::Var features,
                  std::vector<ag::Var>& params) const;

 private:
  ClassifierConfig config_;
  std::vector<Tensor> params_;
  std::vector<double> feat_mean_;
  std::vector<double> feat_std_;
};

Matrix classifier_logits(const ToyClassifier& classifier,
                         const FeatureMatrix& features);
Matrix softmax_rows(const Matrix& logits);

double cross_entropy_loss(const Matrix& logits, std::span<const int> labels);
double joint_loss(double e_ce, double e_mse, double mu);

// Per-frame class from the band-energy centroid of the integrated clean
// envelope, quantized uniformly over the band axis.
std::vector<int> centroid_labels(const Matrix& clean_env,
                                 std::size_t num_classes = kDefaultNumClasses);

struct JointBatch {
  Matrix reverb_log_env;   // Q x N
  Matrix target_log_gain;  // Q x N
  std::vector<int> labels; // T
};

struct JointConfig {
  AdamConfig adam;
  std::size_t epochs = 5;
  std::size_t batch = 4;
  double mu = kDefaultMu;
  std::uint64_t seed = 1;
  bool freeze_estimator = false;
  bool freeze_classifier = false;
  // Classifier gradients stop at the gain output; the estimator then sees
  // only the mu-weighted MSE.
  bool detach_classifier = false;
};

struct JointLossReport {
  double ce = 0.0;
  double mse = 0.0;
  double total = 0.0;
};

// Gradients of one segment plus the shapes seen at the routing points.
struct JointGradients {
  JointLossReport loss;
  std::vector<std::vector<double>> estimator;
  std::vector<std::vector<double>> classifier;
  Shape feature_grad_shape;   // T x Q
  Shape envelope_grad_shape;  // Q x N
};

JointLossReport joint_segment_loss(const GainEstimator& estimator,
                                   const ToyClassifier& classifier,
                                   const JointBatch& batch,
                                   const JointConfig& config,
                                   JointGradients* grads = nullptr);

JointLossReport joint_dataset_loss(const GainEstimator& estimator,
                                   const ToyClassifier& classifier,
                                   const std::vector<JointBatch>& data,
                                   const JointConfig& config);

struct JointResult {
  GainEstimator estimator;
  ToyClassifier classifier;
  // history[0] before any update, history[e] after epoch e.
  std::vector<JointLossReport> history;
  // Estimator update of the first optimizer step, flattened.
  std::vector<double> first_estimator_update;
};

JointResult train_joint(const std::vector<JointBatch>& data,
                        GainEstimator estimator, ToyClassifier classifier,
                        const JointConfig& config);

// Feature statistics through the given estimator's dereverberated output.
void fit_feature_normalization(ToyClassifier& classifier,
                               const GainEstimator& estimator,
                               const std::vector<JointBatch>& data);

// Frozen-estimator cross-entropy training of a fresh classifier.
ToyClassifier pretrain_classifier(const std::vector<JointBatch>& data,
                                  const GainEstimator& estimator,
                                  const ClassifierConfig& model,
                                  const JointConfig& config);

// Dereverberated features: log-integrated exp(log env + estimator output).
FeatureMatrix dereverberated_features(const GainEstimator& estimator,
                                      const Matrix& reverb_log_env);

}  // namespace fdlp

#endif  // FDLP_JOINT_TRAINER_H_
