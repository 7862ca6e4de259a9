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


#include "fdlp/features.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fdlp/autograd.h"
#include "fdlp/core_dsp.h"
#include "fdlp/error.h"

namespace fdlp {

std::vector<double> hamming_window(std::size_t length) {
  if (length == 0) throw InvalidInput("hamming_window: length must be >= 1");
  if (length == 1) return {1.0};
  std::vector<double> w(length);
  const double denom = static_cast<double>(length - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < length; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi *
                                  static_cast<double>(i) / denom);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

std::size_t feature_frame_count(std::size_t num_samples, std::size_t window,
                                std::size_t hop) {
  if (window == 0 || hop == 0 || num_samples < window)
    throw InvalidInput("feature_frame_count: need at least " +
                       std::to_string(window) + " envelope samples");
  return (num_samples - window) / hop + 1;
}

FeatureMatrix integrate_envelopes(const Matrix& env, double envelope_rate) {
  feature_frame_count(env.cols());
  const std::vector<double> kernel = hamming_window(kIntegrationWindow);
  ag::Tape tape;
  ag::Var x = tape.constant(env.storage(), {env.rows(), env.cols()});
  ag::Var f = ag::log_floor(ag::strided_integrate(x, kernel, kIntegrationHop),
                            kEnvelopeFloor);
  FeatureMatrix out;
  out.data = Matrix(f.shape()[0], f.shape()[1]);
  out.data.storage() = f.value();
  out.frame_rate = envelope_rate / static_cast<double>(kIntegrationHop);
  return out;
}

FeatureMatrix integrate_envelopes(const SubbandEnvelopes& env) {
  return integrate_envelopes(env.data, env.envelope_rate);
}

ContextTensor splice_context(const FeatureMatrix& features, std::size_t left,
                             std::size_t right) {
  const std::size_t frames = features.num_frames(), nq = features.num_bands();
  if (frames == 0) throw InvalidInput("splice_context: no frames");
  const std::size_t ctx = left + right + 1;
  ContextTensor out{Matrix(frames, ctx * nq), ctx, nq};
  for (std::size_t m = 0; m < frames; ++m)
    for (std::size_t c = 0; c < ctx; ++c) {
      const long s = std::clamp(static_cast<long>(m + c) - static_cast<long>(left),
                                0L, static_cast<long>(frames) - 1);
      const auto src = features.data.row(static_cast<std::size_t>(s));
      std::copy(src.begin(), src.end(), out.data.row(m).begin() + c * nq);
    }
  return out;
}

}  // namespace fdlp
