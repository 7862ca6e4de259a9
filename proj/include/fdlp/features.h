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


#ifndef FDLP_FEATURES_H_
#define FDLP_FEATURES_H_

#include <cstddef>
#include <vector>

#include "fdlp/matrix.h"
#include "fdlp/subband_fdlp.h"

namespace fdlp {

inline constexpr std::size_t kIntegrationWindow = 10;  // 25 ms at 400 Hz
inline constexpr std::size_t kIntegrationHop = 4;      // 10 ms at 400 Hz
inline constexpr std::size_t kContextLeft = 10;
inline constexpr std::size_t kContextRight = 10;

// T x Q log-integrated features.
struct FeatureMatrix {
  Matrix data;
  double frame_rate = 100.0;

  std::size_t num_frames() const { return data.rows(); }
  std::size_t num_bands() const { return data.cols(); }
};

// T x (context * Q); row m holds frames m-left .. m+right back to back.
struct ContextTensor {
  Matrix data;
  std::size_t context = 0;
  std::size_t num_bands = 0;
};

// Hamming window scaled to unit sum. Length 1 gives {1}.
std::vector<double> hamming_window(std::size_t length);

std::size_t feature_frame_count(std::size_t num_samples,
                                std::size_t window = kIntegrationWindow,
                                std::size_t hop = kIntegrationHop);

// Strided Hamming integration of each band followed by log(max(., floor)).
FeatureMatrix integrate_envelopes(const SubbandEnvelopes& env);
FeatureMatrix integrate_envelopes(const Matrix& env, double envelope_rate);

ContextTensor splice_context(const FeatureMatrix& features,
                             std::size_t left = kContextLeft,
                             std::size_t right = kContextRight);

}  // namespace fdlp

#endif  // FDLP_FEATURES_H_
