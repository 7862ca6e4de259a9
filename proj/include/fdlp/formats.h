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


#ifndef FDLP_FORMATS_H_
#define FDLP_FORMATS_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fdlp/dereverb.h"
#include "fdlp/features.h"
#include "fdlp/joint_trainer.h"
#include "fdlp/matrix.h"
#include "fdlp/subband_fdlp.h"

namespace fdlp {

inline constexpr std::uint16_t kFeat1Version = 1;
inline constexpr std::uint16_t kFdgeVersion = 1;
inline constexpr std::uint16_t kFdclVersion = 1;

// FEAT1: "FEAT1", u16 version, u32 frames, u32 bands, f32 frame rate,
// frames x bands f32 row-major, u32 CRC32 of everything before it.
std::vector<std::uint8_t> encode_feat1(const Matrix& data, double frame_rate);
FeatureMatrix decode_feat1(const std::vector<std::uint8_t>& bytes);

void write_feat1(const std::filesystem::path& path, const FeatureMatrix& f);
FeatureMatrix read_feat1(const std::filesystem::path& path);

// Envelopes go through FEAT1 transposed (one frame per envelope sample).
void write_envelopes(const std::filesystem::path& path,
                     const SubbandEnvelopes& env);
SubbandEnvelopes read_envelopes(const std::filesystem::path& path);

// FDGE: "FDGE", u16 version, u32 config length, config block, parameter
// tensors as f64 in declaration order, normalization mean then std, CRC32.
std::vector<std::uint8_t> encode_estimator(const GainEstimator& estimator);
GainEstimator decode_estimator(const std::vector<std::uint8_t>& bytes);
void write_estimator(const std::filesystem::path& path,
                     const GainEstimator& estimator);
GainEstimator read_estimator(const std::filesystem::path& path);

// FDCL: same layout with the classifier config block.
std::vector<std::uint8_t> encode_classifier(const ToyClassifier& classifier);
ToyClassifier decode_classifier(const std::vector<std::uint8_t>& bytes);
void write_classifier(const std::filesystem::path& path,
                      const ToyClassifier& classifier);
ToyClassifier read_classifier(const std::filesystem::path& path);

}  // namespace fdlp

#endif  // FDLP_FORMATS_H_
