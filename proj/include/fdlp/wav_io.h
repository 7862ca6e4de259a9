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


#ifndef FDLP_WAV_IO_H_
#define FDLP_WAV_IO_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fdlp/core_dsp.h"

namespace fdlp {

enum class WavEncoding { kPcm16, kFloat32 };

// Mono RIFF/WAVE, 16-bit PCM or 32-bit IEEE float (plain or extensible
// format chunk). Integer samples are scaled by 1/32768.
Signal decode_wav(const std::vector<std::uint8_t>& bytes);
Signal read_wav(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_wav(const Signal& signal,
                                     WavEncoding encoding = WavEncoding::kPcm16);
void write_wav(const std::filesystem::path& path, const Signal& signal,
               WavEncoding encoding = WavEncoding::kPcm16);

}  // namespace fdlp

#endif  // FDLP_WAV_IO_H_
