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


#ifndef FDLP_SYNTH_H_
#define FDLP_SYNTH_H_

#include <cstdint>

#include "fdlp/core_dsp.h"

namespace fdlp {

struct SynthOptions {
  double duration_seconds = 2.0;
  int sample_rate = 16000;
  double background_db = -50.0;  // white floor relative to the peak
  double peak = 0.5;
};

// Syllable-like test utterance: a train of bursts separated by short gaps.
// Each burst is a harmonic complex, an AM tone or band-limited noise under a
// raised-cosine attack and decay. Deterministic per seed.
Signal synth_utterance(std::uint64_t seed, const SynthOptions& options = {});

}  // namespace fdlp

#endif  // FDLP_SYNTH_H_
