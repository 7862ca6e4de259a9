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

#ifndef FDLP_REVERB_SIM_H_
#define FDLP_REVERB_SIM_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fdlp/core_dsp.h"
#include "fdlp/subband_fdlp.h"

namespace fdlp {

inline constexpr double kDefaultSplitMs = 50.0;

struct Rir {
  Signal samples;
  double t60 = 0.0;
  std::size_t split_index = 0;
};

// Unit direct impulse at t = 0 plus seeded zero-mean unit-variance Gaussian
// noise from 1 ms on, shaped by exp(-3 ln(10) t / t60) (60 dB energy decay
// over t60). Tail samples are clamped below the direct-path amplitude so
// index 0 stays the peak. split_index defaults to 50 ms.
Rir synth_rir(double t60, std::size_t length_samples, int sample_rate,
              std::uint64_t seed);

// Full convolution truncated to len(clean).
Signal apply_reverb(const Signal& clean, const Rir& rir);
Signal apply_reverb(const Signal& clean, const Signal& rir);

struct EarlyLate {
  Signal early;  // rir before split_index, zero after
  Signal late;   // rir from split_index on, zero before
  std::size_t split_index = 0;
};

EarlyLate split_early_late(const Rir& rir, double split_ms = kDefaultSplitMs);

// Envelope-domain kernel of an RIR for the convolution model
//   m_r(n) ~ 1/2 (m_x * m_h)(n)
// on magnitude envelopes m = sqrt(power envelope). Per band, the analytic
// magnitude of the band-passed RIR is summed over each envelope sample
// period and normalized so a unit impulse has total mass 2 (a pure direct
// path maps to ~2 delta). Values are returned squared, in the power units
// every SubbandEnvelopes carries.
SubbandEnvelopes rir_kernel_envelopes(const Signal& rir,
                                      const MelBandLayout& layout,
                                      double envelope_rate =
                                          kDefaultEnvelopeRate);

// Per band relative L2 error of the convolution model on magnitude
// envelopes: ||m_r - 1/2 (m_x * m_h)[0:N]|| / ||m_r|| with m = sqrt(env).
std::vector<double> envelope_convolution_residual(
    const SubbandEnvelopes& clean_env, const SubbandEnvelopes& rir_env,
    const SubbandEnvelopes& reverb_env);

}  // namespace fdlp

#endif  // FDLP_REVERB_SIM_H_
