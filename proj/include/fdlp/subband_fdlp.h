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

#ifndef FDLP_SUBBAND_FDLP_H_
#define FDLP_SUBBAND_FDLP_H_

#include <cstddef>
#include <string>
#include <vector>

#include "fdlp/core_dsp.h"
#include "fdlp/matrix.h"

namespace fdlp {

inline constexpr double kDefaultEnvelopeRate = 400.0;
inline constexpr std::size_t kDefaultLpOrder = 100;
inline constexpr std::size_t kDefaultNumBands = 36;
inline constexpr double kDefaultFminHz = 200.0;
inline constexpr double kDefaultFmaxHz = 6500.0;
inline constexpr double kDefaultSegmentSeconds = 2.0;

struct Segment {
  Signal signal;
  bool padded = false;
  std::size_t valid_samples = 0;
};

// Non-overlapping segments; the final partial segment is zero-padded and
// flagged.
std::vector<Segment> segment_signal(const Signal& signal,
                                    double segment_seconds);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

enum class BandWindow {
  kRectangular,
  // Raised-cosine tapers reaching 10% of the narrower neighbouring band
  // into each neighbour. Adjacent tapers sum to one.
  kCosineTaper,
};

struct BandRange {
  std::size_t start = 0;  // first DCT bin (inclusive)
  std::size_t end = 0;    // last DCT bin (exclusive)
  std::size_t width() const { return end - start; }
  friend bool operator==(const BandRange&, const BandRange&) = default;
};

struct MelBandLayout {
  std::size_t num_bands = 0;
  std::vector<BandRange> bands;
  std::vector<double> edge_hz;  // num_bands + 1 mel-spaced edges
  double fmin_hz = kDefaultFminHz;
  double fmax_hz = kDefaultFmaxHz;
  int sample_rate = 16000;
  std::size_t dct_len = 0;
  BandWindow window = BandWindow::kRectangular;
};

// DCT bin k corresponds to frequency k * (sample_rate / 2) / dct_len.
std::size_t frequency_to_dct_bin(double hz, int sample_rate,
                                 std::size_t dct_len);

MelBandLayout mel_band_layout(std::size_t num_bands, double fmin_hz,
                              double fmax_hz, int sample_rate,
                              std::size_t dct_len,
                              BandWindow window = BandWindow::kRectangular);

// Per-bin weights of one band: the covered bin range and a weight per bin.
struct BandWeights {
  std::size_t start = 0;
  std::vector<double> weights;
};
BandWeights band_weights(const MelBandLayout& layout, std::size_t band);

// Q x N matrix of per-band power envelopes (row = band).
struct SubbandEnvelopes {
  Matrix data;
  double envelope_rate = kDefaultEnvelopeRate;
  double segment_duration = 0.0;
  std::vector<std::string> warnings;

  std::size_t num_bands() const { return data.rows(); }
  std::size_t num_samples() const { return data.cols(); }
};

struct FdlpOptions {
  std::size_t lp_order = kDefaultLpOrder;
  double envelope_rate = kDefaultEnvelopeRate;
};

// Per band: slice (and weight) the segment's DCT, fit an LP model on the
// autocorrelation of the zero-padded slice, evaluate the all-pole envelope
// at envelope_rate * duration points. Envelopes are scaled by (4/M)^2,
// M = 2N - 1, so they approximate the squared Hilbert envelope of the
// band-passed signal, then floored at kEnvelopeFloor.
SubbandEnvelopes extract_fdlp_envelopes(const Signal& segment,
                                        const MelBandLayout& layout,
                                        std::size_t lp_order,
                                        double envelope_rate =
                                            kDefaultEnvelopeRate);

// LP models for every band of a segment (no envelope evaluation).
std::vector<LpModel> fit_band_models(const Signal& segment,
                                     const MelBandLayout& layout,
                                     std::size_t lp_order);

// Band-passed time signal: inverse DCT of the weighted band slice.
Signal band_signal(const Signal& segment, const MelBandLayout& layout,
                   std::size_t band);

// Convenience: every segment of a signal with the default layout.
std::vector<SubbandEnvelopes> extract_all_segments(
    const Signal& signal, std::size_t num_bands, double fmin_hz,
    double fmax_hz, double segment_seconds, const FdlpOptions& options);

}  // namespace fdlp

#endif  // FDLP_SUBBAND_FDLP_H_
