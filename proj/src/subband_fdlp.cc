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

#include "fdlp/subband_fdlp.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fdlp/error.h"

namespace fdlp {

std::vector<Segment> segment_signal(const Signal& signal,
                                    double segment_seconds) {
  if (signal.empty()) throw InvalidInput("segment_signal: empty signal");
  if (!(segment_seconds > 0.0))
    throw InvalidInput("segment_signal: segment length must be positive");
  const auto seg_len = static_cast<std::size_t>(
      std::llround(segment_seconds * signal.sample_rate()));
  if (seg_len == 0)
    throw InvalidInput("segment_signal: segment shorter than one sample");

  auto x = signal.samples();
  const std::size_t count = (x.size() + seg_len - 1) / seg_len;
  std::vector<Segment> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t begin = s * seg_len;
    const std::size_t valid = std::min(seg_len, x.size() - begin);
    std::vector<double> buf(seg_len, 0.0);
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(begin), valid,
                buf.begin());
    out.push_back({Signal(std::move(buf), signal.sample_rate()),
                   valid < seg_len, valid});
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::size_t frequency_to_dct_bin(double hz, int sample_rate,
                                 std::size_t dct_len) {
  const double bin = hz * static_cast<double>(dct_len) / (sample_rate / 2.0);
  const auto k = static_cast<long long>(std::llround(bin));
  return static_cast<std::size_t>(
      std::clamp<long long>(k, 0, static_cast<long long>(dct_len)));
}

MelBandLayout mel_band_layout(std::size_t num_bands, double fmin_hz,
                              double fmax_hz, int sample_rate,
                              std::size_t dct_len, BandWindow window) {
  if (num_bands < 1) throw InvalidInput("mel_band_layout: need >= 1 band");
  if (sample_rate <= 0) throw InvalidInput("mel_band_layout: bad sample rate");
  if (!(fmin_hz >= 0.0) || !(fmin_hz < fmax_hz) ||
      fmax_hz > sample_rate / 2.0)
    throw InvalidInput("mel_band_layout: need 0 <= fmin < fmax <= sr/2");
  if (dct_len < 1) throw InvalidInput("mel_band_layout: empty DCT axis");

  MelBandLayout layout;
  layout.num_bands = num_bands;
  layout.fmin_hz = fmin_hz;
  layout.fmax_hz = fmax_hz;
  layout.sample_rate = sample_rate;
  layout.dct_len = dct_len;
  layout.window = window;

  const double mel_lo = hz_to_mel(fmin_hz);
  const double mel_hi = hz_to_mel(fmax_hz);
  layout.edge_hz.resize(num_bands + 1);
  std::vector<std::size_t> edge_bin(num_bands + 1);
  for (std::size_t i = 0; i <= num_bands; ++i) {
    const double mel =
        mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                     static_cast<double>(num_bands);
    layout.edge_hz[i] = i == 0 ? fmin_hz : i == num_bands ? fmax_hz
                                                          : mel_to_hz(mel);
    edge_bin[i] = frequency_to_dct_bin(layout.edge_hz[i], sample_rate, dct_len);
  }
  layout.bands.resize(num_bands);
  for (std::size_t q = 0; q < num_bands; ++q) {
    if (edge_bin[q + 1] <= edge_bin[q])
      throw InvalidInput("mel_band_layout: band " + std::to_string(q) +
                         " is empty for DCT length " + std::to_string(dct_len));
    layout.bands[q] = {edge_bin[q], edge_bin[q + 1]};
  }
  return layout;
}

namespace {

// Half-width of the cosine taper at edge i (between band i-1 and band i).
std::size_t taper_half_width(const MelBandLayout& layout, std::size_t edge) {
  std::size_t narrow = 0;
  if (edge == 0) {
    narrow = layout.bands.front().width();
  } else if (edge == layout.num_bands) {
    narrow = layout.bands.back().width();
  } else {
    narrow = std::min(layout.bands[edge - 1].width(), layout.bands[edge].width());
  }
  return narrow / 10;
}

// Rising half of the taper centred on `centre` with half-width d.
double rising(std::size_t k, std::size_t centre, std::size_t d) {
  if (d == 0) return k >= centre ? 1.0 : 0.0;
  const double pos = (static_cast<double>(k) + 0.5 -
                      (static_cast<double>(centre) - static_cast<double>(d))) /
                     (2.0 * static_cast<double>(d));
  if (pos <= 0.0) return 0.0;
  if (pos >= 1.0) return 1.0;
  return 0.5 - 0.5 * std::cos(std::numbers::pi * pos);
}

}  // namespace

BandWeights band_weights(const MelBandLayout& layout, std::size_t band) {
  if (band >= layout.num_bands)
    throw InvalidInput("band_weights: band index out of range");
  const BandRange& r = layout.bands[band];
  if (layout.window == BandWindow::kRectangular)
    return {r.start, std::vector<double>(r.width(), 1.0)};

  const std::size_t dl = taper_half_width(layout, band);
  const std::size_t dr = taper_half_width(layout, band + 1);
  const std::size_t lo = r.start >= dl ? r.start - dl : 0;
  const std::size_t hi = std::min(layout.dct_len, r.end + dr);
  BandWeights w{lo, std::vector<double>(hi - lo)};
  for (std::size_t k = lo; k < hi; ++k)
    w.weights[k - lo] = rising(k, r.start, dl) * (1.0 - rising(k, r.end, dr));
  return w;
}

namespace {

std::vector<double> weighted_slice(std::span<const double> dct,
                                   const BandWeights& w) {
  std::vector<double> out(w.weights.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = dct[w.start + i] * w.weights[i];
  return out;
}

void check_segment(const Signal& segment, const MelBandLayout& layout) {
  if (segment.size() != layout.dct_len)
    throw InvalidInput("segment length " + std::to_string(segment.size()) +
                       " does not match layout DCT length " +
                       std::to_string(layout.dct_len));
  if (segment.sample_rate() != layout.sample_rate)
    throw InvalidInput("segment sample rate does not match layout");
}

}  // namespace

SubbandEnvelopes extract_fdlp_envelopes(const Signal& segment,
                                        const MelBandLayout& layout,
                                        std::size_t lp_order,
                                        double envelope_rate) {
  check_segment(segment, layout);
  if (lp_order < 1) throw InvalidInput("extract_fdlp_envelopes: order < 1");
  if (!(envelope_rate > 0.0))
    throw InvalidInput("extract_fdlp_envelopes: envelope rate must be > 0");
  const double duration = segment.duration_seconds();
  const auto num_points =
      static_cast<std::size_t>(std::llround(envelope_rate * duration));
  if (num_points < 1)
    throw InvalidInput("extract_fdlp_envelopes: segment too short");

  const DctCoeffs dct = dct_type1_odd(segment);
  const double m = static_cast<double>(2 * segment.size() - 1);
  const double scale = (4.0 / m) * (4.0 / m);

  SubbandEnvelopes out;
  out.data = Matrix(layout.num_bands, num_points, kEnvelopeFloor);
  out.envelope_rate = envelope_rate;
  out.segment_duration = duration;

  for (std::size_t q = 0; q < layout.num_bands; ++q) {
    const std::vector<double> slice =
        weighted_slice(dct.values, band_weights(layout, q));
    if (lp_order >= 2 * slice.size() - 1)
      throw InvalidInput("extract_fdlp_envelopes: order " +
                         std::to_string(lp_order) + " too high for band " +
                         std::to_string(q) + " with " +
                         std::to_string(slice.size()) + " coefficients");
    std::vector<double> r = autocorrelation(slice, lp_order);
    if (!(r[0] > 0.0)) {
      out.warnings.push_back("band " + std::to_string(q) +
                             ": zero energy, filled with floor");
      continue;
    }
    LpModel model = [&] {
      try {
        return levinson_durbin(r, lp_order);
      } catch (const NumericalError& e) {
        // Near-singular band: retry with a small white-noise correction.
        out.warnings.push_back("band " + std::to_string(q) + ": " + e.what() +
                               "; retried with lag-0 correction");
        r[0] *= 1.0 + 1e-9;
        return levinson_durbin(r, lp_order);
      }
    }();
    const Envelope env = ar_envelope(model, num_points);
    auto row = out.data.row(q);
    for (std::size_t n = 0; n < num_points; ++n)
      row[n] = std::max(env.values[n] * scale, kEnvelopeFloor);
  }
  return out;
}

std::vector<LpModel> fit_band_models(const Signal& segment,
                                     const MelBandLayout& layout,
                                     std::size_t lp_order) {
  check_segment(segment, layout);
  const DctCoeffs dct = dct_type1_odd(segment);
  std::vector<LpModel> models;
  models.reserve(layout.num_bands);
  for (std::size_t q = 0; q < layout.num_bands; ++q) {
    const std::vector<double> slice =
        weighted_slice(dct.values, band_weights(layout, q));
    models.push_back(levinson_durbin(autocorrelation(slice, lp_order), lp_order));
  }
  return models;
}

Signal band_signal(const Signal& segment, const MelBandLayout& layout,
                   std::size_t band) {
  check_segment(segment, layout);
  const DctCoeffs dct = dct_type1_odd(segment);
  const BandWeights w = band_weights(layout, band);
  std::vector<double> masked(dct.values.size(), 0.0);
  for (std::size_t i = 0; i < w.weights.size(); ++i)
    masked[w.start + i] = dct.values[w.start + i] * w.weights[i];
  return Signal(inverse_dct_type1_odd(masked), segment.sample_rate());
}

std::vector<SubbandEnvelopes> extract_all_segments(
    const Signal& signal, std::size_t num_bands, double fmin_hz,
    double fmax_hz, double segment_seconds, const FdlpOptions& options) {
  const std::vector<Segment> segments = segment_signal(signal, segment_seconds);
  const MelBandLayout layout =
      mel_band_layout(num_bands, fmin_hz, fmax_hz, signal.sample_rate(),
                      segments.front().signal.size());
  std::vector<SubbandEnvelopes> out;
  out.reserve(segments.size());
  for (const Segment& s : segments)
    out.push_back(extract_fdlp_envelopes(s.signal, layout, options.lp_order,
                                         options.envelope_rate));
  return out;
}

}  // namespace fdlp
