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

#include "fdlp/reverb_sim.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fdlp/error.h"

namespace fdlp {

Rir synth_rir(double t60, std::size_t length_samples, int sample_rate,
              std::uint64_t seed) {
  if (!(t60 > 0.0)) throw InvalidInput("synth_rir: t60 must be positive");
  if (sample_rate <= 0) throw InvalidInput("synth_rir: bad sample rate");
  if (static_cast<double>(length_samples) < sample_rate * 0.01)
    throw InvalidInput("synth_rir: length must be at least 10 ms");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto onset =
      static_cast<std::size_t>(std::ceil(0.001 * sample_rate));
  const double decay = -3.0 * std::numbers::ln10 / (t60 * sample_rate);
  constexpr double kTailLimit = 0.999;

  std::vector<double> h(length_samples, 0.0);
  h[0] = 1.0;
  for (std::size_t t = onset; t < length_samples; ++t) {
    const double v = noise(rng) * std::exp(decay * static_cast<double>(t));
    h[t] = std::clamp(v, -kTailLimit, kTailLimit);
  }
  const auto split = std::min<std::size_t>(
      static_cast<std::size_t>(std::llround(kDefaultSplitMs * 1e-3 * sample_rate)),
      length_samples - 1);
  return {Signal(std::move(h), sample_rate), t60, split};
}

Signal apply_reverb(const Signal& clean, const Signal& rir) {
  if (clean.sample_rate() != rir.sample_rate())
    throw InvalidInput("apply_reverb: sample rates differ");
  std::vector<double> full = convolve(clean.samples(), rir.samples());
  full.resize(clean.size());
  return Signal(std::move(full), clean.sample_rate());
}

Signal apply_reverb(const Signal& clean, const Rir& rir) {
  return apply_reverb(clean, rir.samples);
}

EarlyLate split_early_late(const Rir& rir, double split_ms) {
  const Signal& h = rir.samples;
  if (!(split_ms > 0.0) || !(split_ms * 1e-3 < h.duration_seconds()))
    throw InvalidInput("split_early_late: split must lie inside the RIR");
  const auto idx = static_cast<std::size_t>(
      std::llround(split_ms * 1e-3 * h.sample_rate()));
  if (idx == 0 || idx >= h.size())
    throw InvalidInput("split_early_late: split index out of range");
  std::vector<double> early(h.size(), 0.0), late(h.size(), 0.0);
  auto x = h.samples();
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(idx),
            early.begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(idx), x.end(),
            late.begin() + static_cast<std::ptrdiff_t>(idx));
  return {Signal(std::move(early), h.sample_rate()),
          Signal(std::move(late), h.sample_rate()), idx};
}

namespace {

// Block sums of the band-passed analytic magnitude of x (already padded to
// the layout length), one per envelope sample.
Matrix magnitude_block_sums(const Signal& x, const MelBandLayout& layout,
                            std::size_t num_points) {
  const double block = static_cast<double>(x.size()) /
                       static_cast<double>(num_points);
  Matrix out(layout.num_bands, num_points, 0.0);
  for (std::size_t q = 0; q < layout.num_bands; ++q) {
    const std::vector<double> power = hilbert_envelope(
        even_symmetric_extend(band_signal(x, layout, q)).samples());
    for (std::size_t n = 0; n < num_points; ++n) {
      const auto lo = static_cast<long long>(
          std::llround((static_cast<double>(n) - 0.5) * block));
      const auto hi = static_cast<long long>(
          std::llround((static_cast<double>(n) + 0.5) * block));
      double acc = 0.0;
      for (long long t = std::max(0LL, lo);
           t < hi && t < static_cast<long long>(x.size()); ++t)
        acc += std::sqrt(power[static_cast<std::size_t>(t)]);
      out(q, n) = acc;
    }
  }
  return out;
}

}  // namespace

SubbandEnvelopes rir_kernel_envelopes(const Signal& rir,
                                      const MelBandLayout& layout,
                                      double envelope_rate) {
  if (rir.sample_rate() != layout.sample_rate)
    throw InvalidInput("rir_kernel_envelopes: sample rate mismatch");
  if (!(envelope_rate > 0.0))
    throw InvalidInput("rir_kernel_envelopes: envelope rate must be > 0");
  const std::size_t len = layout.dct_len;
  const double duration = static_cast<double>(len) / layout.sample_rate;
  const auto num_points =
      static_cast<std::size_t>(std::llround(envelope_rate * duration));
  if (num_points < 1 || len < 2)
    throw InvalidInput("rir_kernel_envelopes: segment too short");

  std::vector<double> padded(len, 0.0);
  std::copy_n(rir.samples().begin(), std::min(rir.size(), len), padded.begin());
  std::vector<double> impulse(len, 0.0);
  impulse[0] = 1.0;

  const Matrix h = magnitude_block_sums(
      Signal(std::move(padded), rir.sample_rate()), layout, num_points);
  const Matrix ref = magnitude_block_sums(
      Signal(std::move(impulse), rir.sample_rate()), layout, num_points);

  SubbandEnvelopes out;
  out.data = Matrix(layout.num_bands, num_points);
  out.envelope_rate = envelope_rate;
  out.segment_duration = duration;
  for (std::size_t q = 0; q < layout.num_bands; ++q) {
    double mass = 0.0;
    for (double v : ref.row(q)) mass += v;
    if (!(mass > 0.0))
      throw DegenerateSignal("rir_kernel_envelopes: empty band " +
                             std::to_string(q));
    for (std::size_t n = 0; n < num_points; ++n) {
      const double k = 2.0 * h(q, n) / mass;
      out.data(q, n) = k * k;
    }
  }
  return out;
}

std::vector<double> envelope_convolution_residual(
    const SubbandEnvelopes& clean_env, const SubbandEnvelopes& rir_env,
    const SubbandEnvelopes& reverb_env) {
  if (!clean_env.data.same_shape(reverb_env.data) ||
      clean_env.num_bands() != rir_env.num_bands() ||
      rir_env.num_samples() == 0)
    throw InvalidInput("envelope_convolution_residual: shape mismatch");
  if (clean_env.envelope_rate != rir_env.envelope_rate ||
      clean_env.envelope_rate != reverb_env.envelope_rate)
    throw InvalidInput("envelope_convolution_residual: envelope rates differ");

  const std::size_t len = clean_env.num_samples();
  auto magnitude = [](std::span<const double> row) {
    std::vector<double> m(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) m[i] = std::sqrt(row[i]);
    return m;
  };
  std::vector<double> residual(clean_env.num_bands());
  for (std::size_t q = 0; q < clean_env.num_bands(); ++q) {
    const std::vector<double> model = convolve(magnitude(clean_env.data.row(q)),
                                               magnitude(rir_env.data.row(q)));
    const std::vector<double> r = magnitude(reverb_env.data.row(q));
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < len; ++n) {
      const double d = r[n] - 0.5 * model[n];
      num += d * d;
      den += r[n] * r[n];
    }
    residual[q] = den > 0.0 ? std::sqrt(num / den) : 0.0;
  }
  return residual;
}

}  // namespace fdlp
