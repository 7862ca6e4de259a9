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


#include "fdlp/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fdlp/error.h"
#include "fdlp/fft.h"

namespace fdlp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> band_noise(std::mt19937_64& rng, std::size_t len, double lo_hz,
                               double hi_hz, int sr) {
  const std::size_t n = fast_fft_size(len);
  std::normal_distribution<double> nd;
  std::vector<double> x(n);
  for (double& v : x) v = nd(rng);
  std::vector<Complex> spec = rfft(x);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * sr / static_cast<double>(n);
    if (f < lo_hz || f > hi_hz) spec[k] = 0.0;
  }
  std::vector<double> y = irfft(spec, n);
  y.resize(len);
  double rms = 0.0;
  for (double v : y) rms += v * v;
  rms = std::sqrt(rms / static_cast<double>(std::max<std::size_t>(len, 1)));
  if (rms > 0.0)
    for (double& v : y) v /= rms;
  return y;
}

}  // namespace

Signal synth_utterance(std::uint64_t seed, const SynthOptions& o) {
  if (!(o.duration_seconds > 0.0) || o.sample_rate <= 0 || !(o.peak > 0.0))
    throw InvalidInput("synth_utterance: invalid options");
  const int sr = o.sample_rate;
  const auto len = static_cast<std::size_t>(std::llround(o.duration_seconds * sr));
  const double nyq = 0.5 * sr;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(len, 0.0);

  double t = 0.02 + 0.1 * u(rng);
  while (t < o.duration_seconds - 0.05) {
    const double dur = std::min(0.08 + 0.25 * u(rng), o.duration_seconds - t);
    const auto start = static_cast<std::size_t>(t * sr);
    const auto count = std::min(len - start, static_cast<std::size_t>(dur * sr));
    const double attack = 0.01 + 0.03 * u(rng);
    const double amp = std::pow(10.0, -u(rng) * 0.6);
    const int kind = static_cast<int>(u(rng) * 3.0);

    std::vector<double> burst(count, 0.0);
    if (kind == 0) {
      const double f0 = 100.0 + 200.0 * u(rng);
      const double tilt = 0.5 + 1.5 * u(rng);
      const double glide = (u(rng) - 0.5) * 0.4;
      for (int h = 1; h * f0 < std::min(5000.0, 0.9 * nyq); ++h) {
        const double a = std::pow(static_cast<double>(h), -tilt);
        const double phi = kTwoPi * u(rng);
        for (std::size_t i = 0; i < count; ++i) {
          const double ti = static_cast<double>(i) / sr;
          const double f = h * f0 * (1.0 + glide * ti / dur);
          burst[i] += a * std::cos(kTwoPi * f * ti + phi);
        }
      }
    } else if (kind == 1) {
      const double fc = 300.0 + 4700.0 * u(rng) * u(rng);
      const double fm = 2.0 + 14.0 * u(rng);
      const double depth = 0.3 + 0.6 * u(rng);
      const double phi = kTwoPi * u(rng);
      for (std::size_t i = 0; i < count; ++i) {
        const double ti = static_cast<double>(i) / sr;
        burst[i] = (1.0 + depth * std::cos(kTwoPi * fm * ti)) *
                   std::cos(kTwoPi * fc * ti + phi);
      }
    } else {
      const double lo = 300.0 + 3000.0 * u(rng);
      const double hi = std::min(0.95 * nyq, lo * (1.3 + 1.5 * u(rng)));
      burst = band_noise(rng, count, lo, hi, sr);
    }

    double peak = 0.0;
    for (double v : burst) peak = std::max(peak, std::abs(v));
    const double ramp = std::max(1.0, attack * sr);
    for (std::size_t i = 0; i < count; ++i) {
      const double rise = std::min(1.0, static_cast<double>(i) / ramp);
      const double fall = std::min(1.0, static_cast<double>(count - i) / (2.0 * ramp));
      const double w = std::sin(0.5 * std::numbers::pi * rise) *
                       std::sin(0.5 * std::numbers::pi * fall);
      x[start + i] += (peak > 0.0 ? amp / peak : 0.0) * w * burst[i];
    }
    t += dur + 0.03 + 0.17 * u(rng);
  }

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0)
    for (double& v : x) v *= o.peak / peak;
  std::normal_distribution<double> nd;
  const double floor_amp = o.peak * std::pow(10.0, o.background_db / 20.0);
  for (double& v : x) v += floor_amp * nd(rng);
  return Signal(std::move(x), sr);
}

}  // namespace fdlp
