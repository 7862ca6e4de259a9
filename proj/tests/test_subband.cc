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


#include <chrono>
#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "fdlp/error.h"
#include "fdlp/subband_fdlp.h"
#include "test_util.h"

using namespace fdlp;
using fdlp::testing::pearson;
using fdlp::testing::random_vector;

namespace {

constexpr int kRate = 16000;
constexpr std::size_t kSegment = 32000;

Signal noise_segment(std::uint64_t seed, double scale = 0.1) {
  return Signal(random_vector(kSegment, seed, scale), kRate);
}

// AM tone at the centre of band q of the default layout, plus its exact
// squared envelope at the envelope sample times.
std::pair<Signal, std::vector<double>> am_in_band(const MelBandLayout& layout,
                                                  std::size_t q, double rate_hz,
                                                  double depth) {
  const BandRange& b = layout.bands[q];
  const double centre = 0.5 * (b.start + b.end) * (kRate / 2.0) / kSegment;
  std::vector<double> x(kSegment);
  for (std::size_t t = 0; t < kSegment; ++t) {
    const double tt = static_cast<double>(t) / kRate;
    x[t] = (1.0 + depth * std::cos(2 * std::numbers::pi * rate_hz * tt)) *
           std::cos(2 * std::numbers::pi * centre * tt) * 0.3;
  }
  std::vector<double> env(800);
  for (std::size_t n = 0; n < env.size(); ++n) {
    const double tt = n * 2.0 / 800.0;
    const double a = 0.3 * (1.0 + depth * std::cos(2 * std::numbers::pi * rate_hz * tt));
    env[n] = a * a;
  }
  return {Signal(std::move(x), kRate), std::move(env)};
}

}  // namespace

TEST_CASE("mel scale formula") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  for (double hz : {50.0, 1000.0, 6500.0})
    CHECK(mel_to_hz(hz_to_mel(hz)) == doctest::Approx(hz).epsilon(1e-12));
}

TEST_CASE("default mel layout") {
  const MelBandLayout l = mel_band_layout(36, 200, 6500, kRate, kSegment);
  REQUIRE(l.bands.size() == 36);
  REQUIRE(l.edge_hz.size() == 37);
  CHECK(l.bands.front().start == 800);
  CHECK(l.bands.back().end == 26000);
  const double lo = 2595.0 * std::log10(1 + 200.0 / 700);
  const double hi = 2595.0 * std::log10(1 + 6500.0 / 700);
  for (std::size_t i = 0; i <= 36; ++i) {
    const double mel = lo + (hi - lo) * i / 36.0;
    const double hz = 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
    CHECK(l.edge_hz[i] == doctest::Approx(hz).epsilon(1e-9));
  }
  for (std::size_t q = 0; q + 1 < 36; ++q) {
    CHECK(l.bands[q].end == l.bands[q + 1].start);
    CHECK(l.bands[q].width() <= l.bands[q + 1].width() + 1);
  }
  CHECK(frequency_to_dct_bin(4000, kRate, kSegment) == 16000);
  CHECK_THROWS_AS(mel_band_layout(36, 200, 9000, kRate, kSegment), InvalidInput);
  CHECK_THROWS_AS(mel_band_layout(36, 200, 6500, kRate, 40), InvalidInput);
}

TEST_CASE("cosine-tapered windows sum to one across each edge") {
  const MelBandLayout l = mel_band_layout(8, 200, 6500, kRate, 4000, BandWindow::kCosineTaper);
  std::vector<double> total(4000, 0.0);
  for (std::size_t q = 0; q < 8; ++q) {
    const BandWeights w = band_weights(l, q);
    for (std::size_t i = 0; i < w.weights.size(); ++i) total[w.start + i] += w.weights[i];
  }
  // Interior of the covered range is flat; only the outer tapers fall off.
  const std::size_t d0 = l.bands.front().width() / 10, d1 = l.bands.back().width() / 10;
  for (std::size_t k = l.bands.front().start + d0; k < l.bands.back().end - d1; ++k)
    CHECK(total[k] == doctest::Approx(1.0).epsilon(1e-12));
  const BandWeights rect = band_weights(mel_band_layout(8, 200, 6500, kRate, 4000), 3);
  for (double w : rect.weights) CHECK(w == 1.0);
}

TEST_CASE("segment shapes") {
  const MelBandLayout l = mel_band_layout(36, 200, 6500, kRate, kSegment);
  const auto t0 = std::chrono::steady_clock::now();
  const SubbandEnvelopes e = extract_fdlp_envelopes(noise_segment(1), l, 100);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(e.num_bands() == 36);
  CHECK(e.num_samples() == 800);
  CHECK(e.envelope_rate == 400.0);
  CHECK(e.segment_duration == 2.0);
  CHECK(e.warnings.empty());
  CHECK(secs < 1.0);
  for (double v : e.data.values()) CHECK(v > 0.0);
}

TEST_CASE("segmenting pads the final partial segment") {
  const Signal x(random_vector(40000, 2), kRate);
  const std::vector<Segment> s = segment_signal(x, 2.0);
  REQUIRE(s.size() == 2);
  CHECK_FALSE(s[0].padded);
  CHECK(s[1].padded);
  CHECK(s[1].valid_samples == 8000);
  CHECK(s[1].signal.size() == kSegment);
  CHECK(s[1].signal.samples()[7999] == x.samples()[39999]);
  CHECK(s[1].signal.samples()[8000] == 0.0);
  FdlpOptions opt;
  CHECK(extract_all_segments(x, 36, 200, 6500, 2.0, opt).size() == 2);
}

TEST_CASE("envelopes scale with the square of the input") {
  const MelBandLayout l = mel_band_layout(36, 200, 6500, kRate, kSegment);
  const Signal x = noise_segment(4);
  std::vector<double> scaled(x.vector());
  for (double& v : scaled) v *= 3.0;
  const SubbandEnvelopes a = extract_fdlp_envelopes(x, l, 100);
  const SubbandEnvelopes b = extract_fdlp_envelopes(Signal(scaled, kRate), l, 100);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    worst = std::max(worst, std::abs(b.data.values()[i] / (9.0 * a.data.values()[i]) - 1.0));
  CHECK(worst <= 1e-6);
}

TEST_CASE("extraction is deterministic") {
  const MelBandLayout l = mel_band_layout(36, 200, 6500, kRate, kSegment);
  const Signal x = noise_segment(5);
  CHECK(extract_fdlp_envelopes(x, l, 100).data == extract_fdlp_envelopes(x, l, 100).data);
}

TEST_CASE("higher order never increases band residual power") {
  const MelBandLayout l = mel_band_layout(36, 200, 6500, kRate, kSegment);
  const Signal x = noise_segment(6);
  std::vector<LpModel> prev = fit_band_models(x, l, 10);
  for (std::size_t order : {20u, 50u, 100u}) {
    const std::vector<LpModel> cur = fit_band_models(x, l, order);
    for (std::size_t q = 0; q < 36; ++q) CHECK(cur[q].gain() <= prev[q].gain() * (1 + 1e-12));
    prev = cur;
  }
}

TEST_CASE("FDLP tracks the squared envelope of AM tones") {
  const MelBandLayout l = mel_band_layout(36, 200, 6500, kRate, kSegment);
  for (std::size_t q : {2u, 10u, 20u, 30u, 35u}) {
    for (double rate : {2.0, 5.0}) {
      auto [x, expect] = am_in_band(l, q, rate, 0.7);
      const SubbandEnvelopes e = extract_fdlp_envelopes(x, l, 100);
      CAPTURE(q);
      CAPTURE(rate);
      const double ncc = pearson(e.data.row(q), expect);
      CHECK(ncc >= 0.9);
      // Level is that of the squared analytic envelope.
      double se = 0.0, sx = 0.0;
      for (std::size_t n = 100; n < 700; ++n) {
        se += e.data(q, n);
        sx += expect[n];
      }
      CHECK(se / sx == doctest::Approx(1.0).epsilon(0.25));
    }
  }
}

TEST_CASE("band signal keeps only its band") {
  const MelBandLayout l = mel_band_layout(36, 200, 6500, kRate, kSegment);
  auto [x, expect] = am_in_band(l, 12, 3.0, 0.5);
  const Signal in = band_signal(x, l, 12);
  const Signal out = band_signal(x, l, 25);
  double ein = 0.0, eout = 0.0, ex = 0.0;
  for (std::size_t t = 0; t < kSegment; ++t) {
    ein += in.samples()[t] * in.samples()[t];
    eout += out.samples()[t] * out.samples()[t];
    ex += x.samples()[t] * x.samples()[t];
  }
  CHECK(ein / ex > 0.99);
  CHECK(eout / ex < 1e-6);
}

TEST_CASE("extraction errors") {
  const MelBandLayout l = mel_band_layout(36, 200, 6500, kRate, kSegment);
  CHECK_THROWS_AS(extract_fdlp_envelopes(Signal(std::vector<double>(100, 0.1), kRate), l, 10),
                  InvalidInput);
  CHECK_THROWS_AS(extract_fdlp_envelopes(noise_segment(1), l, 0), InvalidInput);
  const MelBandLayout tiny = mel_band_layout(36, 200, 6500, kRate, 2000);
  CHECK_THROWS_AS(extract_fdlp_envelopes(Signal(random_vector(2000, 1), kRate), tiny, 100),
                  InvalidInput);
  const SubbandEnvelopes z =
      extract_fdlp_envelopes(Signal(std::vector<double>(kSegment, 0.0), kRate), l, 100);
  CHECK(z.warnings.size() == 36);
  for (double v : z.data.values()) CHECK(v == kEnvelopeFloor);
}
