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


#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "fdlp/error.h"
#include "fdlp/reverb_sim.h"
#include "test_util.h"

using namespace fdlp;
using fdlp::testing::direct_convolution;
using fdlp::testing::max_abs_diff;
using fdlp::testing::median;
using fdlp::testing::random_vector;

namespace {

constexpr int kRate = 16000;

// T60 from a least-squares line through the 10 ms energy profile in dB.
double fitted_t60(const Signal& h, double t60) {
  const std::size_t win = 160;
  std::vector<double> t, db;
  for (std::size_t start = 800; start + win <= static_cast<std::size_t>(0.8 * t60 * kRate);
       start += win) {
    double e = 0.0;
    for (std::size_t i = start; i < start + win; ++i) e += h.samples()[i] * h.samples()[i];
    t.push_back((start + win / 2.0) / kRate);
    db.push_back(10.0 * std::log10(e / win));
  }
  const double n = static_cast<double>(t.size());
  double st = 0, sd = 0, stt = 0, std_ = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sd += db[i];
    stt += t[i] * t[i];
    std_ += t[i] * db[i];
  }
  const double slope = (n * std_ - st * sd) / (n * stt - st * st);
  return -60.0 / slope;
}

Signal am_noise(std::size_t n, std::uint64_t seed) {
  std::vector<double> x = random_vector(n, seed);
  for (std::size_t t = 0; t < n; ++t)
    x[t] *= 1.0 + 0.8 * std::cos(2 * std::numbers::pi * 3.0 * t / kRate);
  return Signal(std::move(x), kRate);
}

}  // namespace

TEST_CASE("synthetic rir shape") {
  for (double t60 : {0.3, 0.6, 0.9}) {
    const Rir r = synth_rir(t60, static_cast<std::size_t>(1.2 * t60 * kRate), kRate, 11);
    CHECK(r.t60 == t60);
    CHECK(r.split_index == 800);
    CHECK(r.samples.samples()[0] == 1.0);
    for (std::size_t i = 1; i < 16; ++i) CHECK(r.samples.samples()[i] == 0.0);
    for (std::size_t i = 1; i < r.samples.size(); ++i)
      CHECK(std::abs(r.samples.samples()[i]) < 1.0);
    CHECK(fitted_t60(r.samples, t60) == doctest::Approx(t60).epsilon(0.1));
  }
}

TEST_CASE("synthetic rir is deterministic per seed") {
  CHECK(synth_rir(0.5, 9000, kRate, 3).samples == synth_rir(0.5, 9000, kRate, 3).samples);
  CHECK_FALSE(synth_rir(0.5, 9000, kRate, 3).samples == synth_rir(0.5, 9000, kRate, 4).samples);
  CHECK_THROWS_AS(synth_rir(0.0, 9000, kRate, 1), InvalidInput);
  CHECK_THROWS_AS(synth_rir(0.3, 100, kRate, 1), InvalidInput);
}

TEST_CASE("early and late partition the rir") {
  const Rir r = synth_rir(0.6, 12000, kRate, 5);
  const EarlyLate el = split_early_late(r, 50.0);
  CHECK(el.split_index == 800);
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    CHECK(el.early.samples()[i] + el.late.samples()[i] == r.samples.samples()[i]);
    CHECK((i < 800 ? el.late.samples()[i] : el.early.samples()[i]) == 0.0);
  }
  CHECK_THROWS_AS(split_early_late(r, 1000.0), InvalidInput);
  CHECK_THROWS_AS(split_early_late(r, 0.0), InvalidInput);
}

TEST_CASE("reverberation is truncated linear convolution") {
  const Signal x(random_vector(3000, 1), kRate);
  const Rir r = synth_rir(0.3, 500, kRate, 2);
  const Signal y = apply_reverb(x, r);
  std::vector<double> ref = direct_convolution(x.samples(), r.samples.samples());
  ref.resize(3000);
  CHECK(y.size() == 3000);
  CHECK(max_abs_diff(y.samples(), ref) <= 1e-10);

  std::vector<double> delta(400, 0.0);
  delta[0] = 1.0;
  CHECK(max_abs_diff(apply_reverb(x, Signal(delta, kRate)).samples(), x.samples()) <= 1e-12);
  CHECK_THROWS_AS(apply_reverb(x, Signal(delta, 8000)), InvalidInput);
}

TEST_CASE("unit impulse kernel has magnitude mass two") {
  const MelBandLayout l = mel_band_layout(36, 200, 6500, kRate, 32000);
  std::vector<double> delta(160, 0.0);
  delta[0] = 1.0;
  const SubbandEnvelopes k = rir_kernel_envelopes(Signal(delta, kRate), l);
  CHECK(k.num_bands() == 36);
  CHECK(k.num_samples() == 800);
  for (std::size_t q = 0; q < 36; ++q) {
    double mass = 0.0;
    for (double v : k.data.row(q)) mass += std::sqrt(v);
    CHECK(mass == doctest::Approx(2.0).epsilon(1e-12));
    // Concentrated near lag zero.
    CHECK(std::sqrt(k.data(q, 0)) + std::sqrt(k.data(q, 1)) > std::sqrt(k.data(q, 10)) * 5);
  }
}

TEST_CASE("convolution model with a direct-path rir") {
  // Same envelope on both sides: the model only has to undo the kernel's
  // own spread, which the test signal's slow modulation tolerates.
  const std::size_t n = 32000;
  for (double bw : {400.0, 100.0, 25.0}) {
    const MelBandLayout l = mel_band_layout(1, 2000 - bw / 2, 2000 + bw / 2, kRate, n);
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double tt = static_cast<double>(t) / kRate;
      x[t] = (1 + 0.5 * std::cos(2 * std::numbers::pi * tt)) * std::cos(2 * std::numbers::pi * 2000 * tt);
    }
    const std::size_t order = std::min<std::size_t>(100, l.bands[0].width() / 2);
    const SubbandEnvelopes e = extract_fdlp_envelopes(Signal(x, kRate), l, order);
    std::vector<double> delta(100, 0.0);
    delta[0] = 1.0;
    const auto res = envelope_convolution_residual(e, rir_kernel_envelopes(Signal(delta, kRate), l), e);
    REQUIRE(res.size() == 1);
    CAPTURE(bw);
    CHECK(res[0] < 0.3);
  }
}

TEST_CASE("residual of a hand-built model is zero") {
  SubbandEnvelopes clean, kernel, reverb;
  clean.data = Matrix(2, 6);
  kernel.data = Matrix(2, 6, 0.0);
  for (std::size_t q = 0; q < 2; ++q)
    for (std::size_t i = 0; i < 6; ++i) clean.data(q, i) = std::pow(1.0 + i + q, 2);
  kernel.data(0, 0) = 4.0;  // sqrt = 2 -> identity under the 1/2 factor
  kernel.data(1, 1) = 4.0;  // pure one-sample delay
  reverb.data = clean.data;
  for (std::size_t i = 0; i < 6; ++i) reverb.data(1, i) = i == 0 ? 1e-30 : clean.data(1, i - 1);
  const auto res = envelope_convolution_residual(clean, kernel, reverb);
  CHECK(res[0] == doctest::Approx(0.0));
  CHECK(res[1] < 1e-12);
  SubbandEnvelopes bad = reverb;
  bad.data = Matrix(3, 6, 1.0);
  CHECK_THROWS_AS(envelope_convolution_residual(clean, kernel, bad), InvalidInput);
  bad = reverb;
  bad.envelope_rate = 100.0;
  CHECK_THROWS_AS(envelope_convolution_residual(clean, kernel, bad), InvalidInput);
}

TEST_CASE("narrow bands fit the convolution model better than wide ones") {
  const std::size_t n = 32000;
  std::vector<double> wide, narrow;
  for (int trial = 0; trial < 10; ++trial) {
    const Rir r = synth_rir(0.3, 7200, kRate, 200 + trial);
    const Signal x = am_noise(n, 300 + trial);
    const Signal y = apply_reverb(x, r);
    for (double bw : {400.0, 50.0}) {
      const MelBandLayout l = mel_band_layout(1, 2000 - bw / 2, 2000 + bw / 2, kRate, n);
      const std::size_t order = std::min<std::size_t>(100, l.bands[0].width() / 2);
      const double res = envelope_convolution_residual(
          extract_fdlp_envelopes(x, l, order), rir_kernel_envelopes(r.samples, l),
          extract_fdlp_envelopes(y, l, order))[0];
      (bw > 100 ? wide : narrow).push_back(res);
    }
  }
  CHECK(median(narrow) <= median(wide));
}
