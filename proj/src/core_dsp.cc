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

#include "fdlp/core_dsp.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fdlp/error.h"
#include "fdlp/fft.h"

namespace fdlp {

Signal::Signal(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (sample_rate_ <= 0)
    throw InvalidInput("sample rate must be positive, got " +
                       std::to_string(sample_rate_));
  for (std::size_t i = 0; i < samples_.size(); ++i)
    if (!std::isfinite(samples_[i]))
      throw InvalidInput("non-finite sample at index " + std::to_string(i));
}

LpModel::LpModel(std::vector<double> coeffs, double gain,
                 std::vector<double> error_powers)
    : coeffs_(std::move(coeffs)), gain_(gain),
      error_powers_(std::move(error_powers)) {
  if (coeffs_.empty() || coeffs_[0] != 1.0)
    throw InvalidInput("LP coefficients must start with a_0 = 1");
  if (!(gain_ >= 0.0)) throw InvalidInput("LP gain must be >= 0");
}

DctCoeffs dct_type1_odd(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw InvalidInput("dct_type1_odd: empty signal");
  if (n == 1) return {{0.5 * x[0]}, 1};

  const std::size_t m = 2 * n - 1;
  std::vector<double> q(m);
  for (std::size_t t = 0; t < n; ++t) q[t] = x[t];
  for (std::size_t t = n; t < m; ++t) q[t] = x[m - t];

  // q is even, so its DFT is real: Q[k] = x0 + 2 sum_{t>0} x(t) cos(...).
  const std::vector<Complex> spectrum = rfft(q);
  const double x0 = x[0];
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  DctCoeffs out{std::vector<double>(n), n};
  out.values[0] = 0.5 * x0 + (spectrum[0].real() - x0) * 0.5 * inv_sqrt2;
  for (std::size_t k = 1; k < n; ++k)
    out.values[k] = 0.5 * (spectrum[k].real() - x0) + x0 * inv_sqrt2;
  return out;
}

DctCoeffs dct_type1_odd(const Signal& signal) {
  return dct_type1_odd(signal.samples());
}

std::vector<double> inverse_dct_type1_odd(std::span<const double> y) {
  if (y.empty()) throw InvalidInput("inverse_dct_type1_odd: empty input");
  DctCoeffs fwd = dct_type1_odd(y);
  const double scale = 4.0 / static_cast<double>(2 * y.size() - 1);
  for (double& v : fwd.values) v *= scale;
  return std::move(fwd.values);
}

Signal even_symmetric_extend(const Signal& signal) {
  const std::size_t n = signal.size();
  if (n < 2)
    throw InvalidInput("even_symmetric_extend: need at least 2 samples, got " +
                       std::to_string(n));
  const std::size_t m = 2 * n - 1;
  std::vector<double> q(m);
  auto x = signal.samples();
  for (std::size_t t = 0; t < n; ++t) q[t] = x[t];
  for (std::size_t t = n; t < m; ++t) q[t] = x[m - t];
  return Signal(std::move(q), signal.sample_rate());
}

std::vector<double> autocorrelation(std::span<const double> values,
                                    std::size_t max_lag) {
  const std::size_t n = values.size();
  if (n == 0) throw InvalidInput("autocorrelation: empty sequence");
  if (max_lag >= 2 * n - 1)
    throw InvalidInput("autocorrelation: max_lag " + std::to_string(max_lag) +
                       " out of range for padded length " +
                       std::to_string(2 * n - 1));
  std::vector<double> r(max_lag + 1, 0.0);
  const std::size_t lags = std::min(max_lag + 1, n);

  if (lags * n <= (1u << 18)) {
    for (std::size_t tau = 0; tau < lags; ++tau) {
      double acc = 0.0;
      for (std::size_t k = 0; k + tau < n; ++k) acc += values[k] * values[k + tau];
      r[tau] = acc;
    }
    return r;
  }

  // Long sequences: |Y|^2 inverse-transformed on a grid long enough to
  // avoid circular wrap.
  const std::size_t size = fast_fft_size(2 * n - 1);
  std::vector<double> padded(size, 0.0);
  std::copy(values.begin(), values.end(), padded.begin());
  std::vector<Complex> spec = rfft(padded);
  for (Complex& c : spec) c = Complex(std::norm(c), 0.0);
  const std::vector<double> full = irfft(spec, size);
  const double inv = 1.0 / static_cast<double>(size);
  for (std::size_t tau = 0; tau < lags; ++tau) r[tau] = full[tau] * inv;
  return r;
}

std::vector<double> autocorrelation(const DctCoeffs& coeffs,
                                    std::size_t max_lag) {
  return autocorrelation(coeffs.values, max_lag);
}

LpModel levinson_durbin(std::span<const double> autocorr, std::size_t order) {
  if (order < 1) throw InvalidInput("levinson_durbin: order must be >= 1");
  if (autocorr.size() < order + 1)
    throw InvalidInput("levinson_durbin: need " + std::to_string(order + 1) +
                       " autocorrelation lags, got " +
                       std::to_string(autocorr.size()));
  if (!(autocorr[0] > 0.0))
    throw DegenerateSignal("levinson_durbin: zero-lag autocorrelation <= 0");

  constexpr double kReflectionLimit = 1.0 - 1e-12;
  std::vector<double> a(order + 1, 0.0);
  std::vector<double> prev(order + 1, 0.0);
  std::vector<double> errors;
  errors.reserve(order + 1);
  a[0] = 1.0;
  double err = autocorr[0];
  errors.push_back(err);

  for (std::size_t i = 1; i <= order; ++i) {
    double acc = autocorr[i];
    for (std::size_t j = 1; j < i; ++j) acc += a[j] * autocorr[i - j];
    const double k = -acc / err;
    if (!std::isfinite(k) || std::abs(k) >= kReflectionLimit)
      throw NumericalError("levinson_durbin: reflection coefficient " +
                               std::to_string(k) + " at step " +
                               std::to_string(i),
                           i);
    std::copy(a.begin(), a.begin() + i, prev.begin());
    for (std::size_t j = 1; j < i; ++j) a[j] = prev[j] + k * prev[i - j];
    a[i] = k;
    err *= (1.0 - k * k);
    errors.push_back(err);
  }
  return LpModel(std::move(a), err, std::move(errors));
}

Envelope ar_envelope(const LpModel& model, std::size_t num_points) {
  if (num_points < 1) throw InvalidInput("ar_envelope: num_points must be >= 1");
  auto a = model.coeffs();
  std::vector<double> denom(num_points);

  const std::size_t grid = 2 * num_points;
  if (a.size() <= grid) {
    // Frequencies n / (2 num_points) are bins 0..num_points-1 of a
    // length-2*num_points DFT.
    std::vector<double> padded(grid, 0.0);
    std::copy(a.begin(), a.end(), padded.begin());
    const std::vector<Complex> spec = rfft(padded);
    for (std::size_t n = 0; n < num_points; ++n) denom[n] = std::norm(spec[n]);
  } else {
    for (std::size_t n = 0; n < num_points; ++n) {
      const double w = std::numbers::pi * static_cast<double>(n) /
                       static_cast<double>(num_points);
      Complex acc{};
      for (std::size_t k = 0; k < a.size(); ++k)
        acc += a[k] * std::polar(1.0, -w * static_cast<double>(k));
      denom[n] = std::norm(acc);
    }
  }

  Envelope env;
  env.values.resize(num_points);
  for (std::size_t n = 0; n < num_points; ++n) {
    if (!(denom[n] >= 1e-300))
      throw NumericalError("ar_envelope: denominator underflow at point " +
                               std::to_string(n),
                           n);
    env.values[n] = model.gain() / denom[n];
  }
  return env;
}

std::vector<double> hilbert_envelope(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw InvalidInput("hilbert_envelope: empty signal");
  std::vector<Complex> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = Complex(x[i], 0.0);
  std::vector<Complex> spec = fft(buf, false);
  // One-sided spectrum: keep DC (and Nyquist for even n), double positive
  // frequencies, zero negative ones.
  const std::size_t half = n / 2;
  for (std::size_t k = 1; k < n; ++k) {
    if (n % 2 == 0 && k == half) continue;
    spec[k] *= (k <= (n - 1) / 2) ? 2.0 : 0.0;
  }
  const std::vector<Complex> analytic = fft(spec, true);
  const double inv = 1.0 / static_cast<double>(n);
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::norm(analytic[i] * inv);
  return env;
}

Envelope hilbert_envelope_oracle(const Signal& signal) {
  return {hilbert_envelope(signal.samples()),
          static_cast<double>(signal.sample_rate())};
}

std::vector<double> convolve(std::span<const double> a,
                             std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidInput("convolve: empty input");
  const std::size_t out_len = a.size() + b.size() - 1;
  std::vector<double> out(out_len, 0.0);
  if (std::min(a.size(), b.size()) <= 32 || a.size() * b.size() <= (1u << 14)) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double ai = a[i];
      for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += ai * b[j];
    }
    return out;
  }
  const std::size_t size = fast_fft_size(out_len);
  std::vector<double> pa(size, 0.0), pb(size, 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  std::vector<Complex> fa = rfft(pa);
  const std::vector<Complex> fb = rfft(pb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  const std::vector<double> full = irfft(fa, size);
  const double inv = 1.0 / static_cast<double>(size);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = full[i] * inv;
  return out;
}

Signal convolve(const Signal& a, const Signal& b) {
  if (a.sample_rate() != b.sample_rate())
    throw InvalidInput("convolve: sample rates differ (" +
                       std::to_string(a.sample_rate()) + " vs " +
                       std::to_string(b.sample_rate()) + ")");
  return Signal(convolve(a.samples(), b.samples()), a.sample_rate());
}

}  // namespace fdlp
