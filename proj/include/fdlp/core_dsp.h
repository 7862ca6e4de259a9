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

#ifndef FDLP_CORE_DSP_H_
#define FDLP_CORE_DSP_H_

#include <cstddef>
#include <span>
#include <vector>

namespace fdlp {

// Envelope values are floored here before any logarithm.
inline constexpr double kEnvelopeFloor = 1e-20;

// Mono audio (or any real sequence) with its sample rate.
class Signal {
 public:
  Signal() = default;
  // Throws InvalidInput for non-finite samples or sample_rate <= 0.
  Signal(std::vector<double> samples, int sample_rate);

  std::span<const double> samples() const { return samples_; }
  const std::vector<double>& vector() const { return samples_; }
  int sample_rate() const { return sample_rate_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples_.size()) / sample_rate_;
  }

  friend bool operator==(const Signal&, const Signal&) = default;

 private:
  std::vector<double> samples_;
  int sample_rate_ = 1;
};

struct DctCoeffs {
  std::vector<double> values;
  std::size_t source_len = 0;
};

// All-pole model {a_k}, a_0 = 1, with gain = final prediction-error power.
class LpModel {
 public:
  // Throws InvalidInput unless coeffs[0] == 1 and gain >= 0.
  LpModel(std::vector<double> coeffs, double gain,
          std::vector<double> error_powers = {});

  std::span<const double> coeffs() const { return coeffs_; }
  double gain() const { return gain_; }
  std::size_t order() const { return coeffs_.size() - 1; }
  // Prediction-error power after each recursion step, index 0 = r[0].
  // Empty when the model was not produced by levinson_durbin.
  std::span<const double> error_powers() const { return error_powers_; }

 private:
  std::vector<double> coeffs_;
  double gain_;
  std::vector<double> error_powers_;
};

struct Envelope {
  std::vector<double> values;
  double rate = 0.0;  // envelope samples per second (0 when unspecified)
};

// Type-I odd DCT with M = 2N - 1:
//   y[k] = sum_t c(t,k) x(t) cos(2 pi t k / M)
// c = 1/2 at t = k = 0, 1/sqrt(2) when exactly one index is zero, else 1.
DctCoeffs dct_type1_odd(std::span<const double> x);
DctCoeffs dct_type1_odd(const Signal& signal);

// Inverse of dct_type1_odd. The transform matrix C satisfies
// C C^T = (M/4) I, so the inverse is (4/M) times the forward transform.
std::vector<double> inverse_dct_type1_odd(std::span<const double> y);

// q(t) = x(t) for t < N, q(t) = x(M - t) for N <= t < M. Requires N >= 2.
Signal even_symmetric_extend(const Signal& signal);

// r[tau] = sum_k y[k] y[k + tau] over the sequence zero-padded to 2N - 1,
// for tau = 0..max_lag. Requires max_lag < 2N - 1.
std::vector<double> autocorrelation(std::span<const double> values,
                                    std::size_t max_lag);
std::vector<double> autocorrelation(const DctCoeffs& coeffs,
                                    std::size_t max_lag);

// Solves the Toeplitz normal equations for the forward predictor of the
// given order. Throws DegenerateSignal when autocorr[0] <= 0 and
// NumericalError (carrying the step) when a reflection coefficient
// reaches unit magnitude.
LpModel levinson_durbin(std::span<const double> autocorr, std::size_t order);

// E(n) = gain / |sum_k a_k exp(-i pi k n / num_points)|^2, n = 0..num_points-1,
// i.e. num_points uniform frequencies over [0, 1/2) cycles per sample.
// Throws NumericalError if the denominator falls below 1e-300.
Envelope ar_envelope(const LpModel& model, std::size_t num_points);

// Squared magnitude of the analytic signal built from the one-sided DFT.
// Reference implementation for tests and analysis.
Envelope hilbert_envelope_oracle(const Signal& signal);
std::vector<double> hilbert_envelope(std::span<const double> x);

// Full linear convolution, length len(a) + len(b) - 1.
Signal convolve(const Signal& a, const Signal& b);
std::vector<double> convolve(std::span<const double> a,
                             std::span<const double> b);

}  // namespace fdlp

#endif  // FDLP_CORE_DSP_H_
