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

#include "fdlp/fft.h"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <memory>
#include <mutex>

namespace fdlp {
namespace {

// FFTW planner calls are not thread safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
std::unique_ptr<T[], FftwFree> fftw_buffer(std::size_t n) {
  return std::unique_ptr<T[], FftwFree>(
      static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1))));
}

class Plan {
 public:
  explicit Plan(fftw_plan p) : plan_(p) {}
  ~Plan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

}  // namespace

std::vector<Complex> rfft(std::span<const double> input) {
  const std::size_t n = input.size();
  if (n == 0) return {};
  const std::size_t bins = n / 2 + 1;
  auto in = fftw_buffer<double>(n);
  auto out = fftw_buffer<fftw_complex>(bins);
  fftw_plan raw;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    raw = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(),
                               FFTW_ESTIMATE);
  }
  Plan plan(raw);
  std::copy(input.begin(), input.end(), in.get());
  plan.execute();
  std::vector<Complex> result(bins);
  for (std::size_t k = 0; k < bins; ++k)
    result[k] = Complex(out[k][0], out[k][1]);
  return result;
}

std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n) {
  if (n == 0) return {};
  const std::size_t bins = n / 2 + 1;
  auto in = fftw_buffer<fftw_complex>(bins);
  auto out = fftw_buffer<double>(n);
  fftw_plan raw;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    raw = fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(),
                               FFTW_ESTIMATE);
  }
  Plan plan(raw);
  for (std::size_t k = 0; k < bins; ++k) {
    const Complex v = k < spectrum.size() ? spectrum[k] : Complex{};
    in[k][0] = v.real();
    in[k][1] = v.imag();
  }
  plan.execute();
  return std::vector<double>(out.get(), out.get() + n);
}

std::vector<Complex> fft(std::span<const Complex> input, bool inverse) {
  const std::size_t n = input.size();
  if (n == 0) return {};
  auto in = fftw_buffer<fftw_complex>(n);
  auto out = fftw_buffer<fftw_complex>(n);
  fftw_plan raw;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    raw = fftw_plan_dft_1d(static_cast<int>(n), in.get(), out.get(),
                           inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                           FFTW_ESTIMATE);
  }
  Plan plan(raw);
  for (std::size_t k = 0; k < n; ++k) {
    in[k][0] = input[k].real();
    in[k][1] = input[k].imag();
  }
  plan.execute();
  std::vector<Complex> result(n);
  for (std::size_t k = 0; k < n; ++k)
    result[k] = Complex(out[k][0], out[k][1]);
  return result;
}

std::size_t fast_fft_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2u, 3u, 5u})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

}  // namespace fdlp
