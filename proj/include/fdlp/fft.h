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

#ifndef FDLP_FFT_H_
#define FDLP_FFT_H_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fdlp {

using Complex = std::complex<double>;

// Thin wrappers over FFTW. Planning is serialized internally, so these
// may be called concurrently. Transforms are unnormalized.

// Forward real-to-complex transform; returns n/2 + 1 bins.
std::vector<Complex> rfft(std::span<const double> input);

// Inverse of rfft for a length-n real sequence (unnormalized: the result
// is n times the true inverse).
std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n);

// Complex forward (sign -1) or inverse (sign +1) transform.
std::vector<Complex> fft(std::span<const Complex> input, bool inverse);

// Smallest n' >= n whose only prime factors are 2, 3 and 5.
std::size_t fast_fft_size(std::size_t n);

}  // namespace fdlp

#endif  // FDLP_FFT_H_
