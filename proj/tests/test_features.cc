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
#include <numeric>
#include <vector>

#include <doctest.h>

#include "fdlp/error.h"
#include "fdlp/features.h"
#include "test_util.h"

using namespace fdlp;
using fdlp::testing::random_matrix;

TEST_CASE("hamming window") {
  const std::vector<double> w = hamming_window(10);
  REQUIRE(w.size() == 10);
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  double raw_sum = 0.0;
  for (int i = 0; i < 10; ++i) raw_sum += 0.54 - 0.46 * std::cos(2 * M_PI * i / 9.0);
  for (int i = 0; i < 10; ++i) {
    CHECK(w[i] == doctest::Approx((0.54 - 0.46 * std::cos(2 * M_PI * i / 9.0)) / raw_sum));
    CHECK(w[i] == doctest::Approx(w[9 - i]));
  }
  CHECK(hamming_window(1) == std::vector<double>{1.0});
  CHECK_THROWS_AS(hamming_window(0), InvalidInput);
}

TEST_CASE("frame count for a default segment") {
  CHECK(kIntegrationWindow == 10);
  CHECK(kIntegrationHop == 4);
  CHECK(feature_frame_count(800) == 198);
  CHECK(feature_frame_count(10) == 1);
  CHECK(feature_frame_count(13) == 1);
  CHECK(feature_frame_count(14) == 2);
  CHECK_THROWS_AS(feature_frame_count(9), InvalidInput);
}

TEST_CASE("integration equals direct windowed summation") {
  Matrix env = random_matrix(36, 800, 3);
  for (double& v : env.storage()) v = v * v + 1e-3;
  const FeatureMatrix f = integrate_envelopes(env, 400.0);
  REQUIRE(f.num_frames() == 198);
  REQUIRE(f.num_bands() == 36);
  CHECK(f.frame_rate == 100.0);
  double raw_sum = 0.0;
  std::vector<double> raw(10);
  for (int i = 0; i < 10; ++i) raw_sum += raw[i] = 0.54 - 0.46 * std::cos(2 * M_PI * i / 9.0);
  for (std::size_t m = 0; m < 198; m += 7)
    for (std::size_t q = 0; q < 36; ++q) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 10; ++j) acc += raw[j] / raw_sum * env(q, 4 * m + j);
      CHECK(f.data(m, q) == doctest::Approx(std::log(acc)).epsilon(1e-12));
    }
}

TEST_CASE("integration floors before the log") {
  const FeatureMatrix f = integrate_envelopes(Matrix(2, 20, 0.0), 400.0);
  for (double v : f.data.values()) CHECK(v == doctest::Approx(std::log(kEnvelopeFloor)));
}

TEST_CASE("context splicing") {
  FeatureMatrix f;
  f.data = random_matrix(198, 36, 4);
  const ContextTensor c = splice_context(f);
  CHECK(c.context == 21);
  CHECK(c.num_bands == 36);
  REQUIRE(c.data.rows() == 198);
  REQUIRE(c.data.cols() == 21 * 36);
  for (std::size_t m : {0u, 5u, 100u, 197u})
    for (std::size_t k = 0; k < 21; ++k) {
      const long src = std::clamp(static_cast<long>(m) + static_cast<long>(k) - 10, 0L, 197L);
      for (std::size_t q = 0; q < 36; ++q)
        CHECK(c.data(m, k * 36 + q) == f.data(static_cast<std::size_t>(src), q));
    }
  FeatureMatrix one;
  one.data = Matrix(1, 2, 3.0);
  const ContextTensor c1 = splice_context(one, 1, 1);
  CHECK(c1.data == Matrix(1, 6, 3.0));
  CHECK_THROWS_AS(splice_context(FeatureMatrix{}), InvalidInput);
}
