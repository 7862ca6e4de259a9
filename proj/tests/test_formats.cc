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


#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <doctest.h>

#include "fdlp/config.h"
#include "fdlp/error.h"
#include "fdlp/formats.h"
#include "fdlp/wav_io.h"
#include "test_util.h"

using namespace fdlp;
using fdlp::testing::random_matrix;
using fdlp::testing::random_vector;
using fdlp::testing::TempDir;

namespace {

struct Bytes {
  std::vector<std::uint8_t> v;
  Bytes& str(const std::string& s) {
    v.insert(v.end(), s.begin(), s.end());
    return *this;
  }
  Bytes& u16(std::uint16_t x) {
    v.push_back(x & 0xff);
    v.push_back(x >> 8);
    return *this;
  }
  Bytes& u32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) v.push_back((x >> (8 * i)) & 0xff);
    return *this;
  }
};

// Mono WAV assembled by hand, optionally with an extra chunk before "data".
std::vector<std::uint8_t> wav_bytes(std::uint16_t format, std::uint16_t channels,
                                    std::uint16_t bits, const std::vector<std::uint8_t>& payload,
                                    bool extra_chunk = false) {
  Bytes b;
  b.str("RIFF").u32(0).str("WAVE");
  b.str("fmt ").u32(16).u16(format).u16(channels).u32(16000);
  b.u32(16000 * channels * bits / 8).u16(channels * bits / 8).u16(bits);
  if (extra_chunk) b.str("LIST").u32(3).str("abc").v.push_back(0);
  b.str("data").u32(static_cast<std::uint32_t>(payload.size()));
  b.v.insert(b.v.end(), payload.begin(), payload.end());
  return b.v;
}

std::vector<std::uint8_t> pcm16(const std::vector<std::int16_t>& s) {
  Bytes b;
  for (std::int16_t x : s) b.u16(static_cast<std::uint16_t>(x));
  return b.v;
}

}  // namespace

TEST_CASE("pcm16 decoding scale") {
  const Signal x = decode_wav(wav_bytes(1, 1, 16, pcm16({16384, -32768, 0, 32767})));
  CHECK(x.sample_rate() == 16000);
  REQUIRE(x.size() == 4);
  CHECK(x.samples()[0] == 0.5);
  CHECK(x.samples()[1] == -1.0);
  CHECK(x.samples()[2] == 0.0);
  CHECK(x.samples()[3] == 32767.0 / 32768.0);
  CHECK(decode_wav(wav_bytes(1, 1, 16, pcm16({16384}), true)).samples()[0] == 0.5);
}

TEST_CASE("float32 decoding") {
  Bytes p;
  float f = 0.25f;
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  p.u32(u);
  const Signal x = decode_wav(wav_bytes(3, 1, 32, p.v));
  CHECK(x.samples()[0] == 0.25);
}

TEST_CASE("wav error variants") {
  CHECK_THROWS_AS(decode_wav(wav_bytes(1, 2, 16, pcm16({1, 2}))), MultiChannelAudio);
  try {
    decode_wav(wav_bytes(1, 2, 16, pcm16({1, 2})));
  } catch (const MultiChannelAudio& e) {
    CHECK(e.channels() == 2);
  }
  CHECK_THROWS_AS(decode_wav(wav_bytes(1, 1, 24, {0, 0, 0})), UnsupportedEncoding);
  CHECK_THROWS_AS(decode_wav(wav_bytes(6, 1, 8, {0})), UnsupportedEncoding);
  std::vector<std::uint8_t> bad = wav_bytes(1, 1, 16, pcm16({1}));
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_wav(bad), BadMagic);

  // Truncations name the chunk that is missing or cut.
  auto message = [](const std::vector<std::uint8_t>& b) {
    try {
      decode_wav(b);
    } catch (const TruncatedFile& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::vector<std::uint8_t> full = wav_bytes(1, 1, 16, pcm16({1, 2, 3}));
  CHECK(message({full.begin(), full.begin() + 8}).find("RIFF") != std::string::npos);
  CHECK(message({full.begin(), full.begin() + 12}).find("fmt") != std::string::npos);
  CHECK(message({full.begin(), full.begin() + 30}).find("fmt") != std::string::npos);
  CHECK(message({full.begin(), full.begin() + 36}).find("data") != std::string::npos);
  CHECK(message({full.begin(), full.end() - 2}).find("data") != std::string::npos);
}

TEST_CASE("wav round trips") {
  std::vector<double> v = random_vector(5000, 1, 0.3);
  for (double& x : v) x = std::clamp(x, -1.0, 1.0 - 1.0 / 32768);
  const Signal x(v, 22050);
  const Signal a = decode_wav(encode_wav(x, WavEncoding::kPcm16));
  CHECK(a.sample_rate() == 22050);
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(a.samples()[i] - v[i]));
  CHECK(worst <= 1.0 / 32768);
  const Signal b = decode_wav(encode_wav(x, WavEncoding::kFloat32));
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(b.samples()[i] == static_cast<double>(static_cast<float>(v[i])));
  TempDir dir("wav");
  write_wav(dir / "x.wav", x);
  CHECK(read_wav(dir / "x.wav") == a);
  CHECK_THROWS_AS(read_wav(dir / "missing.wav"), IoError);
}

TEST_CASE("feat1 layout and round trip") {
  const Matrix m = random_matrix(198, 36, 2);
  const std::vector<std::uint8_t> bytes = encode_feat1(m, 100.0);
  REQUIRE(bytes.size() == 5 + 2 + 4 + 4 + 4 + 198 * 36 * 4 + 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "FEAT1");
  CHECK(bytes[5] == 1);
  CHECK(bytes[6] == 0);
  CHECK((bytes[7] | bytes[8] << 8) == 198);
  CHECK((bytes[11] | bytes[12] << 8) == 36);
  const FeatureMatrix f = decode_feat1(bytes);
  CHECK(f.num_frames() == 198);
  CHECK(f.num_bands() == 36);
  CHECK(f.frame_rate == 100.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    CHECK(f.data.values()[i] == static_cast<double>(static_cast<float>(m.values()[i])));
  // A second pass is bit exact.
  CHECK(encode_feat1(f.data, f.frame_rate) == bytes);
}

TEST_CASE("feat1 rejects damage") {
  const std::vector<std::uint8_t> good = encode_feat1(random_matrix(4, 3, 3), 400.0);
  std::vector<std::uint8_t> b = good;
  b[30] ^= 0x40;
  CHECK_THROWS_AS(decode_feat1(b), CrcMismatch);
  b = good;
  b[5] = 2;
  CHECK_THROWS_AS(decode_feat1(b), VersionMismatch);
  b = good;
  b[0] = 'G';
  CHECK_THROWS_AS(decode_feat1(b), BadMagic);
  CHECK_THROWS_AS(decode_feat1({good.begin(), good.end() - 10}), TruncatedFile);
  CHECK_THROWS_AS(decode_feat1({good.begin(), good.begin() + 3}), TruncatedFile);
}

TEST_CASE("envelopes travel transposed") {
  SubbandEnvelopes e;
  e.data = random_matrix(36, 800, 4);
  e.envelope_rate = 400.0;
  TempDir dir("env");
  write_envelopes(dir / "e.feat1", e);
  const FeatureMatrix raw = read_feat1(dir / "e.feat1");
  CHECK(raw.num_frames() == 800);
  CHECK(raw.num_bands() == 36);
  CHECK(raw.frame_rate == 400.0);
  const SubbandEnvelopes back = read_envelopes(dir / "e.feat1");
  CHECK(back.num_bands() == 36);
  CHECK(back.segment_duration == 2.0);
  CHECK(back.data(5, 17) == static_cast<double>(static_cast<float>(e.data(5, 17))));
}

TEST_CASE("estimator checkpoint round trip") {
  EstimatorConfig c;
  c.num_bands = 5;
  c.layers[0].out_channels = 3;
  c.layers[1].out_channels = 4;
  GainEstimator e(c, 7);
  e.parameters().back().values[0] = -0.25;
  e.set_normalization(random_vector(5, 1), std::vector<double>(5, 0.5));
  const std::vector<std::uint8_t> bytes = encode_estimator(e);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "FDGE");
  const GainEstimator d = decode_estimator(bytes);
  CHECK(d.config() == c);
  for (std::size_t i = 0; i < e.parameters().size(); ++i) CHECK(d.parameters()[i] == e.parameters()[i]);
  CHECK(d.norm_mean() == e.norm_mean());
  CHECK(d.norm_std() == e.norm_std());
  CHECK(encode_estimator(d) == bytes);

  std::vector<std::uint8_t> b = bytes;
  b[b.size() / 2] ^= 1;
  CHECK_THROWS_AS(decode_estimator(b), CrcMismatch);
  b = bytes;
  b[4] = 9;
  CHECK_THROWS_AS(decode_estimator(b), VersionMismatch);
  CHECK_THROWS_AS(decode_estimator({bytes.begin(), bytes.begin() + 5}), TruncatedFile);
  CHECK_THROWS_AS(decode_estimator(encode_feat1(Matrix(1, 1), 1.0)), BadMagic);

  TempDir dir("fdge");
  write_estimator(dir / "m.fdge", e);
  CHECK(read_estimator(dir / "m.fdge").parameters() == e.parameters());
}

TEST_CASE("classifier checkpoint round trip") {
  ClassifierConfig c;
  c.num_bands = 4;
  c.hidden = 5;
  c.num_classes = 3;
  c.context_left = 1;
  c.context_right = 2;
  ToyClassifier k(c, 3);
  k.set_normalization(random_vector(4, 5), std::vector<double>(4, 2.0));
  const std::vector<std::uint8_t> bytes = encode_classifier(k);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "FDCL");
  const ToyClassifier d = decode_classifier(bytes);
  CHECK(d.config() == c);
  CHECK(d.parameters() == k.parameters());
  CHECK(d.feature_mean() == k.feature_mean());
  std::vector<std::uint8_t> b = bytes;
  b[20] ^= 2;
  CHECK_THROWS_AS(decode_classifier(b), CrcMismatch);
  b = bytes;
  b[4] = 0;
  b[5] = 1;
  CHECK_THROWS_AS(decode_classifier(b), VersionMismatch);
}

TEST_CASE("config parsing") {
  const ConfigMap m = parse_config("# comment\n order = 50\n--bands=12  # trailing\n\nt60 = 0.3, 0.6\r\n");
  CHECK(m.size() == 3);
  CHECK(m.at("order") == "50");
  CHECK(m.at("bands") == "12");
  CHECK(m.at("t60") == "0.3, 0.6");
  CHECK_THROWS_AS(parse_config("order 50\n"), InvalidInput);
  CHECK_THROWS_AS(parse_config("= 3\n"), InvalidInput);
  CHECK(parse_config("").empty());
  CHECK_THROWS_AS(read_config("/nonexistent/fdlp.cfg"), IoError);
}
