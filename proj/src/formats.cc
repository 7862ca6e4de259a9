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


#include "fdlp/formats.h"

#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include <zlib.h>

#include "bytes.h"
#include "fdlp/error.h"

namespace fdlp {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading", path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed", path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("write failed", path.string());
}

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace detail

namespace {

using detail::ByteReader;
using detail::ByteWriter;

void append_crc(ByteWriter& w) {
  w.u32(detail::crc32_of(w.buffer().data(), w.size()));
}

// Validates magic, version and the CRC trailer; returns a reader positioned
// after the version field and limited to the body.
ByteReader open_container(const std::vector<std::uint8_t>& bytes,
                          const std::string& magic, std::uint16_t version) {
  ByteReader head(bytes.data(), bytes.size(), magic);
  head.need(magic.size(), "magic");
  if (head.bytes(magic.size(), "magic") != magic)
    throw BadMagic(magic + ": bad magic");
  const std::uint16_t found = head.u16("version");
  if (found != version) throw VersionMismatch(magic, found, version);
  head.need(4, "CRC trailer");
  const std::size_t body = bytes.size() - 4;
  ByteReader tail(bytes.data() + body, 4, magic);
  const std::uint32_t stored = tail.u32("CRC trailer");
  if (stored != detail::crc32_of(bytes.data(), body))
    throw CrcMismatch(magic + ": CRC mismatch");
  ByteReader r(bytes.data(), body, magic);
  r.skip(magic.size() + 2, "header");
  return r;
}

void expect_end(const ByteReader& r, const std::string& what) {
  if (r.remaining() != 0)
    throw FormatError(what + ": " + std::to_string(r.remaining()) +
                      " unexpected trailing bytes");
}

void write_tensors(ByteWriter& w, const std::vector<Tensor>& params) {
  for (const Tensor& t : params)
    for (double v : t.values) w.f64(v);
}

std::vector<Tensor> read_tensors(ByteReader& r, std::vector<Tensor> shapes) {
  for (Tensor& t : shapes)
    for (double& v : t.values) v = r.f64("parameter tensor");
  return shapes;
}

std::vector<double> read_f64s(ByteReader& r, std::size_t n, const std::string& f) {
  std::vector<double> v(n);
  for (double& x : v) x = r.f64(f);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_feat1(const Matrix& data, double frame_rate) {
  if (data.rows() > UINT32_MAX || data.cols() > UINT32_MAX)
    throw InvalidInput("FEAT1: matrix too large");
  if (!(frame_rate > 0.0)) throw InvalidInput("FEAT1: frame rate must be > 0");
  ByteWriter w;
  w.bytes("FEAT1");
  w.u16(kFeat1Version);
  w.u32(static_cast<std::uint32_t>(data.rows()));
  w.u32(static_cast<std::uint32_t>(data.cols()));
  w.f32(static_cast<float>(frame_rate));
  for (double v : data.values()) w.f32(static_cast<float>(v));
  append_crc(w);
  return std::move(w.buffer());
}

FeatureMatrix decode_feat1(const std::vector<std::uint8_t>& bytes) {
  // Size checks come before the CRC so a short file reports truncation.
  ByteReader pre(bytes.data(), bytes.size(), "FEAT1");
  if (pre.remaining() >= 5 && pre.bytes(5, "magic") == "FEAT1" &&
      pre.remaining() >= 2 && pre.u16("version") == kFeat1Version) {
    const std::uint32_t frames = pre.u32("num_frames");
    const std::uint32_t bands = pre.u32("num_bands");
    pre.skip(4, "frame_rate");
    pre.need(std::size_t{frames} * bands * 4, "payload");
    pre.skip(std::size_t{frames} * bands * 4, "payload");
    pre.need(4, "CRC trailer");
  }
  ByteReader r = open_container(bytes, "FEAT1", kFeat1Version);
  const std::uint32_t frames = r.u32("num_frames");
  const std::uint32_t bands = r.u32("num_bands");
  const float rate = r.f32("frame_rate");
  FeatureMatrix f;
  f.frame_rate = rate;
  f.data = Matrix(frames, bands);
  for (double& v : f.data.values()) v = r.f32("payload");
  expect_end(r, "FEAT1");
  return f;
}

void write_feat1(const std::filesystem::path& path, const FeatureMatrix& f) {
  detail::write_file(path, encode_feat1(f.data, f.frame_rate));
}

FeatureMatrix read_feat1(const std::filesystem::path& path) {
  return decode_feat1(detail::read_file(path));
}

void write_envelopes(const std::filesystem::path& path,
                     const SubbandEnvelopes& env) {
  detail::write_file(path, encode_feat1(env.data.transposed(), env.envelope_rate));
}

SubbandEnvelopes read_envelopes(const std::filesystem::path& path) {
  const FeatureMatrix f = read_feat1(path);
  SubbandEnvelopes env;
  env.data = f.data.transposed();
  env.envelope_rate = f.frame_rate;
  env.segment_duration = static_cast<double>(env.data.cols()) / f.frame_rate;
  return env;
}

std::vector<std::uint8_t> encode_estimator(const GainEstimator& estimator) {
  const EstimatorConfig& c = estimator.config();
  ByteWriter cfg;
  cfg.u32(static_cast<std::uint32_t>(c.num_bands));
  cfg.u32(static_cast<std::uint32_t>(c.layers.size()));
  for (const ConvLayerSpec& s : c.layers) {
    cfg.u32(static_cast<std::uint32_t>(s.width));
    cfg.u32(static_cast<std::uint32_t>(s.out_channels));
    cfg.u8(static_cast<std::uint8_t>(s.activation));
  }
  cfg.i32(c.band_mix_layer);
  cfg.f64(c.log_gain_limit);

  ByteWriter w;
  w.bytes("FDGE");
  w.u16(kFdgeVersion);
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  w.buffer().insert(w.buffer().end(), cfg.buffer().begin(), cfg.buffer().end());
  write_tensors(w, estimator.parameters());
  for (double v : estimator.norm_mean()) w.f64(v);
  for (double v : estimator.norm_std()) w.f64(v);
  append_crc(w);
  return std::move(w.buffer());
}

GainEstimator decode_estimator(const std::vector<std::uint8_t>& bytes) {
  ByteReader r = open_container(bytes, "FDGE", kFdgeVersion);
  const std::uint32_t cfg_len = r.u32("config length");
  const std::size_t cfg_start = r.position();
  EstimatorConfig c;
  c.num_bands = r.u32("num_bands");
  const std::uint32_t layers = r.u32("num_layers");
  if (layers > 1024) throw FormatError("FDGE: implausible layer count");
  c.layers.clear();
  for (std::uint32_t l = 0; l < layers; ++l) {
    ConvLayerSpec s;
    s.width = r.u32("layer width");
    s.out_channels = r.u32("layer channels");
    const std::uint8_t act = r.u8("layer activation");
    if (act > static_cast<std::uint8_t>(Activation::kLogGainClamp))
      throw FormatError("FDGE: unknown activation tag " + std::to_string(act));
    s.activation = static_cast<Activation>(act);
    c.layers.push_back(s);
  }
  c.band_mix_layer = r.i32("band mix layer");
  c.log_gain_limit = r.f64("log gain limit");
  if (r.position() - cfg_start != cfg_len)
    throw FormatError("FDGE: config block length mismatch");
  try {
    validate(c);
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("FDGE: ") + e.what());
  }
  const GainEstimator shape_of(c, 0);
  std::vector<Tensor> params = read_tensors(r, shape_of.parameters());
  std::vector<double> mean = read_f64s(r, c.num_bands, "normalization mean");
  std::vector<double> sd = read_f64s(r, c.num_bands, "normalization std");
  expect_end(r, "FDGE");
  return GainEstimator(c, std::move(params), std::move(mean), std::move(sd));
}

void write_estimator(const std::filesystem::path& path,
                     const GainEstimator& estimator) {
  detail::write_file(path, encode_estimator(estimator));
}

GainEstimator read_estimator(const std::filesystem::path& path) {
  return decode_estimator(detail::read_file(path));
}

std::vector<std::uint8_t> encode_classifier(const ToyClassifier& classifier) {
  const ClassifierConfig& c = classifier.config();
  ByteWriter cfg;
  cfg.u32(static_cast<std::uint32_t>(c.num_bands));
  cfg.u32(static_cast<std::uint32_t>(c.context_left));
  cfg.u32(static_cast<std::uint32_t>(c.context_right));
  cfg.u32(static_cast<std::uint32_t>(c.hidden));
  cfg.u32(static_cast<std::uint32_t>(c.num_classes));

  ByteWriter w;
  w.bytes("FDCL");
  w.u16(kFdclVersion);
  w.u32(static_cast<std::uint32_t>(cfg.size()));
  w.buffer().insert(w.buffer().end(), cfg.buffer().begin(), cfg.buffer().end());
  write_tensors(w, classifier.parameters());
  for (double v : classifier.feature_mean()) w.f64(v);
  for (double v : classifier.feature_std()) w.f64(v);
  append_crc(w);
  return std::move(w.buffer());
}

ToyClassifier decode_classifier(const std::vector<std::uint8_t>& bytes) {
  ByteReader r = open_container(bytes, "FDCL", kFdclVersion);
  const std::uint32_t cfg_len = r.u32("config length");
  if (cfg_len != 20) throw FormatError("FDCL: config block length mismatch");
  ClassifierConfig c;
  c.num_bands = r.u32("num_bands");
  c.context_left = r.u32("context_left");
  c.context_right = r.u32("context_right");
  c.hidden = r.u32("hidden");
  c.num_classes = r.u32("num_classes");
  if (c.num_bands > 4096 || c.hidden > (1u << 16) || c.num_classes > (1u << 16) ||
      c.context_left > 1024 || c.context_right > 1024)
    throw FormatError("FDCL: implausible config");
  std::vector<Tensor> params;
  try {
    params = read_tensors(r, ToyClassifier(c, 0).parameters());
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("FDCL: ") + e.what());
  }
  std::vector<double> mean = read_f64s(r, c.num_bands, "feature mean");
  std::vector<double> sd = read_f64s(r, c.num_bands, "feature std");
  expect_end(r, "FDCL");
  return ToyClassifier(c, std::move(params), std::move(mean), std::move(sd));
}

void write_classifier(const std::filesystem::path& path,
                      const ToyClassifier& classifier) {
  detail::write_file(path, encode_classifier(classifier));
}

ToyClassifier read_classifier(const std::filesystem::path& path) {
  return decode_classifier(detail::read_file(path));
}

}  // namespace fdlp
