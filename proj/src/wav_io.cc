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


#include "fdlp/wav_io.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "bytes.h"
#include "fdlp/error.h"

namespace fdlp {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

}  // namespace

Signal decode_wav(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes.data(), bytes.size(), "WAV");
  if (r.remaining() < 12) throw TruncatedFile("WAV: missing RIFF header");
  if (r.bytes(4, "RIFF id") != "RIFF") throw BadMagic("WAV: not a RIFF file");
  r.skip(4, "RIFF size");
  if (r.bytes(4, "WAVE id") != "WAVE") throw BadMagic("WAV: not a WAVE file");

  std::optional<FmtChunk> fmt;
  while (r.remaining() >= 8) {
    const std::string id = r.bytes(4, "chunk id");
    const std::uint32_t size = r.u32("chunk size");
    if (id == "fmt ") {
      if (size < 16 || r.remaining() < size)
        throw TruncatedFile("WAV: truncated fmt chunk");
      FmtChunk f;
      f.format = r.u16("format tag");
      f.channels = r.u16("channels");
      f.sample_rate = r.u32("sample rate");
      r.skip(6, "byte rate and block align");
      f.bits = r.u16("bits per sample");
      std::size_t used = 16;
      if (f.format == kFormatExtensible) {
        if (size < 40) throw TruncatedFile("WAV: truncated extensible fmt chunk");
        r.skip(8, "extension header");
        f.format = r.u16("sub-format");
        r.skip(14, "sub-format GUID");
        used = 40;
      }
      const std::size_t pad = (size & 1u) && r.remaining() > size - used ? 1 : 0;
      r.skip(size - used + pad, "fmt chunk");
      fmt = f;
    } else if (id == "data") {
      if (!fmt) throw TruncatedFile("WAV: data chunk before fmt chunk");
      if (fmt->channels != 1) throw MultiChannelAudio(fmt->channels);
      if (fmt->sample_rate == 0 || fmt->sample_rate > INT32_MAX)
        throw FormatError("WAV: invalid sample rate");
      const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
      const bool f32 = fmt->format == kFormatFloat && fmt->bits == 32;
      if (!pcm16 && !f32)
        throw UnsupportedEncoding("WAV: unsupported encoding (format " +
                                  std::to_string(fmt->format) + ", " +
                                  std::to_string(fmt->bits) + " bits)");
      const std::size_t width = pcm16 ? 2 : 4;
      if (r.remaining() < size) throw TruncatedFile("WAV: truncated data chunk");
      if (size % width != 0) throw FormatError("WAV: partial sample in data chunk");
      std::vector<double> x(size / width);
      for (double& v : x) {
        if (pcm16)
          v = static_cast<std::int16_t>(r.u16("sample")) / 32768.0;
        else
          v = r.f32("sample");
      }
      return Signal(std::move(x), static_cast<int>(fmt->sample_rate));
    } else {
      if (r.remaining() < size) throw TruncatedFile("WAV: truncated " + id + " chunk");
      const std::size_t pad = (size & 1u) && r.remaining() > size ? 1 : 0;
      r.skip(size + pad, id);
    }
  }
  throw TruncatedFile(fmt ? "WAV: missing data chunk" : "WAV: missing fmt chunk");
}

Signal read_wav(const std::filesystem::path& path) {
  try {
    return decode_wav(detail::read_file(path));
  } catch (const FormatError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw FormatError(std::string(e.what()) + ": " + path.string());
  }
}

std::vector<std::uint8_t> encode_wav(const Signal& signal, WavEncoding encoding) {
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t block = bits / 8;
  const std::size_t data_size = signal.size() * block;
  if (data_size > UINT32_MAX - 44) throw InvalidInput("WAV: signal too long");
  const auto sr = static_cast<std::uint32_t>(signal.sample_rate());

  detail::ByteWriter w;
  w.bytes("RIFF");
  w.u32(static_cast<std::uint32_t>(36 + data_size));
  w.bytes("WAVE");
  w.bytes("fmt ");
  w.u32(16);
  w.u16(pcm16 ? kFormatPcm : kFormatFloat);
  w.u16(1);
  w.u32(sr);
  w.u32(sr * block);
  w.u16(static_cast<std::uint16_t>(block));
  w.u16(bits);
  w.bytes("data");
  w.u32(static_cast<std::uint32_t>(data_size));
  for (double v : signal.samples()) {
    if (pcm16) {
      const double q = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
      w.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    } else {
      w.f32(static_cast<float>(v));
    }
  }
  return std::move(w.buffer());
}

void write_wav(const std::filesystem::path& path, const Signal& signal,
               WavEncoding encoding) {
  detail::write_file(path, encode_wav(signal, encoding));
}

}  // namespace fdlp
