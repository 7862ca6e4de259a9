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


// Little-endian byte buffers shared by the file formats.

#ifndef FDLP_SRC_BYTES_H_
#define FDLP_SRC_BYTES_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fdlp/error.h"

namespace fdlp::detail {

class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  std::vector<std::uint8_t>& buffer() { return buf_; }
  std::size_t size() const { return buf_.size(); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size, std::string what)
      : data_(data), size_(size), what_(std::move(what)) {}

  std::size_t remaining() const { return size_ - pos_; }
  std::size_t position() const { return pos_; }

  void need(std::size_t n, const std::string& field) const {
    if (remaining() < n)
      throw TruncatedFile(what_ + ": truncated while reading " + field);
  }
  std::string bytes(std::size_t n, const std::string& field) {
    need(n, field);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n, const std::string& field) {
    need(n, field);
    pos_ += n;
  }
  std::uint8_t u8(const std::string& f) { return static_cast<std::uint8_t>(get(1, f)); }
  std::uint16_t u16(const std::string& f) { return static_cast<std::uint16_t>(get(2, f)); }
  std::uint32_t u32(const std::string& f) { return static_cast<std::uint32_t>(get(4, f)); }
  std::int32_t i32(const std::string& f) { return static_cast<std::int32_t>(u32(f)); }
  float f32(const std::string& f) { return std::bit_cast<float>(u32(f)); }
  double f64(const std::string& f) { return std::bit_cast<double>(get(8, f)); }

 private:
  std::uint64_t get(int n, const std::string& field) {
    need(static_cast<std::size_t>(n), field);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes);
std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size);

}  // namespace fdlp::detail

#endif  // FDLP_SRC_BYTES_H_
