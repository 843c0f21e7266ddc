// Copyright 2026 The AsymRec Authors.
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

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace asymrec::io {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

/// Sum of bytes interpreted as unsigned 8-bit values, mod 2^64. The
/// checksum trailer used by every binary format in the project.
std::uint64_t byte_sum(const void* data, std::size_t n);
std::uint64_t byte_sum_file(const std::string& path);

/// Buffered little-endian writer over a growable byte vector.
class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) { raw(s.data(), s.size()); }

  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  std::size_t size() const { return buf_.size(); }

  void write_file(const std::string& path) const;

 private:
  std::vector<std::uint8_t> buf_;
};

/// Reader over an in-memory byte buffer; errors carry the byte offset.
class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> buf, std::string origin)
      : buf_(std::move(buf)), origin_(std::move(origin)) {}

  static ByteReader from_file(const std::string& path);

  std::size_t offset() const { return off_; }
  std::size_t remaining() const { return buf_.size() - off_; }

  void raw(void* out, std::size_t n) {
    if (off_ + n > buf_.size())
      throw data_error(origin_ + ": truncated at byte offset " +
                       std::to_string(off_) + " (need " + std::to_string(n) +
                       " more bytes, have " + std::to_string(remaining()) +
                       ")");
    std::memcpy(out, buf_.data() + off_, n);
    off_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  float f32() {
    float v;
    raw(&v, 4);
    return v;
  }
  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }
  std::string str(std::size_t n) {
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }

  const std::uint8_t* data() const { return buf_.data(); }
  std::size_t size() const { return buf_.size(); }
  const std::string& origin() const { return origin_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::string origin_;
  std::size_t off_ = 0;
};

}  // namespace asymrec::io
