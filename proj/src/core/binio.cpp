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

#include "core/binio.hpp"

namespace asymrec::io {

std::uint64_t byte_sum(const void* data, std::size_t n) {
  const auto* b = static_cast<const std::uint8_t*>(data);
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < n; ++i) s += b[i];
  return s;
}

std::uint64_t byte_sum_file(const std::string& path) {
  ByteReader r = ByteReader::from_file(path);
  return byte_sum(r.data(), r.size());
}

void ByteWriter::write_file(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw data_error("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(buf_.data()),
          static_cast<std::streamsize>(buf_.size()));
  if (!f) throw data_error("write failed: " + path);
}

ByteReader ByteReader::from_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw data_error("cannot open: " + path);
  f.seekg(0, std::ios::end);
  const auto len = f.tellg();
  f.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(len));
  f.read(reinterpret_cast<char*>(buf.data()),
         static_cast<std::streamsize>(buf.size()));
  if (!f) throw data_error("read failed: " + path);
  return ByteReader(std::move(buf), path);
}

}  // namespace asymrec::io
