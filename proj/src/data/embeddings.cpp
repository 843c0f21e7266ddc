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

#include "data/embeddings.hpp"

#include <cmath>

#include "core/binio.hpp"
#include "core/error.hpp"

namespace asymrec::data {

namespace {
constexpr char kMagic[4] = {'A', 'E', 'M', 'B'};
}

num::Matrix EmbeddingTable::item_row(std::size_t id) const {
  num::Matrix r(1, dim);
  for (std::size_t j = 0; j < dim; ++j) r.at(0, j) = matrix.at(id, j);
  return r;
}

EmbeddingTable load_embeddings(const std::string& path) {
  io::ByteReader r = io::ByteReader::from_file(path);
  const std::string magic = r.str(4);
  if (magic != std::string(kMagic, 4))
    throw data_error(path + ": bad magic at byte offset 0 (expected AEMB)");
  const std::uint32_t n_items = r.u32();
  const std::uint32_t dim = r.u32();
  if (n_items == 0 || dim == 0)
    throw data_error(path + ": header declares empty table");

  const std::size_t payload_off = r.offset();
  const std::size_t count = std::size_t(n_items) * dim;
  EmbeddingTable table;
  table.n_items = n_items;
  table.dim = dim;
  table.matrix = num::Matrix(n_items, dim);
  for (std::size_t i = 0; i < count; ++i) {
    const float v = r.f32();
    if (!std::isfinite(v))
      throw data_error(path + ": non-finite value at byte offset " +
                       std::to_string(r.offset() - 4));
    table.matrix.data()[i] = static_cast<double>(v);
  }
  const std::uint64_t declared = r.u64();
  const std::uint64_t actual =
      io::byte_sum(r.data() + payload_off, count * sizeof(float));
  if (declared != actual)
    throw data_error(path + ": payload checksum mismatch at byte offset " +
                     std::to_string(payload_off + count * sizeof(float)) +
                     " (declared " + std::to_string(declared) + ", actual " +
                     std::to_string(actual) + ")");
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  if (table.n_items == 0 || table.dim == 0)
    throw usage_error("save_embeddings: empty table");
  if (!table.matrix.all_finite())
    throw numeric_error("save_embeddings: non-finite embedding values");
  io::ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(static_cast<std::uint32_t>(table.n_items));
  w.u32(static_cast<std::uint32_t>(table.dim));
  const std::size_t payload_off = w.size();
  for (std::size_t i = 0; i < table.matrix.size(); ++i)
    w.f32(static_cast<float>(table.matrix.data()[i]));
  w.u64(io::byte_sum(w.bytes().data() + payload_off, w.size() - payload_off));
  w.write_file(path);
}

}  // namespace asymrec::data
