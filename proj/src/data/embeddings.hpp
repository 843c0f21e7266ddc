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

#include <cstdint>
#include <string>

#include "core/matrix.hpp"

namespace asymrec::data {

/// Item-indexed table of continuous semantic embeddings. Values are held
/// as doubles in memory; the AEMB file stores 32-bit floats.
struct EmbeddingTable {
  std::size_t n_items = 0;
  std::size_t dim = 0;
  num::Matrix matrix;  // n_items x dim

  const double* item(std::size_t id) const { return matrix.row(id); }
  num::Matrix item_row(std::size_t id) const;
};

// AEMB format: "AEMB" magic, u32 LE n_items, u32 LE dim, n_items*dim
// f32 LE row-major, u64 LE byte-sum of the float payload.
EmbeddingTable load_embeddings(const std::string& path);
void save_embeddings(const EmbeddingTable& table, const std::string& path);

}  // namespace asymrec::data
