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
#include <vector>

#include "core/matrix.hpp"
#include "data/interactions.hpp"

namespace asymrec::eval {

/// 1 iff the single relevant target appears in the top k.
int recall_at_k(const std::vector<data::ItemId>& ranked, data::ItemId target,
                std::size_t k);

/// Single-relevant-item NDCG: 1/log2(1+rank) if rank <= k else 0
/// (1-based rank; the ideal DCG is 1).
double ndcg_at_k(const std::vector<data::ItemId>& ranked, data::ItemId target,
                 std::size_t k);

/// Exponential of the Shannon entropy of the normalized singular-value
/// distribution of z. Errors on an all-zero matrix.
double effective_rank(const num::Matrix& z);

/// Reciprocal rank fusion of two ranked lists: fused score per item is
/// the sum over lists of 1/(k0 + rank) with 1-based ranks; items absent
/// from a list contribute nothing from it. Ties break by ascending id.
std::vector<std::pair<data::ItemId, double>> rrf_fuse(
    const std::vector<data::ItemId>& list_a,
    const std::vector<data::ItemId>& list_b, double k0 = 50.0);

}  // namespace asymrec::eval
