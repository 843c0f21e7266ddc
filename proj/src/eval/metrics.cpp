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

#include "eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "core/error.hpp"
#include "core/svd.hpp"

namespace asymrec::eval {

int recall_at_k(const std::vector<data::ItemId>& ranked, data::ItemId target,
                std::size_t k) {
  if (k == 0) throw usage_error("recall_at_k: k must be >= 1");
  const std::size_t limit = std::min(k, ranked.size());
  for (std::size_t i = 0; i < limit; ++i)
    if (ranked[i] == target) return 1;
  return 0;
}

double ndcg_at_k(const std::vector<data::ItemId>& ranked, data::ItemId target,
                 std::size_t k) {
  if (k == 0) throw usage_error("ndcg_at_k: k must be >= 1");
  const std::size_t limit = std::min(k, ranked.size());
  for (std::size_t i = 0; i < limit; ++i)
    if (ranked[i] == target)
      return 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return 0.0;
}

double effective_rank(const num::Matrix& z) {
  if (z.empty()) throw usage_error("effective_rank: empty matrix");
  const auto sigma = num::svd_values(z);
  double total = 0.0;
  for (double s : sigma) total += s;
  if (total <= 0.0)
    throw numeric_error("effective_rank: all-zero matrix has no spectrum");
  double entropy = 0.0;
  for (double s : sigma) {
    if (s <= 0.0) continue;  // 0 * ln 0 treated as 0
    const double p = s / total;
    entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

std::vector<std::pair<data::ItemId, double>> rrf_fuse(
    const std::vector<data::ItemId>& list_a,
    const std::vector<data::ItemId>& list_b, double k0) {
  std::map<data::ItemId, double> scores;
  for (std::size_t i = 0; i < list_a.size(); ++i)
    scores[list_a[i]] += 1.0 / (k0 + static_cast<double>(i + 1));
  for (std::size_t i = 0; i < list_b.size(); ++i)
    scores[list_b[i]] += 1.0 / (k0 + static_cast<double>(i + 1));
  std::vector<std::pair<data::ItemId, double>> out(scores.begin(),
                                                   scores.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

}  // namespace asymrec::eval
