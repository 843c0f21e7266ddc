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

#include "data/synthetic.hpp"

#include <cmath>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace asymrec::data {

void SynthConfig::validate() const {
  if (n_items == 0) throw usage_error("synth: n_items must be positive");
  if (dim == 0) throw usage_error("synth: dim must be positive");
  if (cluster_count == 0 || cluster_count > n_items)
    throw usage_error("synth: cluster_count must be in [1, n_items]");
  if (seq_len_min < 1 || seq_len_max < seq_len_min)
    throw usage_error("synth: bad sequence length range");
  if (stay_prob < 0.0 || stay_prob > 1.0)
    throw usage_error("synth: stay_prob must be in [0, 1]");
}

SynthOutput synth_dataset(const SynthConfig& cfg) {
  cfg.validate();
  num::Rng rng(cfg.seed);
  SynthOutput out;

  // Cluster centers, then items scattered around a round-robin cluster
  // assignment so every cluster is populated.
  num::Matrix centers(cfg.cluster_count, cfg.dim);
  for (std::size_t i = 0; i < centers.size(); ++i)
    centers.data()[i] = rng.normal(0.0, cfg.center_scale);

  out.embeddings.n_items = cfg.n_items;
  out.embeddings.dim = cfg.dim;
  out.embeddings.matrix = num::Matrix(cfg.n_items, cfg.dim);
  out.item_cluster.resize(cfg.n_items);
  out.row_norms.resize(cfg.n_items);
  std::vector<std::vector<ItemId>> members(cfg.cluster_count);
  for (std::size_t it = 0; it < cfg.n_items; ++it) {
    const std::size_t c = it % cfg.cluster_count;
    out.item_cluster[it] = c;
    members[c].push_back(static_cast<ItemId>(it));
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < cfg.dim; ++j) {
      const double v = centers.at(c, j) + rng.normal(0.0, cfg.noise_scale);
      out.embeddings.matrix.at(it, j) = v;
      norm_sq += v * v;
    }
    out.row_norms[it] = std::sqrt(norm_sq);
  }

  // Cluster-preferential random walks.
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    const std::size_t len =
        cfg.seq_len_min +
        static_cast<std::size_t>(
            rng.below(cfg.seq_len_max - cfg.seq_len_min + 1));
    const std::size_t home = static_cast<std::size_t>(
        rng.below(cfg.cluster_count));
    std::vector<ItemId> items;
    items.reserve(len);
    for (std::size_t t = 0; t < len; ++t) {
      std::size_t c = home;
      if (rng.uniform() >= cfg.stay_prob)
        c = static_cast<std::size_t>(rng.below(cfg.cluster_count));
      const auto& pool = members[c];
      items.push_back(pool[rng.below(pool.size())]);
    }
    out.interactions.users.emplace_back(static_cast<UserId>(u),
                                        std::move(items));
    out.emitted_interactions += len;
  }
  return out;
}

}  // namespace asymrec::data
