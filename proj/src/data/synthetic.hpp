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

#include "data/embeddings.hpp"
#include "data/interactions.hpp"

namespace asymrec::data {

/// Desk-scale fixture generator. Items are drawn around Gaussian cluster
/// centers; each user starts in one cluster and walks preferring items
/// from that cluster, so next-item structure is learnable by a correct
/// model and invisible to a broken one.
struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_items = 1000;
  std::size_t dim = 64;
  std::size_t n_users = 500;
  std::size_t cluster_count = 10;
  std::size_t seq_len_min = 5;
  std::size_t seq_len_max = 10;
  double stay_prob = 0.8;      // chance the next item stays in the cluster
  double center_scale = 1.0;   // cluster center std per coordinate
  double noise_scale = 0.15;   // within-cluster std per coordinate

  void validate() const;
};

struct SynthOutput {
  EmbeddingTable embeddings;
  RawInteractions interactions;
  std::vector<std::size_t> item_cluster;  // generator's ground truth
  std::vector<double> row_norms;          // recorded for verification
  std::size_t emitted_interactions = 0;
};

SynthOutput synth_dataset(const SynthConfig& cfg);

}  // namespace asymrec::data
