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

#include "rec/model.hpp"

namespace asymrec::rec {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_ndcg10 = 0.0;
  bool improved = false;
};

struct TrainRecResult {
  RecModel model;  // parameters restored from the best epoch
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_val_ndcg10 = 0.0;
};

/// SGD-with-momentum training with teacher-forced targets over each
/// user's training prefix, early-stopped on validation NDCG@10.
/// `codes` may be empty only for the continuous_output variant.
/// codebook_size_hint pins K when known (from the MHQ snapshot);
/// otherwise K is inferred as the largest code index + 1.
TrainRecResult train_rec(const RecConfig& cfg,
                         const data::InteractionDataset& dataset,
                         const data::EmbeddingTable& emb,
                         const std::vector<mhq::SemanticCode>& codes,
                         bool verbose = false,
                         std::size_t codebook_size_hint = 0);

}  // namespace asymrec::rec
