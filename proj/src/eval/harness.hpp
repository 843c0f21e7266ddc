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

#include <optional>
#include <string>

#include "eval/metrics.hpp"
#include "rec/model.hpp"

namespace asymrec::eval {

enum class Split { train, valid, test };
std::optional<Split> split_from_name(const std::string& name);
const char* split_name(Split s);

struct BinRecall {
  std::uint64_t low = 0;   // smallest count in the bin
  std::uint64_t high = 0;  // largest count (inclusive); max for the top bin
  double recall10 = 0.0;
  std::size_t users = 0;  // users whose target fell in this bin
};

struct MetricReport {
  double recall5 = 0.0;
  double recall10 = 0.0;
  double ndcg5 = 0.0;
  double ndcg10 = 0.0;
  std::size_t users = 0;
  std::vector<BinRecall> bins;  // empty unless binned eval requested
  std::optional<double> effective_rank;  // set by the spectrum export
};

/// Per-user ranked predictions, for export and fusion.
struct PredictionList {
  std::vector<std::pair<data::UserId, std::vector<data::ItemId>>> users;
};

/// Full-catalog evaluation of the leave-last-out protocol. Contexts per
/// split: train predicts the last training item from the preceding
/// prefix (users with shorter prefixes are skipped), valid predicts the
/// validation item from the training prefix, test predicts the held-out
/// test item from everything before it. When `bins` is given, per-bin
/// recall@10 over target frequency is attached to the report.
struct EvaluateOptions {
  Split split = Split::test;
  std::size_t top_k = 100;  // prediction list depth
  const data::FrequencyBins* bins = nullptr;
};

struct EvaluateResult {
  MetricReport report;
  PredictionList predictions;
};

EvaluateResult evaluate(const rec::RecModel& model,
                        const data::InteractionDataset& ds,
                        const data::EmbeddingTable& emb,
                        const std::vector<mhq::SemanticCode>& codes,
                        const EvaluateOptions& opts = {});

/// Mean-pooled input-representation retrieval (1 positive vs `negatives`
/// seeded uniform negatives, cosine similarity), aggregated as recall@10
/// per target-frequency bin. `reps` holds one representation row per
/// item (model input representations, by whatever input module).
std::vector<BinRecall> binned_input_retrieval(
    const num::Matrix& reps, const data::InteractionDataset& ds,
    const data::FrequencyBins& bins, std::size_t negatives,
    std::uint64_t seed, std::size_t* warned_small_catalog = nullptr);

/// Input representations for every catalog item under the model's input
/// module (MSP output, single-expert output, or mean code embedding).
num::Matrix input_representations(const rec::RecModel& model,
                                  const data::EmbeddingTable& emb,
                                  const std::vector<mhq::SemanticCode>& codes);

/// Hidden states used by the collapse diagnostic: the final-position
/// decoder output (head input) for each user's split context, one row
/// per user.
num::Matrix final_hidden_states(const rec::RecModel& model,
                                const data::InteractionDataset& ds,
                                const data::EmbeddingTable& emb,
                                const std::vector<mhq::SemanticCode>& codes,
                                Split split = Split::test);

// Report / plot-data files.
void write_report(const MetricReport& report, const std::string& path);
void write_bin_csv(const std::vector<BinRecall>& bins,
                   const std::string& path);
void write_spectrum_csv(const std::vector<double>& singular_values,
                        const std::string& path);
void write_predictions(const PredictionList& preds, const std::string& path);
PredictionList read_predictions(const std::string& path);

}  // namespace asymrec::eval
