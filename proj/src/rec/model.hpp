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
#include <optional>
#include <string>
#include <vector>

#include "data/embeddings.hpp"
#include "data/interactions.hpp"
#include "mhq/quantizer.hpp"
#include "msp/projection.hpp"
#include "rec/params.hpp"

namespace asymrec::rec {

/// Input/output wiring of the recommender. `full` is the shipped model:
/// continuous embeddings in through the gated expert mixture, M*L
/// discrete classification heads out. The others are ablations.
enum class Variant : std::uint32_t {
  full = 0,
  single_expert = 1,     // capacity-matched ungated input projection
  discrete_input = 2,    // mean of learned code embeddings as input
  continuous_output = 3  // regression head, nearest-neighbor retrieval
};

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(const std::string& name);

struct RecConfig {
  std::size_t hidden_dim = 448;  // d_m
  std::size_t layers = 2;        // decoder layers
  std::size_t heads = 8;
  std::size_t max_len = 50;
  double dropout = 0.1;
  double lr = 0.003;
  double momentum = 0.9;
  std::size_t batch = 256;
  std::size_t max_epochs = 100;
  std::size_t patience = 20;
  std::uint64_t seed = 1;
  bool per_position = true;  // teacher-forced targets at every position
  Variant variant = Variant::full;
  std::size_t experts = 3;

  void validate() const;
  std::size_t head_dim() const { return hidden_dim / heads; }
  std::size_t ffn_dim() const { return 4 * hidden_dim; }
};

/// Dataset-bound dimensions.
struct ModelDims {
  std::size_t input_dim = 0;      // d
  std::size_t code_len = 0;       // M*L
  std::size_t codebook_size = 0;  // K
};

struct RecModel {
  RecConfig cfg;
  ModelDims dims;
  ParamStore params;

  msp::MspConfig msp_cfg() const;
  msp::SingleExpertConfig single_expert_cfg() const;
};

/// Fresh model with seeded initialization.
RecModel build_model(const RecConfig& cfg, const ModelDims& dims);

/// Keeps the most recent max_len entries.
std::vector<data::ItemId> truncate_context(const std::vector<data::ItemId>& items,
                                           std::size_t max_len);

/// Per-step dropout mask source; null means no dropout (evaluation).
struct DropoutState {
  num::Rng* rng = nullptr;
  double rate = 0.0;
};

/// Decoder trunk on the tape: input module -> positions -> pre-norm
/// causal decoder layers -> final layer norm. Result is T x d_m.
/// `codes` supplies per-item semantic codes and is required by the
/// discrete_input variant (ignored otherwise).
num::Tape::Var encode_on_tape(num::Tape& tape, const VarMap& vm,
                              const RecModel& model,
                              const data::EmbeddingTable& emb,
                              const std::vector<mhq::SemanticCode>* codes,
                              const std::vector<data::ItemId>& items,
                              DropoutState dropout = {});

/// Value-only convenience wrapper around encode_on_tape.
num::Matrix encode_sequence(const RecModel& model,
                            const data::EmbeddingTable& emb,
                            const std::vector<mhq::SemanticCode>* codes,
                            const std::vector<data::ItemId>& items);

/// One head's logits on the tape (rows x K).
num::Tape::Var head_logits_on_tape(num::Tape& tape, const VarMap& vm,
                                   std::size_t head_index,
                                   num::Tape::Var hidden);

/// All M*L head logit rows for a single hidden state (code_len x K).
num::Matrix head_logits(const RecModel& model, const num::Matrix& hidden_row);

/// Regression head output (rows x d), continuous_output variant.
num::Tape::Var regression_on_tape(num::Tape& tape, const VarMap& vm,
                                  num::Tape::Var hidden);

struct ScoredCandidates {
  std::vector<std::pair<data::ItemId, double>> ranked;  // score desc, id asc

  std::vector<data::ItemId> ids(std::size_t k = 0) const;
};

/// Exhaustive catalog scoring for the context's next item. For discrete
/// heads, score(i) = sum over heads of log p(code_i); restricting the sum
/// to catalog codes realizes constrained decoding exactly. For the
/// continuous variant, score(i) = cosine(prediction, x_i).
ScoredCandidates score_catalog(const RecModel& model,
                               const data::EmbeddingTable& emb,
                               const std::vector<mhq::SemanticCode>& codes,
                               const std::vector<data::ItemId>& context);

/// Mean cross-entropy per (position, head) for a batch of sequences,
/// value-only; exposed for tests.
double ce_loss_value(const RecModel& model, const data::EmbeddingTable& emb,
                     const std::vector<mhq::SemanticCode>& codes,
                     const std::vector<std::vector<data::ItemId>>& batch);

/// Tape construction of the batch training loss (any variant).
/// Sequences must already be truncated; every sequence contributes
/// targets at each position (or only the last when !per_position).
num::Tape::Var batch_loss_on_tape(num::Tape& tape, const VarMap& vm,
                                  const RecModel& model,
                                  const data::EmbeddingTable& emb,
                                  const std::vector<mhq::SemanticCode>* codes,
                                  const std::vector<std::vector<data::ItemId>>& inputs,
                                  const std::vector<std::vector<data::ItemId>>& targets,
                                  DropoutState dropout = {});

}  // namespace asymrec::rec
