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
#include <functional>
#include <string>
#include <vector>

#include "core/matrix.hpp"
#include "data/embeddings.hpp"

namespace asymrec::mhq {

/// Multi-faceted hierarchical quantizer configuration: a learnable
/// projection to proj_dim, split into `subspaces` facets, each quantized
/// by a depth-`levels` residual cascade over codebooks of size
/// codebook_size. Codebooks learn by EMA; the projection learns by
/// gradient descent on the regularized reconstruction objective.
struct MhqConfig {
  std::size_t proj_dim = 512;       // D
  std::size_t subspaces = 32;       // M
  std::size_t levels = 2;           // L
  std::size_t codebook_size = 256;  // K
  double lambda_bal = 0.01;
  double lambda_reg = 0.01;
  double ema_gamma = 0.99;
  double lr = 0.001;
  std::size_t epochs = 50;
  std::size_t batch = 256;
  std::uint64_t seed = 1;

  std::size_t subspace_dim() const { return proj_dim / subspaces; }
  std::size_t code_len() const { return subspaces * levels; }
  void validate() const;
};

/// Laplace floor in centroid = ema_sum / (ema_count + kEmaEpsilon).
inline constexpr double kEmaEpsilon = 1e-6;

/// One codebook: K centroids plus its EMA accumulators. The class
/// invariant centroids == ema_sum / (ema_count + eps) is re-established
/// after every update.
struct Codebook {
  num::Matrix centroids;          // K x d_sub
  std::vector<double> ema_count;  // K
  num::Matrix ema_sum;            // K x d_sub

  void refresh_centroids();
};

struct CodebookSet {
  std::size_t input_dim = 0;  // d
  MhqConfig cfg;
  num::Matrix w_p;              // D x d
  std::vector<Codebook> books;  // cfg.subspaces * cfg.levels, m-major

  Codebook& book(std::size_t m, std::size_t l) {
    return books[m * cfg.levels + l];
  }
  const Codebook& book(std::size_t m, std::size_t l) const {
    return books[m * cfg.levels + l];
  }
};

/// Flattened index sequence {i_{m,l}}, m-major, each in [0, K).
struct SemanticCode {
  std::vector<std::uint32_t> indices;

  bool operator==(const SemanticCode& o) const { return indices == o.indices; }
};

struct QuantizeResult {
  std::vector<std::uint32_t> indices;        // L, one per level
  num::Matrix reconstruction;                // 1 x d_sub, sum of centroids
  std::vector<num::Matrix> residual_trace;   // L+1 rows, trace[0] == z
};

num::Matrix project(const CodebookSet& cb, const num::Matrix& x_row);
std::vector<num::Matrix> split_subspaces(const num::Matrix& tilde,
                                         std::size_t subspaces);
/// Greedy per-level nearest-centroid quantization; ties pick the lowest
/// index.
QuantizeResult quantize_subspace(const CodebookSet& cb, std::size_t m,
                                 const num::Matrix& z);
SemanticCode assign_code(const CodebookSet& cb, const num::Matrix& x_row);
std::vector<SemanticCode> assign_all(const CodebookSet& cb,
                                     const data::EmbeddingTable& table);

/// Per-level batch assignments feeding the EMA update: for codebook
/// (m,l), indices[j] was chosen for residual row j of `residuals`.
struct LevelAssignments {
  std::vector<std::uint32_t> indices;  // B
  num::Matrix residuals;               // B x d_sub, quantizer input residuals
};

struct BatchForward {
  num::Matrix projected;      // B x D
  num::Matrix reconstructed;  // B x D
  std::vector<LevelAssignments> levels;  // subspaces * levels, m-major
};

BatchForward forward_batch(const CodebookSet& cb, const num::Matrix& x_batch);

/// EMA codebook update from one batch's assignments. Unassigned codes
/// still decay; every centroid is recomputed as sum/(count+eps).
void ema_update(CodebookSet& cb, const BatchForward& fwd);

struct MhqLosses {
  double rec = 0.0;
  double bal = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

/// Batch losses at the current parameters:
///   rec  = mean_j || tilde_x_j - concat(z_hat_j) ||^2
///   bal  = (1/M) sum_m | E_m - mean(E) |, E_m = mean_j ||z_j^(m)||^2
///   reg  = || W_P W_P^T - I ||_F
MhqLosses losses(const CodebookSet& cb, const num::Matrix& x_batch);

/// One projection step's view of the objective: L_MHQ evaluated with the
/// reconstruction frozen (codewords are EMA-learned, so no gradient
/// reaches them), plus dL/dW_P.
struct ProjectionStep {
  MhqLosses losses;
  num::Matrix w_grad;
};

ProjectionStep projection_loss_and_grad(const CodebookSet& cb,
                                        const num::Matrix& x_batch,
                                        const num::Matrix& reconstruction);

struct EpochLog {
  MhqLosses mean_losses;
  std::size_t reseeded_codes = 0;
};

struct TrainResult {
  CodebookSet codebooks;
  std::vector<EpochLog> log;
};

/// Called after every completed training step (post EMA update).
using StepObserver =
    std::function<void(const CodebookSet&, std::size_t epoch,
                       std::size_t step)>;

TrainResult train_mhq(const MhqConfig& cfg, const data::EmbeddingTable& table,
                      const StepObserver& observer = nullptr);

/// Per-(m,l) fraction of codes selected at least once over the table.
std::vector<double> codebook_utilization(const CodebookSet& cb,
                                         const data::EmbeddingTable& table);

struct CollisionReport {
  std::size_t n_items = 0;
  std::size_t unique_count = 0;
  std::vector<std::vector<std::uint32_t>> groups;  // item ids sharing a code
};

CollisionReport collision_report(const std::vector<SemanticCode>& codes);

// Snapshot file: "MHQ1" magic, u32 LE D, M, L, K, d; then W_P and each
// codebook's centroids, counts and sums as f64 LE; byte-sum trailer over
// everything after the magic.
void save_codebooks(const CodebookSet& cb, const std::string& path);
CodebookSet load_codebooks(const std::string& path);

// Codes export: one line per item, `item_id<TAB>i11 i12 ... iML`.
void write_codes_file(const std::vector<SemanticCode>& codes,
                      const std::string& path);
std::vector<SemanticCode> read_codes_file(const std::string& path);

void write_collision_report(const CollisionReport& report,
                            const std::string& path);

}  // namespace asymrec::mhq
