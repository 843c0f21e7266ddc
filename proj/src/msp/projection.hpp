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

#include <cstddef>

#include "rec/params.hpp"

namespace asymrec::msp {

/// Gated mixture of 2-layer perceptrons mapping continuous item
/// embeddings (dim d) into the recommender's hidden space (dim d_m).
/// All experts are evaluated densely; the gate is a bias-free linear map
/// followed by softmax.
struct MspConfig {
  std::size_t experts = 3;
  std::size_t input_dim = 0;   // d
  std::size_t hidden_dim = 0;  // per-expert width; defaults to out_dim
  std::size_t out_dim = 0;     // d_m

  std::size_t hidden() const { return hidden_dim ? hidden_dim : out_dim; }
  void validate() const;
};

// Parameter names under `prefix` (default "msp"):
//   <p>.gate     E x d
//   <p>.e<i>.w1  hidden x d      <p>.e<i>.b1  1 x hidden
//   <p>.e<i>.w2  out x hidden    <p>.e<i>.b2  1 x out
void init_params(const MspConfig& cfg, rec::ParamStore& store, num::Rng& rng,
                 const std::string& prefix = "msp");

/// Tape forward: x is T x d, result is T x out_dim.
num::Tape::Var forward(num::Tape& tape, const rec::VarMap& vm,
                       const MspConfig& cfg, num::Tape::Var x,
                       const std::string& prefix = "msp");

/// Gate weights alpha for a batch of inputs (T x E), value-only.
num::Matrix gate(const rec::ParamStore& store, const MspConfig& cfg,
                 const num::Matrix& x, const std::string& prefix = "msp");

/// Value-only forward for evaluation paths.
num::Matrix apply(const rec::ParamStore& store, const MspConfig& cfg,
                  const num::Matrix& x, const std::string& prefix = "msp");

/// Capacity-matched ablation: one expert whose hidden width is
/// experts * out_dim, no gating. Shares the 2-layer shape with the
/// mixture experts. Parameter names: <p>.w1/.b1/.w2/.b2.
struct SingleExpertConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;  // E * d_m for parameter parity
  std::size_t out_dim = 0;

  void validate() const;
};

void init_single_expert_params(const SingleExpertConfig& cfg,
                               rec::ParamStore& store, num::Rng& rng,
                               const std::string& prefix = "se");
num::Tape::Var single_expert_forward(num::Tape& tape, const rec::VarMap& vm,
                                     const SingleExpertConfig& cfg,
                                     num::Tape::Var x,
                                     const std::string& prefix = "se");
num::Matrix single_expert_apply(const rec::ParamStore& store,
                                const SingleExpertConfig& cfg,
                                const num::Matrix& x,
                                const std::string& prefix = "se");

}  // namespace asymrec::msp
