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

#include "msp/projection.hpp"

namespace asymrec::msp {

void MspConfig::validate() const {
  if (experts == 0) throw usage_error("msp: experts must be positive");
  if (input_dim == 0 || out_dim == 0)
    throw usage_error("msp: input_dim and out_dim must be positive");
}

void SingleExpertConfig::validate() const {
  if (input_dim == 0 || out_dim == 0 || hidden_dim == 0)
    throw usage_error("single expert: dimensions must be positive");
}

namespace {

std::string expert_key(const std::string& prefix, std::size_t e,
                       const char* leaf) {
  return prefix + ".e" + std::to_string(e) + "." + leaf;
}

// 2-layer perceptron: gelu(x W1^T + b1) W2^T + b2.
num::Tape::Var mlp2(num::Tape& tape, num::Tape::Var x, num::Tape::Var w1,
                    num::Tape::Var b1, num::Tape::Var w2, num::Tape::Var b2) {
  auto h = tape.gelu(tape.add_row_broadcast(tape.matmul_nt(x, w1), b1));
  return tape.add_row_broadcast(tape.matmul_nt(h, w2), b2);
}

}  // namespace

void init_params(const MspConfig& cfg, rec::ParamStore& store, num::Rng& rng,
                 const std::string& prefix) {
  cfg.validate();
  const std::size_t h = cfg.hidden();
  store.add(prefix + ".gate", rec::glorot(cfg.experts, cfg.input_dim, rng));
  for (std::size_t e = 0; e < cfg.experts; ++e) {
    store.add(expert_key(prefix, e, "w1"),
              rec::glorot(h, cfg.input_dim, rng));
    store.add(expert_key(prefix, e, "b1"), num::Matrix(1, h));
    store.add(expert_key(prefix, e, "w2"), rec::glorot(cfg.out_dim, h, rng));
    store.add(expert_key(prefix, e, "b2"), num::Matrix(1, cfg.out_dim));
  }
}

num::Tape::Var forward(num::Tape& tape, const rec::VarMap& vm,
                       const MspConfig& cfg, num::Tape::Var x,
                       const std::string& prefix) {
  auto alpha = tape.softmax_rows(tape.matmul_nt(x, vm.at(prefix + ".gate")));
  num::Tape::Var mix;
  for (std::size_t e = 0; e < cfg.experts; ++e) {
    auto out = mlp2(tape, x, vm.at(expert_key(prefix, e, "w1")),
                    vm.at(expert_key(prefix, e, "b1")),
                    vm.at(expert_key(prefix, e, "w2")),
                    vm.at(expert_key(prefix, e, "b2")));
    auto weighted = tape.scale_rows(out, tape.slice_cols(alpha, e, 1));
    mix = (e == 0) ? weighted : tape.add(mix, weighted);
  }
  return mix;
}

num::Matrix gate(const rec::ParamStore& store, const MspConfig& cfg,
                 const num::Matrix& x, const std::string& prefix) {
  cfg.validate();
  num::Tape tape;
  auto logits = tape.matmul_nt(tape.constant_ref(&x),
                               tape.constant_ref(&store.get(prefix + ".gate")));
  return tape.value(tape.softmax_rows(logits));
}

num::Matrix apply(const rec::ParamStore& store, const MspConfig& cfg,
                  const num::Matrix& x, const std::string& prefix) {
  num::Tape tape;
  auto vm = rec::register_params(tape, store);
  return tape.value(forward(tape, vm, cfg, tape.constant_ref(&x), prefix));
}

void init_single_expert_params(const SingleExpertConfig& cfg,
                               rec::ParamStore& store, num::Rng& rng,
                               const std::string& prefix) {
  cfg.validate();
  store.add(prefix + ".w1", rec::glorot(cfg.hidden_dim, cfg.input_dim, rng));
  store.add(prefix + ".b1", num::Matrix(1, cfg.hidden_dim));
  store.add(prefix + ".w2", rec::glorot(cfg.out_dim, cfg.hidden_dim, rng));
  store.add(prefix + ".b2", num::Matrix(1, cfg.out_dim));
}

num::Tape::Var single_expert_forward(num::Tape& tape, const rec::VarMap& vm,
                                     const SingleExpertConfig& cfg,
                                     num::Tape::Var x,
                                     const std::string& prefix) {
  (void)cfg;
  return mlp2(tape, x, vm.at(prefix + ".w1"), vm.at(prefix + ".b1"),
              vm.at(prefix + ".w2"), vm.at(prefix + ".b2"));
}

num::Matrix single_expert_apply(const rec::ParamStore& store,
                                const SingleExpertConfig& cfg,
                                const num::Matrix& x,
                                const std::string& prefix) {
  num::Tape tape;
  auto vm = rec::register_params(tape, store);
  return tape.value(
      single_expert_forward(tape, vm, cfg, tape.constant_ref(&x), prefix));
}

}  // namespace asymrec::msp
