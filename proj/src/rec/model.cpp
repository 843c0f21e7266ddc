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

#include "rec/model.hpp"

#include <algorithm>
#include <cmath>

namespace asymrec::rec {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::single_expert: return "single-expert";
    case Variant::discrete_input: return "discrete-input";
    case Variant::continuous_output: return "continuous-output";
  }
  return "unknown";
}

std::optional<Variant> variant_from_name(const std::string& name) {
  for (Variant v : {Variant::full, Variant::single_expert,
                    Variant::discrete_input, Variant::continuous_output})
    if (name == variant_name(v)) return v;
  return std::nullopt;
}

void RecConfig::validate() const {
  if (hidden_dim == 0 || layers == 0 || heads == 0)
    throw usage_error("rec: hidden_dim, layers and heads must be positive");
  if (hidden_dim % heads != 0)
    throw usage_error("rec: hidden_dim must be divisible by heads");
  if (max_len == 0) throw usage_error("rec: max_len must be positive");
  if (dropout < 0.0 || dropout >= 1.0)
    throw usage_error("rec: dropout must lie in [0, 1)");
  if (patience > max_epochs)
    throw usage_error("rec: patience must not exceed max_epochs");
  if (lr <= 0.0) throw usage_error("rec: lr must be positive");
  if (batch == 0) throw usage_error("rec: batch must be positive");
  if (experts == 0) throw usage_error("rec: experts must be positive");
}

msp::MspConfig RecModel::msp_cfg() const {
  msp::MspConfig c;
  c.experts = cfg.experts;
  c.input_dim = dims.input_dim;
  c.hidden_dim = cfg.hidden_dim;  // per-expert width d_m
  c.out_dim = cfg.hidden_dim;
  return c;
}

msp::SingleExpertConfig RecModel::single_expert_cfg() const {
  msp::SingleExpertConfig c;
  c.input_dim = dims.input_dim;
  c.hidden_dim = cfg.experts * cfg.hidden_dim;
  c.out_dim = cfg.hidden_dim;
  return c;
}

namespace {

num::Matrix ones_row(std::size_t n) {
  num::Matrix m(1, n);
  for (std::size_t i = 0; i < n; ++i) m.at(0, i) = 1.0;
  return m;
}

num::Matrix small_normal(std::size_t r, std::size_t c, num::Rng& rng,
                         double std_dev = 0.02) {
  num::Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = rng.normal(0.0, std_dev);
  return m;
}

std::string layer_key(std::size_t i, const char* leaf) {
  return "l" + std::to_string(i) + "." + leaf;
}

std::string head_key(std::size_t p, const char* leaf) {
  return "head" + std::to_string(p) + "." + leaf;
}

bool needs_discrete_heads(Variant v) {
  return v != Variant::continuous_output;
}

num::Tape::Var maybe_dropout(num::Tape& tape, num::Tape::Var v,
                             const DropoutState& drop) {
  if (!drop.rng || drop.rate <= 0.0) return v;
  const num::Matrix& val = tape.value(v);
  num::Matrix mask(val.rows(), val.cols());
  const double keep = 1.0 - drop.rate;
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask.data()[i] = drop.rng->uniform() < keep ? 1.0 / keep : 0.0;
  return tape.hadamard(v, tape.constant(std::move(mask)));
}

// 2-layer perceptron used by prediction heads and the regression head.
num::Tape::Var mlp2(num::Tape& tape, num::Tape::Var x, num::Tape::Var w1,
                    num::Tape::Var b1, num::Tape::Var w2, num::Tape::Var b2) {
  auto h = tape.gelu(tape.add_row_broadcast(tape.matmul_nt(x, w1), b1));
  return tape.add_row_broadcast(tape.matmul_nt(h, w2), b2);
}

}  // namespace

RecModel build_model(const RecConfig& cfg, const ModelDims& dims) {
  cfg.validate();
  if (dims.input_dim == 0) throw usage_error("rec: input_dim must be set");
  if (needs_discrete_heads(cfg.variant) &&
      (dims.code_len == 0 || dims.codebook_size == 0))
    throw usage_error("rec: discrete heads require code_len and codebook_size");

  RecModel model;
  model.cfg = cfg;
  model.dims = dims;
  num::Rng rng(cfg.seed);
  ParamStore& ps = model.params;

  switch (cfg.variant) {
    case Variant::full:
    case Variant::continuous_output:
      msp::init_params(model.msp_cfg(), ps, rng);
      break;
    case Variant::single_expert:
      msp::init_single_expert_params(model.single_expert_cfg(), ps, rng);
      break;
    case Variant::discrete_input:
      for (std::size_t p = 0; p < dims.code_len; ++p)
        ps.add("cemb.p" + std::to_string(p),
               small_normal(dims.codebook_size, cfg.hidden_dim, rng));
      break;
  }

  ps.add("pos", small_normal(cfg.max_len, cfg.hidden_dim, rng));

  for (std::size_t i = 0; i < cfg.layers; ++i) {
    ps.add(layer_key(i, "ln1.g"), ones_row(cfg.hidden_dim));
    ps.add(layer_key(i, "ln1.b"), num::Matrix(1, cfg.hidden_dim));
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"})
      ps.add(layer_key(i, w), glorot(cfg.hidden_dim, cfg.hidden_dim, rng));
    for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"})
      ps.add(layer_key(i, b), num::Matrix(1, cfg.hidden_dim));
    ps.add(layer_key(i, "ln2.g"), ones_row(cfg.hidden_dim));
    ps.add(layer_key(i, "ln2.b"), num::Matrix(1, cfg.hidden_dim));
    ps.add(layer_key(i, "ffn.w1"), glorot(cfg.ffn_dim(), cfg.hidden_dim, rng));
    ps.add(layer_key(i, "ffn.b1"), num::Matrix(1, cfg.ffn_dim()));
    ps.add(layer_key(i, "ffn.w2"), glorot(cfg.hidden_dim, cfg.ffn_dim(), rng));
    ps.add(layer_key(i, "ffn.b2"), num::Matrix(1, cfg.hidden_dim));
  }
  ps.add("lnf.g", ones_row(cfg.hidden_dim));
  ps.add("lnf.b", num::Matrix(1, cfg.hidden_dim));

  if (needs_discrete_heads(cfg.variant)) {
    for (std::size_t p = 0; p < dims.code_len; ++p) {
      ps.add(head_key(p, "w1"), glorot(cfg.hidden_dim, cfg.hidden_dim, rng));
      ps.add(head_key(p, "b1"), num::Matrix(1, cfg.hidden_dim));
      ps.add(head_key(p, "w2"),
             glorot(dims.codebook_size, cfg.hidden_dim, rng));
      ps.add(head_key(p, "b2"), num::Matrix(1, dims.codebook_size));
    }
  } else {
    ps.add("reg.w1", glorot(cfg.hidden_dim, cfg.hidden_dim, rng));
    ps.add("reg.b1", num::Matrix(1, cfg.hidden_dim));
    ps.add("reg.w2", glorot(dims.input_dim, cfg.hidden_dim, rng));
    ps.add("reg.b2", num::Matrix(1, dims.input_dim));
  }
  return model;
}

std::vector<data::ItemId> truncate_context(
    const std::vector<data::ItemId>& items, std::size_t max_len) {
  if (items.size() <= max_len) return items;
  return std::vector<data::ItemId>(items.end() - max_len, items.end());
}

num::Tape::Var encode_on_tape(num::Tape& tape, const VarMap& vm,
                              const RecModel& model,
                              const data::EmbeddingTable& emb,
                              const std::vector<mhq::SemanticCode>* codes,
                              const std::vector<data::ItemId>& items,
                              DropoutState dropout) {
  const RecConfig& cfg = model.cfg;
  const std::size_t t_len = items.size();
  if (t_len == 0) throw usage_error("encode: empty sequence");
  if (t_len > cfg.max_len)
    throw usage_error("encode: sequence longer than max_len; truncate first");
  for (data::ItemId it : items)
    if (it >= emb.n_items) throw usage_error("encode: item id out of range");

  num::Tape::Var h0;
  if (cfg.variant == Variant::discrete_input) {
    if (!codes)
      throw usage_error("encode: discrete_input variant requires codes");
    // Mean of the item's code embeddings via one-hot selection against
    // each code-position table.
    num::Tape::Var sum;
    for (std::size_t p = 0; p < model.dims.code_len; ++p) {
      num::Matrix sel(t_len, model.dims.codebook_size);
      for (std::size_t t = 0; t < t_len; ++t)
        sel.at(t, (*codes)[items[t]].indices[p]) = 1.0;
      auto part = tape.matmul(tape.constant(std::move(sel)),
                              vm.at("cemb.p" + std::to_string(p)));
      sum = (p == 0) ? part : tape.add(sum, part);
    }
    h0 = tape.scale(sum, 1.0 / static_cast<double>(model.dims.code_len));
  } else {
    num::Matrix x(t_len, emb.dim);
    for (std::size_t t = 0; t < t_len; ++t)
      for (std::size_t j = 0; j < emb.dim; ++j)
        x.at(t, j) = emb.matrix.at(items[t], j);
    auto xv = tape.constant(std::move(x));
    if (cfg.variant == Variant::single_expert)
      h0 = msp::single_expert_forward(tape, vm, model.single_expert_cfg(), xv);
    else
      h0 = msp::forward(tape, vm, model.msp_cfg(), xv);
  }

  auto h = tape.add(h0, tape.slice_rows(vm.at("pos"), 0, t_len));

  const double inv_sqrt_dh =
      1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    auto a = tape.layer_norm_rows(h, vm.at(layer_key(i, "ln1.g")),
                                  vm.at(layer_key(i, "ln1.b")));
    auto q = tape.add_row_broadcast(
        tape.matmul_nt(a, vm.at(layer_key(i, "attn.wq"))),
        vm.at(layer_key(i, "attn.bq")));
    auto k = tape.add_row_broadcast(
        tape.matmul_nt(a, vm.at(layer_key(i, "attn.wk"))),
        vm.at(layer_key(i, "attn.bk")));
    auto v = tape.add_row_broadcast(
        tape.matmul_nt(a, vm.at(layer_key(i, "attn.wv"))),
        vm.at(layer_key(i, "attn.bv")));
    std::vector<num::Tape::Var> ctx;
    for (std::size_t hd = 0; hd < cfg.heads; ++hd) {
      const std::size_t c0 = hd * cfg.head_dim();
      auto qh = tape.slice_cols(q, c0, cfg.head_dim());
      auto kh = tape.slice_cols(k, c0, cfg.head_dim());
      auto vh = tape.slice_cols(v, c0, cfg.head_dim());
      auto scores = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dh);
      auto probs = tape.causal_softmax_rows(scores);
      ctx.push_back(tape.matmul(probs, vh));
    }
    auto merged = tape.concat_cols(ctx);
    auto attn_out = tape.add_row_broadcast(
        tape.matmul_nt(merged, vm.at(layer_key(i, "attn.wo"))),
        vm.at(layer_key(i, "attn.bo")));
    h = tape.add(h, maybe_dropout(tape, attn_out, dropout));

    auto b = tape.layer_norm_rows(h, vm.at(layer_key(i, "ln2.g")),
                                  vm.at(layer_key(i, "ln2.b")));
    auto f = mlp2(tape, b, vm.at(layer_key(i, "ffn.w1")),
                  vm.at(layer_key(i, "ffn.b1")),
                  vm.at(layer_key(i, "ffn.w2")),
                  vm.at(layer_key(i, "ffn.b2")));
    h = tape.add(h, maybe_dropout(tape, f, dropout));
  }
  return tape.layer_norm_rows(h, vm.at("lnf.g"), vm.at("lnf.b"));
}

num::Matrix encode_sequence(const RecModel& model,
                            const data::EmbeddingTable& emb,
                            const std::vector<mhq::SemanticCode>* codes,
                            const std::vector<data::ItemId>& items) {
  num::Tape tape;
  auto vm = register_params(tape, model.params);
  return tape.value(encode_on_tape(tape, vm, model, emb, codes, items));
}

num::Tape::Var head_logits_on_tape(num::Tape& tape, const VarMap& vm,
                                   std::size_t head_index,
                                   num::Tape::Var hidden) {
  return mlp2(tape, hidden, vm.at(head_key(head_index, "w1")),
              vm.at(head_key(head_index, "b1")),
              vm.at(head_key(head_index, "w2")),
              vm.at(head_key(head_index, "b2")));
}

num::Matrix head_logits(const RecModel& model, const num::Matrix& hidden_row) {
  if (hidden_row.rows() != 1 || hidden_row.cols() != model.cfg.hidden_dim)
    throw usage_error("head_logits: expected a 1 x hidden_dim row");
  num::Tape tape;
  auto vm = register_params(tape, model.params);
  auto hv = tape.constant_ref(&hidden_row);
  num::Matrix out(model.dims.code_len, model.dims.codebook_size);
  for (std::size_t p = 0; p < model.dims.code_len; ++p) {
    const num::Matrix& row = tape.value(head_logits_on_tape(tape, vm, p, hv));
    for (std::size_t k = 0; k < model.dims.codebook_size; ++k)
      out.at(p, k) = row.at(0, k);
  }
  return out;
}

num::Tape::Var regression_on_tape(num::Tape& tape, const VarMap& vm,
                                  num::Tape::Var hidden) {
  return mlp2(tape, hidden, vm.at("reg.w1"), vm.at("reg.b1"), vm.at("reg.w2"),
              vm.at("reg.b2"));
}

std::vector<data::ItemId> ScoredCandidates::ids(std::size_t k) const {
  std::vector<data::ItemId> out;
  const std::size_t n = (k == 0) ? ranked.size() : std::min(k, ranked.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(ranked[i].first);
  return out;
}

namespace {

// Row-wise log-softmax of a 1 x K logits row.
std::vector<double> log_softmax_row(const num::Matrix& logits) {
  const std::size_t k = logits.cols();
  double mx = logits.at(0, 0);
  for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, logits.at(0, j));
  double z = 0.0;
  for (std::size_t j = 0; j < k; ++j) z += std::exp(logits.at(0, j) - mx);
  const double log_z = std::log(z);
  std::vector<double> out(k);
  for (std::size_t j = 0; j < k; ++j) out[j] = logits.at(0, j) - mx - log_z;
  return out;
}

}  // namespace

ScoredCandidates score_catalog(const RecModel& model,
                               const data::EmbeddingTable& emb,
                               const std::vector<mhq::SemanticCode>& codes,
                               const std::vector<data::ItemId>& context) {
  const auto items = truncate_context(context, model.cfg.max_len);
  num::Tape tape;
  auto vm = register_params(tape, model.params);
  auto hf = encode_on_tape(tape, vm, model, emb, &codes, items);
  auto last = tape.slice_rows(hf, items.size() - 1, 1);

  ScoredCandidates out;
  out.ranked.reserve(emb.n_items);

  if (model.cfg.variant == Variant::continuous_output) {
    const num::Matrix pred = tape.value(regression_on_tape(tape, vm, last));
    double pn = 0.0;
    for (std::size_t j = 0; j < pred.cols(); ++j)
      pn += pred.at(0, j) * pred.at(0, j);
    pn = std::sqrt(pn);
    for (std::size_t i = 0; i < emb.n_items; ++i) {
      double dot = 0.0, xn = 0.0;
      for (std::size_t j = 0; j < emb.dim; ++j) {
        dot += pred.at(0, j) * emb.matrix.at(i, j);
        xn += emb.matrix.at(i, j) * emb.matrix.at(i, j);
      }
      const double denom = pn * std::sqrt(xn);
      out.ranked.emplace_back(static_cast<data::ItemId>(i),
                              denom > 0.0 ? dot / denom : 0.0);
    }
  } else {
    if (codes.size() != emb.n_items)
      throw usage_error("score_catalog: need a code per item");
    std::vector<std::vector<double>> log_probs(model.dims.code_len);
    for (std::size_t p = 0; p < model.dims.code_len; ++p)
      log_probs[p] =
          log_softmax_row(tape.value(head_logits_on_tape(tape, vm, p, last)));
    for (std::size_t i = 0; i < emb.n_items; ++i) {
      double s = 0.0;
      for (std::size_t p = 0; p < model.dims.code_len; ++p)
        s += log_probs[p][codes[i].indices[p]];
      out.ranked.emplace_back(static_cast<data::ItemId>(i), s);
    }
  }

  std::sort(out.ranked.begin(), out.ranked.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  return out;
}

num::Tape::Var batch_loss_on_tape(
    num::Tape& tape, const VarMap& vm, const RecModel& model,
    const data::EmbeddingTable& emb,
    const std::vector<mhq::SemanticCode>* codes,
    const std::vector<std::vector<data::ItemId>>& inputs,
    const std::vector<std::vector<data::ItemId>>& targets,
    DropoutState dropout) {
  if (inputs.empty() || inputs.size() != targets.size())
    throw usage_error("batch_loss: inputs/targets mismatch");

  const bool discrete = needs_discrete_heads(model.cfg.variant);
  std::size_t total_positions = 0;
  for (const auto& t : targets) total_positions += t.size();
  if (total_positions == 0) throw usage_error("batch_loss: no targets");

  num::Tape::Var acc;
  bool first = true;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const auto& in = inputs[s];
    const auto& tg = targets[s];
    if (tg.empty() || tg.size() > in.size())
      throw usage_error("batch_loss: bad target span");
    auto hf = encode_on_tape(tape, vm, model, emb, codes, in, dropout);
    auto used = (tg.size() == in.size())
                    ? hf
                    : tape.slice_rows(hf, in.size() - tg.size(), tg.size());
    num::Tape::Var seq_loss;
    if (discrete) {
      if (!codes) throw usage_error("batch_loss: codes required");
      bool first_head = true;
      for (std::size_t p = 0; p < model.dims.code_len; ++p) {
        std::vector<std::size_t> idx(tg.size());
        for (std::size_t t = 0; t < tg.size(); ++t) {
          if (tg[t] >= codes->size())
            throw usage_error("batch_loss: target item has no code");
          idx[t] = (*codes)[tg[t]].indices[p];
        }
        auto logits = head_logits_on_tape(tape, vm, p, used);
        auto ce = tape.cross_entropy_sum(logits, idx);
        seq_loss = first_head ? ce : tape.add(seq_loss, ce);
        first_head = false;
      }
    } else {
      num::Matrix y(tg.size(), emb.dim);
      for (std::size_t t = 0; t < tg.size(); ++t)
        for (std::size_t j = 0; j < emb.dim; ++j)
          y.at(t, j) = emb.matrix.at(tg[t], j);
      auto pred = regression_on_tape(tape, vm, used);
      seq_loss = tape.sum_squares(tape.sub(pred, tape.constant(std::move(y))));
    }
    acc = first ? seq_loss : tape.add(acc, seq_loss);
    first = false;
  }

  const double denom =
      discrete ? static_cast<double>(model.dims.code_len) *
                     static_cast<double>(total_positions)
               : static_cast<double>(model.dims.input_dim) *
                     static_cast<double>(total_positions);
  return tape.scale(acc, 1.0 / denom);
}

double ce_loss_value(const RecModel& model, const data::EmbeddingTable& emb,
                     const std::vector<mhq::SemanticCode>& codes,
                     const std::vector<std::vector<data::ItemId>>& batch) {
  std::vector<std::vector<data::ItemId>> inputs, targets;
  for (const auto& seq : batch) {
    if (seq.size() < 2) throw usage_error("ce_loss: sequences need >= 2 items");
    inputs.emplace_back(seq.begin(), seq.end() - 1);
    if (model.cfg.per_position)
      targets.emplace_back(seq.begin() + 1, seq.end());
    else
      targets.emplace_back(std::vector<data::ItemId>{seq.back()});
  }
  num::Tape tape;
  auto vm = register_params(tape, model.params);
  return tape
      .value(batch_loss_on_tape(tape, vm, model, emb, &codes, inputs, targets))
      .at(0, 0);
}

}  // namespace asymrec::rec
