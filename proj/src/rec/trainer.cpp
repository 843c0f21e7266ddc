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

#include "rec/trainer.hpp"

#include <cmath>
#include <iostream>

#include "eval/metrics.hpp"

namespace asymrec::rec {

namespace {

struct Example {
  std::vector<data::ItemId> inputs;
  std::vector<data::ItemId> targets;
};

// Teacher-forcing window over the training prefix: inputs are all but
// the last training item, each position's target is the next one. Long
// prefixes keep only the most recent max_len input positions.
std::vector<Example> build_examples(const data::InteractionDataset& ds,
                                    const RecConfig& cfg) {
  std::vector<Example> out;
  for (const auto& u : ds.users) {
    const std::size_t m = u.train_len();
    if (m < 2) continue;
    const std::size_t window = std::min(m - 1, cfg.max_len);
    const std::size_t start = (m - 1) - window;
    Example ex;
    ex.inputs.assign(u.items.begin() + start, u.items.begin() + (m - 1));
    if (cfg.per_position)
      ex.targets.assign(u.items.begin() + start + 1, u.items.begin() + m);
    else
      ex.targets.assign(1, u.items[m - 1]);
    out.push_back(std::move(ex));
  }
  return out;
}

double validation_ndcg10(const RecModel& model,
                         const data::InteractionDataset& ds,
                         const data::EmbeddingTable& emb,
                         const std::vector<mhq::SemanticCode>& codes) {
  if (ds.users.empty()) return 0.0;
  // Canonical user-id order keeps the reduction order-independent.
  std::vector<std::pair<data::UserId, double>> per_user;
  per_user.reserve(ds.users.size());
  for (const auto& u : ds.users) {
    std::vector<data::ItemId> context(u.items.begin(),
                                      u.items.begin() + u.train_len());
    auto scored = score_catalog(model, emb, codes, context);
    per_user.emplace_back(u.user_id,
                          eval::ndcg_at_k(scored.ids(), u.valid_item(), 10));
  }
  std::sort(per_user.begin(), per_user.end());
  double sum = 0.0;
  for (const auto& [uid, v] : per_user) sum += v;
  return sum / static_cast<double>(per_user.size());
}

}  // namespace

TrainRecResult train_rec(const RecConfig& cfg,
                         const data::InteractionDataset& ds,
                         const data::EmbeddingTable& emb,
                         const std::vector<mhq::SemanticCode>& codes,
                         bool verbose, std::size_t codebook_size_hint) {
  cfg.validate();
  const bool discrete = cfg.variant != Variant::continuous_output;
  if (discrete && codes.size() != emb.n_items)
    throw usage_error("train_rec: need a semantic code for every item");

  ModelDims dims;
  dims.input_dim = emb.dim;
  if (!codes.empty()) {
    dims.code_len = codes[0].indices.size();
    std::uint32_t max_idx = 0;
    for (const auto& c : codes)
      for (auto v : c.indices) max_idx = std::max(max_idx, v);
    dims.codebook_size = max_idx + 1;
    if (codebook_size_hint) {
      if (codebook_size_hint < dims.codebook_size)
        throw usage_error("train_rec: codes exceed the declared codebook size");
      dims.codebook_size = codebook_size_hint;
    }
  }

  TrainRecResult result;
  result.model = build_model(cfg, dims);
  RecModel& model = result.model;

  auto examples = build_examples(ds, cfg);
  if (examples.empty())
    throw usage_error("train_rec: no trainable sequences (train prefixes "
                      "need at least 2 items)");

  // Momentum buffers in parameter insertion order.
  std::vector<num::Matrix> velocity;
  velocity.reserve(model.params.size());
  for (const auto& [name, mat] : model.params.entries())
    velocity.emplace_back(mat.rows(), mat.cols());

  num::Rng rng(cfg.seed ^ 0x5DEECE66DULL);  // training-loop stream
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<std::pair<std::string, num::Matrix>> best_params;
  double best_val = -1.0;
  std::size_t epochs_since_improve = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t b = std::min(cfg.batch, order.size() - start);
      std::vector<std::vector<data::ItemId>> inputs, targets;
      inputs.reserve(b);
      targets.reserve(b);
      for (std::size_t j = 0; j < b; ++j) {
        inputs.push_back(examples[order[start + j]].inputs);
        targets.push_back(examples[order[start + j]].targets);
      }

      num::Tape tape;
      auto vm = register_params(tape, model.params);
      DropoutState drop{&rng, cfg.dropout};
      auto loss = batch_loss_on_tape(tape, vm, model, emb,
                                     discrete ? &codes : nullptr, inputs,
                                     targets, drop);
      const double loss_val = tape.value(loss).at(0, 0);
      if (!std::isfinite(loss_val))
        throw numeric_error("train_rec: loss diverged at epoch " +
                            std::to_string(epoch) + " step " +
                            std::to_string(steps + 1));
      loss_sum += loss_val;
      tape.backward(loss);

      auto& entries = model.params.entries();
      for (std::size_t p = 0; p < entries.size(); ++p) {
        const num::Matrix g = tape.grad(vm.at(entries[p].first));
        num::Matrix& v = velocity[p];
        num::Matrix& w = entries[p].second;
        for (std::size_t i = 0; i < w.size(); ++i) {
          v.data()[i] = cfg.momentum * v.data()[i] + g.data()[i];
          w.data()[i] -= cfg.lr * v.data()[i];
        }
      }
      ++steps;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(steps);
    rec.val_ndcg10 = validation_ndcg10(model, ds, emb, codes);
    rec.improved = rec.val_ndcg10 > best_val;
    if (rec.improved) {
      best_val = rec.val_ndcg10;
      best_params = model.params.entries();
      result.best_epoch = epoch;
      epochs_since_improve = 0;
    } else {
      ++epochs_since_improve;
    }
    result.log.push_back(rec);
    if (verbose)
      std::cerr << "epoch " << epoch << " loss " << rec.train_loss
                << " val_ndcg@10 " << rec.val_ndcg10
                << (rec.improved ? " *" : "") << "\n";
    if (epochs_since_improve >= cfg.patience) break;
  }

  model.params.entries() = best_params;
  result.best_val_ndcg10 = best_val;
  return result;
}

}  // namespace asymrec::rec
