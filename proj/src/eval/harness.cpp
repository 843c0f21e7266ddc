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

#include "eval/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "core/rng.hpp"
#include "core/svd.hpp"

namespace asymrec::eval {

std::optional<Split> split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "valid") return Split::valid;
  if (name == "test") return Split::test;
  return std::nullopt;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "unknown";
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Task {
  data::UserId user_id;
  std::vector<data::ItemId> context;
  data::ItemId target;
};

// Leave-last-out contexts per split.
std::vector<Task> build_tasks(const data::InteractionDataset& ds, Split split) {
  std::vector<Task> tasks;
  for (const auto& u : ds.users) {
    const std::size_t m = u.train_len();
    Task t;
    t.user_id = u.user_id;
    switch (split) {
      case Split::train:
        if (m < 2) continue;  // needs a prefix and a target inside train
        t.context.assign(u.items.begin(), u.items.begin() + (m - 1));
        t.target = u.items[m - 1];
        break;
      case Split::valid:
        t.context.assign(u.items.begin(), u.items.begin() + m);
        t.target = u.valid_item();
        break;
      case Split::test:
        t.context.assign(u.items.begin(), u.items.begin() + (m + 1));
        t.target = u.test_item();
        break;
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

}  // namespace

EvaluateResult evaluate(const rec::RecModel& model,
                        const data::InteractionDataset& ds,
                        const data::EmbeddingTable& emb,
                        const std::vector<mhq::SemanticCode>& codes,
                        const EvaluateOptions& opts) {
  auto tasks = build_tasks(ds, opts.split);
  if (tasks.empty()) throw usage_error("evaluate: no evaluable users");

  struct PerUser {
    data::UserId uid;
    int r5, r10;
    double n5, n10;
    data::ItemId target;
    std::vector<data::ItemId> top;
  };
  std::vector<PerUser> rows;
  rows.reserve(tasks.size());
  for (const auto& t : tasks) {
    auto scored = rec::score_catalog(model, emb, codes, t.context);
    auto ids = scored.ids();
    PerUser r;
    r.uid = t.user_id;
    r.r5 = recall_at_k(ids, t.target, 5);
    r.r10 = recall_at_k(ids, t.target, 10);
    r.n5 = ndcg_at_k(ids, t.target, 5);
    r.n10 = ndcg_at_k(ids, t.target, 10);
    r.target = t.target;
    r.top.assign(ids.begin(),
                 ids.begin() + std::min<std::size_t>(opts.top_k, ids.size()));
    rows.push_back(std::move(r));
  }
  // Canonical order: the aggregate must not depend on user ordering.
  std::sort(rows.begin(), rows.end(),
            [](const PerUser& a, const PerUser& b) { return a.uid < b.uid; });

  EvaluateResult out;
  MetricReport& rep = out.report;
  rep.users = rows.size();
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (const auto& r : rows) {
    rep.recall5 += r.r5 * inv;
    rep.recall10 += r.r10 * inv;
    rep.ndcg5 += r.n5 * inv;
    rep.ndcg10 += r.n10 * inv;
    out.predictions.users.emplace_back(r.uid, r.top);
  }

  if (opts.bins) {
    opts.bins->validate();
    const auto assign = data::frequency_bin_assign(ds, *opts.bins);
    std::uint64_t max_freq = 0;
    for (auto f : ds.item_frequency) max_freq = std::max(max_freq, f);
    const std::size_t nb = opts.bins->bin_count();
    std::vector<double> hits(nb, 0.0);
    std::vector<std::size_t> counts(nb, 0);
    for (const auto& r : rows) {
      const std::size_t b = assign[r.target];
      hits[b] += r.r10;
      ++counts[b];
    }
    for (std::size_t b = 0; b < nb; ++b) {
      BinRecall br;
      br.low = (b == 0) ? 0 : opts.bins->boundaries[b - 1] + 1;
      br.high = (b < opts.bins->boundaries.size())
                    ? opts.bins->boundaries[b]
                    : std::max<std::uint64_t>(max_freq, br.low);
      br.users = counts[b];
      br.recall10 = counts[b] ? hits[b] / static_cast<double>(counts[b]) : 0.0;
      rep.bins.push_back(br);
    }
  }
  return out;
}

std::vector<BinRecall> binned_input_retrieval(
    const num::Matrix& reps, const data::InteractionDataset& ds,
    const data::FrequencyBins& bins, std::size_t negatives,
    std::uint64_t seed, std::size_t* warned_small_catalog) {
  bins.validate();
  if (reps.rows() != ds.n_items)
    throw usage_error("binned_input_retrieval: need one row per item");
  const auto assign = data::frequency_bin_assign(ds, bins);
  num::Rng rng(seed);
  std::size_t warnings = 0;

  const std::size_t nb = bins.bin_count();
  std::vector<double> hits(nb, 0.0);
  std::vector<std::size_t> counts(nb, 0);
  std::uint64_t max_freq = 0;
  for (auto f : ds.item_frequency) max_freq = std::max(max_freq, f);

  auto cosine = [&](const double* a, const double* b, std::size_t d) {
    double dot = 0.0, na = 0.0, nbn = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dot += a[j] * b[j];
      na += a[j] * a[j];
      nbn += b[j] * b[j];
    }
    const double denom = std::sqrt(na) * std::sqrt(nbn);
    return denom > 0.0 ? dot / denom : 0.0;
  };

  for (const auto& u : ds.users) {
    // History: everything before the held-out test item.
    const std::size_t hist_len = u.items.size() - 1;
    const data::ItemId target = u.test_item();
    num::Matrix mean(1, reps.cols());
    for (std::size_t t = 0; t < hist_len; ++t)
      for (std::size_t j = 0; j < reps.cols(); ++j)
        mean.at(0, j) += reps.at(u.items[t], j);
    for (std::size_t j = 0; j < reps.cols(); ++j)
      mean.at(0, j) /= static_cast<double>(hist_len);

    std::set<data::ItemId> excluded(u.items.begin(),
                                    u.items.begin() + hist_len);
    excluded.insert(target);
    std::vector<data::ItemId> pool;
    pool.reserve(ds.n_items);
    for (std::size_t i = 0; i < ds.n_items; ++i)
      if (!excluded.count(static_cast<data::ItemId>(i)))
        pool.push_back(static_cast<data::ItemId>(i));

    std::vector<data::ItemId> candidates;
    candidates.push_back(target);
    if (pool.size() >= negatives) {
      auto picks = rng.sample_without_replacement(pool.size(), negatives);
      for (auto p : picks) candidates.push_back(pool[p]);
    } else {
      ++warnings;  // catalog too small: sample with replacement
      for (std::size_t i = 0; i < negatives && !pool.empty(); ++i)
        candidates.push_back(pool[rng.below(pool.size())]);
    }

    std::vector<std::pair<data::ItemId, double>> scored;
    scored.reserve(candidates.size());
    for (auto c : candidates)
      scored.emplace_back(c, cosine(mean.row(0), reps.row(c), reps.cols()));
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    std::vector<data::ItemId> ranked;
    ranked.reserve(scored.size());
    for (const auto& [id, s] : scored) ranked.push_back(id);

    const std::size_t b = assign[target];
    hits[b] += recall_at_k(ranked, target, 10);
    ++counts[b];
  }
  if (warned_small_catalog) *warned_small_catalog = warnings;

  std::vector<BinRecall> out;
  for (std::size_t b = 0; b < nb; ++b) {
    BinRecall br;
    br.low = (b == 0) ? 0 : bins.boundaries[b - 1] + 1;
    br.high = (b < bins.boundaries.size())
                  ? bins.boundaries[b]
                  : std::max<std::uint64_t>(max_freq, br.low);
    br.users = counts[b];
    br.recall10 = counts[b] ? hits[b] / static_cast<double>(counts[b]) : 0.0;
    out.push_back(br);
  }
  return out;
}

num::Matrix input_representations(const rec::RecModel& model,
                                  const data::EmbeddingTable& emb,
                                  const std::vector<mhq::SemanticCode>& codes) {
  using rec::Variant;
  if (model.cfg.variant == Variant::discrete_input) {
    if (codes.size() != emb.n_items)
      throw usage_error("input_representations: codes required");
    num::Matrix out(emb.n_items, model.cfg.hidden_dim);
    for (std::size_t i = 0; i < emb.n_items; ++i) {
      for (std::size_t p = 0; p < model.dims.code_len; ++p) {
        const num::Matrix& table =
            model.params.get("cemb.p" + std::to_string(p));
        const std::uint32_t idx = codes[i].indices[p];
        for (std::size_t j = 0; j < out.cols(); ++j)
          out.at(i, j) += table.at(idx, j);
      }
      for (std::size_t j = 0; j < out.cols(); ++j)
        out.at(i, j) /= static_cast<double>(model.dims.code_len);
    }
    return out;
  }
  if (model.cfg.variant == Variant::single_expert)
    return msp::single_expert_apply(model.params, model.single_expert_cfg(),
                                    emb.matrix);
  return msp::apply(model.params, model.msp_cfg(), emb.matrix);
}

num::Matrix final_hidden_states(const rec::RecModel& model,
                                const data::InteractionDataset& ds,
                                const data::EmbeddingTable& emb,
                                const std::vector<mhq::SemanticCode>& codes,
                                Split split) {
  auto tasks = build_tasks(ds, split);
  if (tasks.empty()) throw usage_error("final_hidden_states: no users");
  num::Matrix out(tasks.size(), model.cfg.hidden_dim);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto ctx =
        rec::truncate_context(tasks[i].context, model.cfg.max_len);
    num::Matrix hf = rec::encode_sequence(model, emb, &codes, ctx);
    for (std::size_t j = 0; j < out.cols(); ++j)
      out.at(i, j) = hf.at(ctx.size() - 1, j);
  }
  return out;
}

void write_report(const MetricReport& report, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw data_error("cannot open for writing: " + path);
  f << "users\t" << report.users << '\n';
  f << "recall@5\t" << fmt_double(report.recall5) << '\n';
  f << "recall@10\t" << fmt_double(report.recall10) << '\n';
  f << "ndcg@5\t" << fmt_double(report.ndcg5) << '\n';
  f << "ndcg@10\t" << fmt_double(report.ndcg10) << '\n';
  if (report.effective_rank)
    f << "effective_rank\t" << fmt_double(*report.effective_rank) << '\n';
  if (!report.bins.empty()) {
    f << "[bins]\n";
    for (std::size_t b = 0; b < report.bins.size(); ++b) {
      const BinRecall& br = report.bins[b];
      f << "bin" << b << '\t' << br.low << '\t' << br.high << '\t'
        << fmt_double(br.recall10) << '\t' << br.users << '\n';
    }
  }
  if (!f) throw data_error("write failed: " + path);
}

void write_bin_csv(const std::vector<BinRecall>& bins,
                   const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw data_error("cannot open for writing: " + path);
  f << "bin_low,bin_high,recall10\n";
  for (const BinRecall& b : bins)
    f << b.low << ',' << b.high << ',' << fmt_double(b.recall10) << '\n';
  if (!f) throw data_error("write failed: " + path);
}

void write_spectrum_csv(const std::vector<double>& singular_values,
                        const std::string& path) {
  double total = 0.0;
  for (double s : singular_values) total += s;
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw data_error("cannot open for writing: " + path);
  f << "index,normalized_singular_value\n";
  for (std::size_t i = 0; i < singular_values.size(); ++i)
    f << i << ','
      << fmt_double(total > 0.0 ? singular_values[i] / total : 0.0) << '\n';
  if (!f) throw data_error("write failed: " + path);
}

void write_predictions(const PredictionList& preds, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw data_error("cannot open for writing: " + path);
  for (const auto& [uid, ids] : preds.users) {
    f << uid << '\t';
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) f << ',';
      f << ids[i];
    }
    f << '\n';
  }
  if (!f) throw data_error("write failed: " + path);
}

PredictionList read_predictions(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open: " + path);
  PredictionList out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw data_error(path + ":" + std::to_string(line_no) + ": missing tab");
    std::uint64_t uid = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + tab, uid);
    if (ec != std::errc())
      throw data_error(path + ":" + std::to_string(line_no) + ": bad user id");
    std::vector<data::ItemId> ids;
    std::string rest = line.substr(tab + 1);
    std::size_t pos = 0;
    while (pos < rest.size()) {
      std::size_t comma = rest.find(',', pos);
      if (comma == std::string::npos) comma = rest.size();
      std::uint64_t v = 0;
      auto [p2, ec2] =
          std::from_chars(rest.data() + pos, rest.data() + comma, v);
      if (ec2 != std::errc() || p2 != rest.data() + comma)
        throw data_error(path + ":" + std::to_string(line_no) +
                         ": bad item id list");
      ids.push_back(static_cast<data::ItemId>(v));
      pos = comma + 1;
    }
    out.users.emplace_back(static_cast<data::UserId>(uid), std::move(ids));
  }
  return out;
}

}  // namespace asymrec::eval
