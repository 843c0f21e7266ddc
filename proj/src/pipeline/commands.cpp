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

#include "pipeline/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "core/binio.hpp"
#include "core/error.hpp"
#include "core/svd.hpp"
#include "data/embeddings.hpp"
#include "data/interactions.hpp"
#include "data/synthetic.hpp"
#include "eval/harness.hpp"
#include "mhq/quantizer.hpp"
#include "rec/checkpoint.hpp"
#include "rec/trainer.hpp"

namespace fs = std::filesystem;

namespace asymrec::pipeline {

const char* version_string() { return "asymrec 0.1.0"; }

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ensure_out_dir(const RunConfig& cfg) {
  fs::create_directories(cfg.get("out_dir"));
}

// Data files: an empty config value falls back to a conventional name
// under out_dir, so one config file can drive the whole pipeline.
std::string data_path(const RunConfig& cfg, const std::string& key,
                      const char* default_name) {
  const std::string& v = cfg.get(key);
  if (v.empty()) return cfg.get("out_dir") + "/" + default_name;
  return v;
}

void require_input(const std::string& path, const std::string& role) {
  if (!fs::exists(path))
    throw data_error(role + " file does not exist: " + path);
}

struct Manifest {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  void write(const RunConfig& cfg) const {
    const std::string path =
        cfg.get("out_dir") + "/manifest-" + command + ".tsv";
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw data_error("cannot open for writing: " + path);
    f << "version\t" << version_string() << '\n';
    f << "command\t" << command << '\n';
    std::istringstream conf(cfg.canonical());
    std::string line;
    while (std::getline(conf, line)) {
      const auto eq = line.find(" = ");
      f << "config\t" << line.substr(0, eq) << '\t' << line.substr(eq + 3)
        << '\n';
    }
    for (const auto& p : inputs)
      f << "input\t" << p << '\t' << io::byte_sum_file(p) << '\n';
    for (const auto& p : outputs)
      f << "output\t" << p << '\t' << io::byte_sum_file(p) << '\n';
    if (!f) throw data_error("write failed: " + path);
  }
};

mhq::MhqConfig mhq_config_from(const RunConfig& cfg) {
  mhq::MhqConfig m;
  m.proj_dim = cfg.get_size("proj_dim");
  m.subspaces = cfg.get_size("subspaces");
  m.levels = cfg.get_size("levels");
  m.codebook_size = cfg.get_size("codebook_size");
  m.lambda_bal = cfg.get_double("lambda_bal");
  m.lambda_reg = cfg.get_double("lambda_reg");
  m.ema_gamma = cfg.get_double("ema_gamma");
  m.lr = cfg.get_double("mhq_lr");
  m.epochs = cfg.get_size("mhq_epochs");
  m.batch = cfg.get_size("mhq_batch");
  m.seed = cfg.get_u64("seed");
  return m;
}

rec::RecConfig rec_config_from(const RunConfig& cfg) {
  rec::RecConfig r;
  r.hidden_dim = cfg.get_size("hidden_dim");
  r.layers = cfg.get_size("decoder_layers");
  r.heads = cfg.get_size("attn_heads");
  r.max_len = cfg.get_size("max_len");
  r.dropout = cfg.get_double("dropout");
  r.lr = cfg.get_double("rec_lr");
  r.momentum = cfg.get_double("momentum");
  r.batch = cfg.get_size("rec_batch");
  r.max_epochs = cfg.get_size("rec_max_epochs");
  r.patience = cfg.get_size("patience");
  r.seed = cfg.get_u64("seed");
  r.per_position = cfg.get_bool("per_position");
  r.experts = cfg.get_size("experts");
  const auto variant = rec::variant_from_name(cfg.get("variant"));
  if (!variant)
    throw usage_error("config variant: unknown variant '" +
                      cfg.get("variant") + "'");
  r.variant = *variant;
  return r;
}

data::InteractionDataset load_dataset(const RunConfig& cfg,
                                      std::size_t n_items,
                                      const std::string& path) {
  auto raw = data::read_interaction_file(path);
  if (cfg.get_bool("five_core")) raw = data::five_core_filter(raw);
  return data::build_dataset(raw, n_items);
}

data::FrequencyBins bins_from(const RunConfig& cfg) {
  data::FrequencyBins bins;
  bins.boundaries = cfg.get_u64_list("bins");
  bins.validate();
  return bins;
}

bool is_discrete_variant(rec::Variant v) {
  return v != rec::Variant::continuous_output;
}

std::vector<mhq::SemanticCode> load_codes_checked(
    const std::string& path, std::size_t n_items) {
  auto codes = mhq::read_codes_file(path);
  if (codes.size() != n_items)
    throw data_error(path + ": has " + std::to_string(codes.size()) +
                     " codes but the catalog holds " +
                     std::to_string(n_items) + " items");
  return codes;
}

}  // namespace

void run_synth(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  data::SynthConfig sc;
  sc.seed = cfg.get_u64("seed");
  sc.n_items = cfg.get_size("n_items");
  sc.dim = cfg.get_size("dim");
  sc.n_users = cfg.get_size("n_users");
  sc.cluster_count = cfg.get_size("clusters");
  sc.seq_len_min = cfg.get_size("seq_min");
  sc.seq_len_max = cfg.get_size("seq_max");
  sc.stay_prob = cfg.get_double("stay_prob");
  sc.center_scale = cfg.get_double("center_scale");
  sc.noise_scale = cfg.get_double("noise_scale");
  auto out = data::synth_dataset(sc);

  const std::string emb_path = data_path(cfg, "embeddings", "embeddings.aemb");
  const std::string inter_path =
      data_path(cfg, "interactions", "interactions.tsv");
  data::save_embeddings(out.embeddings, emb_path);
  data::write_interaction_file(out.interactions, inter_path);

  Manifest m;
  m.command = "synth";
  m.outputs = {emb_path, inter_path};
  m.write(cfg);
  if (cfg.get_bool("verbose"))
    std::cerr << "synth: " << sc.n_items << " items, " << sc.n_users
              << " users, " << out.emitted_interactions << " interactions\n";
}

void run_train_mhq(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const std::string emb_path = data_path(cfg, "embeddings", "embeddings.aemb");
  require_input(emb_path, "embeddings");
  auto table = data::load_embeddings(emb_path);

  const mhq::MhqConfig mc = mhq_config_from(cfg);
  const bool verbose = cfg.get_bool("verbose");
  auto result = mhq::train_mhq(mc, table);
  if (verbose)
    for (std::size_t e = 0; e < result.log.size(); ++e)
      std::cerr << "mhq epoch " << (e + 1) << " rec "
                << result.log[e].mean_losses.rec << " total "
                << result.log[e].mean_losses.total << "\n";

  const std::string snap_path = cfg.out_path("snapshot");
  mhq::save_codebooks(result.codebooks, snap_path);

  const std::string loss_path = cfg.out_path("loss_csv");
  std::ofstream f(loss_path, std::ios::trunc);
  if (!f) throw data_error("cannot open for writing: " + loss_path);
  for (std::size_t e = 0; e < result.log.size(); ++e) {
    const auto& l = result.log[e].mean_losses;
    f << (e + 1) << ',' << fmt_double(l.rec) << ',' << fmt_double(l.bal)
      << ',' << fmt_double(l.reg) << ',' << fmt_double(l.total) << ','
      << result.log[e].reseeded_codes << '\n';
  }
  f.close();

  Manifest m;
  m.command = "train-mhq";
  m.inputs = {emb_path};
  m.outputs = {snap_path, loss_path};
  m.write(cfg);
}

void run_assign(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const std::string emb_path = data_path(cfg, "embeddings", "embeddings.aemb");
  const std::string snap_path = cfg.out_path("snapshot");
  require_input(emb_path, "embeddings");
  require_input(snap_path, "codebook snapshot");
  auto table = data::load_embeddings(emb_path);
  auto cb = mhq::load_codebooks(snap_path);
  if (cb.input_dim != table.dim)
    throw data_error("snapshot expects embedding dim " +
                     std::to_string(cb.input_dim) + " but table has " +
                     std::to_string(table.dim));

  auto codes = mhq::assign_all(cb, table);
  const std::string codes_path = cfg.out_path("codes");
  mhq::write_codes_file(codes, codes_path);
  auto report = mhq::collision_report(codes);
  const std::string coll_path = cfg.out_path("collisions");
  mhq::write_collision_report(report, coll_path);
  if (cfg.get_bool("verbose"))
    std::cerr << "assign: " << report.unique_count << "/" << report.n_items
              << " unique codes\n";

  Manifest m;
  m.command = "assign";
  m.inputs = {emb_path, snap_path};
  m.outputs = {codes_path, coll_path};
  m.write(cfg);
}

void run_train_rec(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const std::string emb_path = data_path(cfg, "embeddings", "embeddings.aemb");
  const std::string inter_path =
      data_path(cfg, "interactions", "interactions.tsv");
  require_input(emb_path, "embeddings");
  require_input(inter_path, "interactions");
  auto table = data::load_embeddings(emb_path);
  auto ds = load_dataset(cfg, table.n_items, inter_path);

  const rec::RecConfig rc = rec_config_from(cfg);
  std::vector<mhq::SemanticCode> codes;
  std::vector<std::string> inputs = {emb_path, inter_path};
  std::uint64_t mhq_ref = 0;
  std::size_t k_hint = 0;
  const std::string snap_path = cfg.out_path("snapshot");
  if (fs::exists(snap_path)) {
    mhq_ref = io::byte_sum_file(snap_path);
    k_hint = mhq::load_codebooks(snap_path).cfg.codebook_size;
  }
  if (is_discrete_variant(rc.variant)) {
    const std::string codes_path = cfg.out_path("codes");
    require_input(codes_path, "codes");
    codes = load_codes_checked(codes_path, table.n_items);
    inputs.push_back(codes_path);
  }

  auto result =
      rec::train_rec(rc, ds, table, codes, cfg.get_bool("verbose"), k_hint);

  const std::string ckpt_path = cfg.out_path("checkpoint");
  rec::save_checkpoint(result.model, mhq_ref, ckpt_path);

  const std::string log_path = cfg.out_path("train_log");
  std::ofstream f(log_path, std::ios::trunc);
  if (!f) throw data_error("cannot open for writing: " + log_path);
  for (const auto& e : result.log)
    f << e.epoch << ',' << fmt_double(e.train_loss) << ','
      << fmt_double(e.val_ndcg10) << ',' << (e.improved ? 1 : 0) << '\n';
  f.close();

  Manifest m;
  m.command = "train-rec";
  m.inputs = inputs;
  m.outputs = {ckpt_path, log_path};
  m.write(cfg);
}

void run_eval(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const std::string ckpt_path = cfg.out_path("checkpoint");
  const std::string emb_path = data_path(cfg, "embeddings", "embeddings.aemb");
  const std::string inter_path =
      data_path(cfg, "interactions", "interactions.tsv");
  require_input(ckpt_path, "checkpoint");
  require_input(emb_path, "embeddings");
  require_input(inter_path, "interactions");
  auto loaded = rec::load_checkpoint(ckpt_path);
  auto table = data::load_embeddings(emb_path);
  auto ds = load_dataset(cfg, table.n_items, inter_path);

  std::vector<std::string> inputs = {ckpt_path, emb_path, inter_path};
  std::vector<mhq::SemanticCode> codes;
  if (is_discrete_variant(loaded.model.cfg.variant)) {
    const std::string codes_path = cfg.out_path("codes");
    require_input(codes_path, "codes");
    codes = load_codes_checked(codes_path, table.n_items);
    inputs.push_back(codes_path);
  }

  const auto split = eval::split_from_name(cfg.get("split"));
  if (!split)
    throw usage_error("config split: expected train/valid/test, got '" +
                      cfg.get("split") + "'");

  eval::EvaluateOptions opts;
  opts.split = *split;
  opts.top_k = cfg.get_size("topk");
  data::FrequencyBins bins;
  const bool binned = cfg.get_bool("binned");
  if (binned) {
    bins = bins_from(cfg);
    opts.bins = &bins;
  }
  auto result = eval::evaluate(loaded.model, ds, table, codes, opts);

  std::vector<std::string> outputs;
  if (binned) {
    auto reps = eval::input_representations(loaded.model, table, codes);
    auto diag = eval::binned_input_retrieval(
        reps, ds, bins, cfg.get_size("negatives"), cfg.get_u64("seed"));
    const std::string bin_path = cfg.out_path("bin_csv");
    eval::write_bin_csv(diag, bin_path);
    outputs.push_back(bin_path);
  }
  if (cfg.get_bool("spectrum")) {
    auto hidden = eval::final_hidden_states(loaded.model, ds, table, codes,
                                            opts.split);
    auto sigma = num::svd_values(hidden);
    result.report.effective_rank = eval::effective_rank(hidden);
    const std::string spec_path = cfg.out_path("spectrum_csv");
    eval::write_spectrum_csv(sigma, spec_path);
    outputs.push_back(spec_path);
  }

  const std::string report_path = cfg.out_path("report");
  eval::write_report(result.report, report_path);
  const std::string pred_path = cfg.out_path("predictions");
  eval::write_predictions(result.predictions, pred_path);
  outputs.insert(outputs.begin(), {report_path, pred_path});

  if (cfg.get_bool("verbose"))
    std::cerr << "eval[" << eval::split_name(opts.split)
              << "]: recall@10 " << result.report.recall10 << " ndcg@10 "
              << result.report.ndcg10 << " over " << result.report.users
              << " users\n";

  Manifest m;
  m.command = "eval";
  m.inputs = inputs;
  m.outputs = outputs;
  m.write(cfg);
}

void run_fuse(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const std::string a_path = cfg.get("fuse_a");
  const std::string b_path = cfg.get("fuse_b");
  if (a_path.empty() || b_path.empty())
    throw usage_error("fuse requires fuse_a and fuse_b prediction files");
  require_input(a_path, "fuse_a");
  require_input(b_path, "fuse_b");
  auto a = eval::read_predictions(a_path);
  auto b = eval::read_predictions(b_path);

  std::map<data::UserId, const std::vector<data::ItemId>*> b_by_user;
  for (const auto& [uid, ids] : b.users) b_by_user[uid] = &ids;
  std::map<data::UserId, const std::vector<data::ItemId>*> a_by_user;
  for (const auto& [uid, ids] : a.users) a_by_user[uid] = &ids;

  const double k0 = cfg.get_double("k0");
  const std::size_t top_k = cfg.get_size("topk");
  static const std::vector<data::ItemId> kEmpty;
  eval::PredictionList fused;
  std::map<data::UserId, bool> all_users;
  for (const auto& [uid, ids] : a.users) all_users[uid] = true;
  for (const auto& [uid, ids] : b.users) all_users[uid] = true;
  for (const auto& [uid, unused] : all_users) {
    const auto* la = a_by_user.count(uid) ? a_by_user[uid] : &kEmpty;
    const auto* lb = b_by_user.count(uid) ? b_by_user[uid] : &kEmpty;
    auto scored = eval::rrf_fuse(*la, *lb, k0);
    std::vector<data::ItemId> ids;
    for (std::size_t i = 0; i < scored.size() && i < top_k; ++i)
      ids.push_back(scored[i].first);
    fused.users.emplace_back(uid, std::move(ids));
  }
  const std::string out_path = cfg.out_path("fused");
  eval::write_predictions(fused, out_path);

  Manifest m;
  m.command = "fuse";
  m.inputs = {a_path, b_path};
  m.outputs = {out_path};
  m.write(cfg);
}

void run_spectrum(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const std::string ckpt_path = cfg.out_path("checkpoint");
  const std::string emb_path = data_path(cfg, "embeddings", "embeddings.aemb");
  const std::string inter_path =
      data_path(cfg, "interactions", "interactions.tsv");
  require_input(ckpt_path, "checkpoint");
  require_input(emb_path, "embeddings");
  require_input(inter_path, "interactions");
  auto loaded = rec::load_checkpoint(ckpt_path);
  auto table = data::load_embeddings(emb_path);
  auto ds = load_dataset(cfg, table.n_items, inter_path);
  std::vector<std::string> inputs = {ckpt_path, emb_path, inter_path};
  std::vector<mhq::SemanticCode> codes;
  if (is_discrete_variant(loaded.model.cfg.variant)) {
    const std::string codes_path = cfg.out_path("codes");
    require_input(codes_path, "codes");
    codes = load_codes_checked(codes_path, table.n_items);
    inputs.push_back(codes_path);
  }
  const auto split = eval::split_from_name(cfg.get("split"));
  if (!split)
    throw usage_error("config split: expected train/valid/test, got '" +
                      cfg.get("split") + "'");

  auto hidden =
      eval::final_hidden_states(loaded.model, ds, table, codes, *split);
  auto sigma = num::svd_values(hidden);
  const double er = eval::effective_rank(hidden);

  const std::string spec_path = cfg.out_path("spectrum_csv");
  eval::write_spectrum_csv(sigma, spec_path);
  const std::string report_path = cfg.out_path("spectrum_report");
  std::ofstream f(report_path, std::ios::trunc);
  if (!f) throw data_error("cannot open for writing: " + report_path);
  f << "users\t" << hidden.rows() << '\n';
  f << "effective_rank\t" << fmt_double(er) << '\n';
  f.close();
  if (cfg.get_bool("verbose"))
    std::cerr << "spectrum: effective rank " << er << " over "
              << hidden.rows() << " users\n";

  Manifest m;
  m.command = "spectrum";
  m.inputs = inputs;
  m.outputs = {spec_path, report_path};
  m.write(cfg);
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> kNames = {
      "synth", "train-mhq", "assign", "train-rec",
      "eval",  "fuse",      "spectrum"};
  return kNames;
}

void run_command(const std::string& name, const RunConfig& cfg) {
  if (name == "synth") return run_synth(cfg);
  if (name == "train-mhq") return run_train_mhq(cfg);
  if (name == "assign") return run_assign(cfg);
  if (name == "train-rec") return run_train_rec(cfg);
  if (name == "eval") return run_eval(cfg);
  if (name == "fuse") return run_fuse(cfg);
  if (name == "spectrum") return run_spectrum(cfg);
  throw usage_error("unknown command: " + name);
}

}  // namespace asymrec::pipeline
