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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "core/binio.hpp"
#include "core/error.hpp"
#include "data/embeddings.hpp"
#include "eval/harness.hpp"
#include "mhq/quantizer.hpp"
#include "pipeline/commands.hpp"
#include "pipeline/config.hpp"

namespace fs = std::filesystem;
using namespace asymrec;
using pipeline::RunConfig;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int c = 0;
    path = fs::temp_directory_path() /
           ("asymrec_pipe_" + std::to_string(::getpid()) + "_" +
            std::to_string(c++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string dir(const std::string& name) const {
    return (path / name).string();
  }
};

RunConfig toy_config(const std::string& out_dir) {
  RunConfig cfg;
  cfg.set("out_dir", out_dir);
  cfg.set("seed", "9");
  cfg.set("n_items", "60");
  cfg.set("dim", "16");
  cfg.set("n_users", "120");
  cfg.set("clusters", "6");
  cfg.set("proj_dim", "16");
  cfg.set("subspaces", "4");
  cfg.set("levels", "2");
  cfg.set("codebook_size", "8");
  cfg.set("mhq_epochs", "4");
  cfg.set("mhq_batch", "32");
  cfg.set("hidden_dim", "16");
  cfg.set("attn_heads", "2");
  cfg.set("decoder_layers", "1");
  cfg.set("experts", "2");
  cfg.set("rec_batch", "32");
  cfg.set("rec_max_epochs", "3");
  cfg.set("patience", "3");
  cfg.set("max_len", "12");
  return cfg;
}

std::vector<std::uint8_t> slurp(const std::string& path) {
  auto r = io::ByteReader::from_file(path);
  return std::vector<std::uint8_t>(r.data(), r.data() + r.size());
}

std::size_t line_count(const std::string& path) {
  std::ifstream f(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(f, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("config: paper defaults are wired in") {
  RunConfig cfg;
  CHECK(cfg.get_size("proj_dim") == 512);
  CHECK(cfg.get_double("lambda_bal") == 0.01);
  CHECK(cfg.get_double("lambda_reg") == 0.01);
  CHECK(cfg.get_double("ema_gamma") == 0.99);
  CHECK(cfg.get_double("mhq_lr") == 0.001);
  CHECK(cfg.get_size("mhq_epochs") == 50);
  CHECK(cfg.get_size("experts") == 3);
  CHECK(cfg.get_size("hidden_dim") == 448);
  CHECK(cfg.get_size("decoder_layers") == 2);
  CHECK(cfg.get_double("rec_lr") == 0.003);
  CHECK(cfg.get_size("rec_batch") == 256);
  CHECK(cfg.get_size("rec_max_epochs") == 100);
  CHECK(cfg.get_size("patience") == 20);
  CHECK(cfg.get_u64_list("bins") == std::vector<std::uint64_t>{6, 15, 50});
  CHECK(cfg.get_double("k0") == 50.0);
  CHECK(cfg.get_size("negatives") == 99);
}

TEST_CASE("config: unknown keys and bad values are usage errors") {
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.set("no_such_key", "1"), Error);
  cfg.set("seed", "abc");
  CHECK_THROWS_AS(cfg.get_u64("seed"), Error);
  cfg.set("dropout", "maybe");
  CHECK_THROWS_AS(cfg.get_double("dropout"), Error);
  cfg.set("binned", "2");
  CHECK_THROWS_AS(cfg.get_bool("binned"), Error);
}

TEST_CASE("config: file loading with comments and overrides") {
  TempDir tmp;
  const std::string path = tmp.dir("cfg.txt");
  {
    std::ofstream f(path);
    f << "# pipeline settings\n";
    f << "seed = 42\n";
    f << "subspaces = 8   # facets\n";
    f << "\n";
  }
  RunConfig cfg;
  cfg.load_file(path);
  CHECK(cfg.get_u64("seed") == 42);
  CHECK(cfg.get_size("subspaces") == 8);

  const std::string bad = tmp.dir("bad.txt");
  {
    std::ofstream f(bad);
    f << "not a key value line\n";
  }
  RunConfig cfg2;
  CHECK_THROWS_AS(cfg2.load_file(bad), Error);
}

TEST_CASE("pipeline: synth writes reloadable files, idempotently") {
  TempDir tmp;
  auto cfg = toy_config(tmp.dir("out"));
  pipeline::run_synth(cfg);
  const std::string emb = tmp.dir("out") + "/embeddings.aemb";
  const std::string inter = tmp.dir("out") + "/interactions.tsv";
  REQUIRE(fs::exists(emb));
  REQUIRE(fs::exists(inter));
  auto table = data::load_embeddings(emb);
  CHECK(table.n_items == 60);
  CHECK(table.dim == 16);
  auto ds = data::load_interactions(inter, 60);
  CHECK(ds.users.size() == 120);

  auto before_e = slurp(emb);
  auto before_i = slurp(inter);
  auto before_m = slurp(tmp.dir("out") + "/manifest-synth.tsv");
  pipeline::run_synth(cfg);
  CHECK(slurp(emb) == before_e);
  CHECK(slurp(inter) == before_i);
  CHECK(slurp(tmp.dir("out") + "/manifest-synth.tsv") == before_m);

  auto bad = toy_config(tmp.dir("bad"));
  bad.set("n_items", "0");
  CHECK_THROWS_AS(pipeline::run_synth(bad), Error);
}

TEST_CASE("pipeline: full chain through eval, fuse and spectrum") {
  TempDir tmp;
  auto cfg = toy_config(tmp.dir("out"));
  pipeline::run_synth(cfg);

  // train-mhq: snapshot reloads, loss CSV has exactly `epochs` rows,
  // rerun is byte-identical.
  CHECK_THROWS_AS(
      pipeline::run_train_mhq([&] {
        auto c = toy_config(tmp.dir("empty"));
        return c;
      }()),
      Error);  // missing embeddings
  pipeline::run_train_mhq(cfg);
  const std::string snap = tmp.dir("out") + "/mhq.snapshot";
  REQUIRE(fs::exists(snap));
  auto cb = mhq::load_codebooks(snap);
  CHECK(cb.cfg.subspaces == 4);
  CHECK(line_count(tmp.dir("out") + "/mhq_loss.csv") == 4);
  auto snap_bytes = slurp(snap);
  pipeline::run_train_mhq(cfg);
  CHECK(slurp(snap) == snap_bytes);

  // assign: line count, index ranges, dedup-oracle consistency.
  pipeline::run_assign(cfg);
  const std::string codes_path = tmp.dir("out") + "/codes.tsv";
  auto codes = mhq::read_codes_file(codes_path);
  CHECK(codes.size() == 60);
  CHECK(line_count(codes_path) == 60);
  for (const auto& c : codes) {
    CHECK(c.indices.size() == 8);
    for (auto v : c.indices) CHECK(v < 8);
  }
  std::set<std::vector<std::uint32_t>> dedup;
  for (const auto& c : codes) dedup.insert(c.indices);
  std::size_t unique_by_oracle = 0;
  for (const auto& code : dedup) {
    std::size_t n = 0;
    for (const auto& c : codes)
      if (c.indices == code) ++n;
    if (n == 1) ++unique_by_oracle;
  }
  std::ifstream coll(tmp.dir("out") + "/collisions.tsv");
  std::string key;
  std::size_t items = 0, unique = 0;
  coll >> key >> items >> key >> unique;
  CHECK(items == 60);
  CHECK(unique == unique_by_oracle);

  // train-rec + eval.
  pipeline::run_train_rec(cfg);
  REQUIRE(fs::exists(tmp.dir("out") + "/model.arec"));
  auto eval_cfg = cfg;
  eval_cfg.set("binned", "true");
  eval_cfg.set("spectrum", "true");
  eval_cfg.set("bins", "2,6");
  pipeline::run_eval(eval_cfg);
  const std::string report_path = tmp.dir("out") + "/report.tsv";
  REQUIRE(fs::exists(report_path));

  std::map<std::string, double> metrics;
  {
    std::ifstream f(report_path);
    std::string line;
    while (std::getline(f, line)) {
      if (line == "[bins]") break;
      const auto tab = line.find('\t');
      metrics[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
    }
  }
  CHECK(metrics.at("recall@5") <= metrics.at("recall@10"));
  for (const char* k : {"recall@5", "recall@10", "ndcg@5", "ndcg@10"}) {
    CHECK(metrics.at(k) >= 0.0);
    CHECK(metrics.at(k) <= 1.0);
  }

  // Effective-rank export recomputes from the spectrum CSV to 1e-6.
  {
    std::ifstream f(tmp.dir("out") + "/spectrum.csv");
    std::string line;
    std::getline(f, line);  // header
    double entropy = 0.0;
    while (std::getline(f, line)) {
      const auto comma = line.find(',');
      const double p = std::stod(line.substr(comma + 1));
      if (p > 0.0) entropy -= p * std::log(p);
    }
    CHECK(std::fabs(std::exp(entropy) - metrics.at("effective_rank")) < 1e-6);
  }

  // Binned diagnostic CSV: header plus one row per bin (boundaries 2,6).
  CHECK(line_count(tmp.dir("out") + "/bin_recall.csv") == 4);

  // fuse: a file with itself reproduces its order.
  auto fuse_cfg = cfg;
  fuse_cfg.set("fuse_a", tmp.dir("out") + "/predictions.tsv");
  fuse_cfg.set("fuse_b", tmp.dir("out") + "/predictions.tsv");
  pipeline::run_fuse(fuse_cfg);
  auto orig = eval::read_predictions(tmp.dir("out") + "/predictions.tsv");
  auto fused = eval::read_predictions(tmp.dir("out") + "/fused.tsv");
  REQUIRE(orig.users.size() == fused.users.size());
  std::map<data::UserId, std::vector<data::ItemId>> fused_by;
  for (auto& [uid, ids] : fused.users) fused_by[uid] = ids;
  for (auto& [uid, ids] : orig.users) CHECK(fused_by.at(uid) == ids);

  // spectrum subcommand.
  pipeline::run_spectrum(cfg);
  CHECK(fs::exists(tmp.dir("out") + "/spectrum.csv"));

  // eval rerun with identical config is byte-identical, manifest included.
  auto report_bytes = slurp(report_path);
  auto manifest_bytes = slurp(tmp.dir("out") + "/manifest-eval.tsv");
  pipeline::run_eval(eval_cfg);
  CHECK(slurp(report_path) == report_bytes);
  CHECK(slurp(tmp.dir("out") + "/manifest-eval.tsv") == manifest_bytes);
}

TEST_CASE("pipeline: manifest records version, config and checksums") {
  TempDir tmp;
  auto cfg = toy_config(tmp.dir("out"));
  pipeline::run_synth(cfg);
  std::ifstream f(tmp.dir("out") + "/manifest-synth.tsv");
  std::string all((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  CHECK(all.find(std::string("version\t") + pipeline::version_string()) !=
        std::string::npos);
  CHECK(all.find("command\tsynth") != std::string::npos);
  CHECK(all.find("config\tseed\t9") != std::string::npos);
  // Output checksums match the files on disk.
  std::istringstream lines(all);
  std::string line;
  bool saw_output = false;
  while (std::getline(lines, line)) {
    if (line.rfind("output\t", 0) != 0) continue;
    saw_output = true;
    std::istringstream ls(line);
    std::string tag, path, sum;
    std::getline(ls, tag, '\t');
    std::getline(ls, path, '\t');
    std::getline(ls, sum, '\t');
    CHECK(std::to_string(io::byte_sum_file(path)) == sum);
  }
  CHECK(saw_output);
}

TEST_CASE("pipeline: unknown command is a usage error") {
  RunConfig cfg;
  CHECK_THROWS_AS(pipeline::run_command("explode", cfg), Error);
}
