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

#include "pipeline/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace asymrec::pipeline {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

const std::map<std::string, std::string>& RunConfig::defaults() {
  static const std::map<std::string, std::string> kDefaults = {
      // run
      {"seed", "1"},
      {"out_dir", "out"},
      {"verbose", "false"},
      // data paths (inputs; synth writes them as outputs)
      {"embeddings", ""},
      {"interactions", ""},
      {"five_core", "false"},
      // synthetic generator
      {"n_items", "1000"},
      {"dim", "64"},
      {"n_users", "500"},
      {"clusters", "10"},
      {"seq_min", "5"},
      {"seq_max", "10"},
      {"stay_prob", "0.8"},
      {"center_scale", "1.0"},
      {"noise_scale", "0.15"},
      // quantizer
      {"proj_dim", "512"},
      {"subspaces", "32"},
      {"levels", "2"},
      {"codebook_size", "256"},
      {"lambda_bal", "0.01"},
      {"lambda_reg", "0.01"},
      {"ema_gamma", "0.99"},
      {"mhq_lr", "0.001"},
      {"mhq_epochs", "50"},
      {"mhq_batch", "256"},
      // recommender
      {"experts", "3"},
      {"hidden_dim", "448"},
      {"decoder_layers", "2"},
      {"attn_heads", "8"},
      {"max_len", "50"},
      {"dropout", "0.1"},
      {"rec_lr", "0.003"},
      {"momentum", "0.9"},
      {"rec_batch", "256"},
      {"rec_max_epochs", "100"},
      {"patience", "20"},
      {"per_position", "true"},
      {"variant", "full"},
      // evaluation
      {"split", "test"},
      {"bins", "6,15,50"},
      {"negatives", "99"},
      {"k0", "50"},
      {"topk", "100"},
      {"binned", "false"},
      {"spectrum", "false"},
      // output file names (resolved under out_dir unless absolute)
      {"snapshot", "mhq.snapshot"},
      {"loss_csv", "mhq_loss.csv"},
      {"codes", "codes.tsv"},
      {"collisions", "collisions.tsv"},
      {"checkpoint", "model.arec"},
      {"train_log", "rec_train.csv"},
      {"report", "report.tsv"},
      {"predictions", "predictions.tsv"},
      {"bin_csv", "bin_recall.csv"},
      {"spectrum_csv", "spectrum.csv"},
      {"spectrum_report", "spectrum_report.tsv"},
      {"fused", "fused.tsv"},
      // fusion inputs
      {"fuse_a", ""},
      {"fuse_b", ""},
  };
  return kDefaults;
}

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end())
    throw usage_error("unknown configuration key: " + key);
  it->second = value;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open config file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw data_error(path + ":" + std::to_string(line_no) +
                       ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set(key, value);
    } catch (const Error& e) {
      throw usage_error(path + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw usage_error("unknown configuration key: " + key);
  return it->second;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw usage_error("config " + key + ": expected a nonnegative integer, "
                      "got '" + v + "'");
  return out;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  return static_cast<std::size_t>(get_u64(key));
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw usage_error("config " + key + ": expected a number, got '" + v +
                      "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw usage_error("config " + key + ": expected true/false, got '" + v +
                    "'");
}

std::vector<std::uint64_t> RunConfig::get_u64_list(
    const std::string& key) const {
  const std::string& v = get(key);
  std::vector<std::uint64_t> out;
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || p != tok.data() + tok.size())
      throw usage_error("config " + key + ": expected comma-separated "
                        "integers, got '" + v + "'");
    out.push_back(x);
  }
  return out;
}

std::string RunConfig::out_path(const std::string& key) const {
  const std::string& name = get(key);
  if (name.empty()) throw usage_error("config " + key + ": empty path");
  if (name.front() == '/') return name;
  return get("out_dir") + "/" + name;
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
  return os.str();
}

}  // namespace asymrec::pipeline
