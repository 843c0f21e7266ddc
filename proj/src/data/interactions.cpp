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

#include "data/interactions.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "core/error.hpp"

namespace asymrec::data {

namespace {

std::uint64_t parse_uint(std::string_view tok, const std::string& path,
                         std::size_t line_no) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw data_error(path + ":" + std::to_string(line_no) +
                     ": expected a nonnegative integer, got '" +
                     std::string(tok) + "'");
  return v;
}

}  // namespace

std::size_t InteractionDataset::total_interactions() const {
  std::size_t n = 0;
  for (const auto& u : users) n += u.items.size();
  return n;
}

RawInteractions read_interaction_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open: " + path);
  RawInteractions raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw data_error(path + ":" + std::to_string(line_no) +
                       ": missing tab separator");
    const UserId uid = static_cast<UserId>(
        parse_uint(std::string_view(line).substr(0, tab), path, line_no));
    std::vector<ItemId> items;
    std::istringstream rest(line.substr(tab + 1));
    std::string tok;
    while (rest >> tok)
      items.push_back(
          static_cast<ItemId>(parse_uint(tok, path, line_no)));
    raw.users.emplace_back(uid, std::move(items));
  }
  return raw;
}

void write_interaction_file(const RawInteractions& raw,
                            const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw data_error("cannot open for writing: " + path);
  for (const auto& [uid, items] : raw.users) {
    f << uid << '\t';
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) f << ' ';
      f << items[i];
    }
    f << '\n';
  }
  if (!f) throw data_error("write failed: " + path);
}

InteractionDataset build_dataset(const RawInteractions& raw,
                                 std::size_t n_items) {
  InteractionDataset ds;
  std::size_t max_id = 0;
  bool any = false;
  for (const auto& [uid, items] : raw.users)
    for (ItemId it : items) {
      max_id = std::max(max_id, static_cast<std::size_t>(it));
      any = true;
    }
  ds.n_items = n_items ? n_items : (any ? max_id + 1 : 0);
  if (any && max_id >= ds.n_items)
    throw data_error("interaction references item id " +
                     std::to_string(max_id) + " outside catalog of " +
                     std::to_string(ds.n_items));

  for (const auto& [uid, items] : raw.users) {
    if (items.size() < 3) {
      ++ds.dropped_users;
      continue;
    }
    UserSequence seq;
    seq.user_id = uid;
    seq.items = items;
    ds.users.push_back(std::move(seq));
  }

  ds.item_frequency.assign(ds.n_items, 0);
  for (const auto& u : ds.users)
    for (std::size_t i = 0; i < u.train_len(); ++i)
      ++ds.item_frequency[u.items[i]];
  return ds;
}

InteractionDataset load_interactions(const std::string& path,
                                     std::size_t n_items) {
  return build_dataset(read_interaction_file(path), n_items);
}

RawInteractions five_core_filter(const RawInteractions& raw,
                                 std::size_t min_count) {
  RawInteractions cur = raw;
  for (;;) {
    // Item interaction counts over the current corpus.
    std::unordered_map<ItemId, std::size_t> item_count;
    for (const auto& [uid, items] : cur.users)
      for (ItemId it : items) ++item_count[it];

    bool changed = false;
    RawInteractions next;
    for (const auto& [uid, items] : cur.users) {
      std::vector<ItemId> kept;
      kept.reserve(items.size());
      for (ItemId it : items) {
        if (item_count[it] >= min_count)
          kept.push_back(it);
        else
          changed = true;
      }
      if (kept.size() >= min_count) {
        next.users.emplace_back(uid, std::move(kept));
      } else {
        changed = true;
      }
    }
    cur = std::move(next);
    if (!changed) break;
  }
  return cur;
}

std::size_t FrequencyBins::bin_of(std::uint64_t count) const {
  for (std::size_t i = 0; i < boundaries.size(); ++i)
    if (count <= boundaries[i]) return i;
  return boundaries.size();
}

void FrequencyBins::validate() const {
  for (std::size_t i = 1; i < boundaries.size(); ++i)
    if (boundaries[i] <= boundaries[i - 1])
      throw usage_error("frequency bin boundaries must be strictly increasing");
}

std::vector<std::size_t> frequency_bin_assign(const InteractionDataset& ds,
                                              const FrequencyBins& bins) {
  bins.validate();
  std::vector<std::size_t> assign(ds.n_items, 0);
  for (std::size_t it = 0; it < ds.n_items; ++it)
    assign[it] = bins.bin_of(ds.item_frequency[it]);
  return assign;
}

}  // namespace asymrec::data
