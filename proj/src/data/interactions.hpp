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
#include <string>
#include <vector>

namespace asymrec::data {

using ItemId = std::uint32_t;
using UserId = std::uint32_t;

/// A user's chronological interaction sequence plus the leave-last-out
/// split boundaries: items[0..n-3] train, items[n-2] validation,
/// items[n-1] test.
struct UserSequence {
  UserId user_id = 0;
  std::vector<ItemId> items;

  std::size_t train_len() const { return items.size() - 2; }
  ItemId valid_item() const { return items[items.size() - 2]; }
  ItemId test_item() const { return items.back(); }
};

struct InteractionDataset {
  std::vector<UserSequence> users;       // every sequence has >= 3 items
  std::size_t n_items = 0;               // catalog size (max id + 1 or given)
  std::size_t dropped_users = 0;         // sequences shorter than 3
  std::vector<std::uint64_t> item_frequency;  // per item, over train prefixes

  std::size_t total_interactions() const;
};

/// Raw (unsplit) interactions, the shape five_core_filter works on.
struct RawInteractions {
  std::vector<std::pair<UserId, std::vector<ItemId>>> users;
};

/// Text format: one user per line, `user_id<TAB>item_id item_id ...`.
RawInteractions read_interaction_file(const std::string& path);
void write_interaction_file(const RawInteractions& raw,
                            const std::string& path);

/// Materializes splits and train-prefix frequencies. Users with fewer
/// than 3 items are dropped and counted. n_items of 0 means infer as
/// max id + 1.
InteractionDataset build_dataset(const RawInteractions& raw,
                                 std::size_t n_items = 0);

InteractionDataset load_interactions(const std::string& path,
                                     std::size_t n_items = 0);

/// Iteratively removes users and items with fewer than min_count
/// interactions until a fixed point.
RawInteractions five_core_filter(const RawInteractions& raw,
                                 std::size_t min_count = 5);

/// Upper-inclusive frequency boundaries; n boundaries make n+1 bins.
/// boundaries[i] is the largest count belonging to bin i.
struct FrequencyBins {
  std::vector<std::uint64_t> boundaries;

  std::size_t bin_count() const { return boundaries.size() + 1; }
  std::size_t bin_of(std::uint64_t count) const;
  void validate() const;
};

/// Total assignment item id -> bin index from training-prefix counts;
/// items unseen in training land in the lowest bin.
std::vector<std::size_t> frequency_bin_assign(const InteractionDataset& ds,
                                              const FrequencyBins& bins);

}  // namespace asymrec::data
