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

#include <string>

#include "rec/model.hpp"

namespace asymrec::rec {

struct LoadedCheckpoint {
  RecModel model;
  std::uint64_t mhq_snapshot_checksum = 0;
};

// "AREC" checkpoint: config block, the MHQ snapshot reference checksum,
// then every parameter tensor (name, shape, f64 data) in canonical
// order, with the byte-sum trailer shared by all binary formats here.
void save_checkpoint(const RecModel& model, std::uint64_t mhq_snapshot_checksum,
                     const std::string& path);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace asymrec::rec
