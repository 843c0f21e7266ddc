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
#include <map>
#include <string>
#include <vector>

namespace asymrec::pipeline {

/// Flat key = value run configuration. Every key has a default; unknown
/// keys are usage errors, which catches typos at the command line.
/// Values can come from a config file and be overridden per run.
class RunConfig {
 public:
  RunConfig();

  static const std::map<std::string, std::string>& defaults();

  void set(const std::string& key, const std::string& value);
  /// key = value lines, '#' starts a comment, blank lines ignored.
  void load_file(const std::string& path);

  const std::string& get(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Comma-separated nonnegative integers; empty string means empty.
  std::vector<std::uint64_t> get_u64_list(const std::string& key) const;

  /// Output file location: `key`'s value resolved under out_dir unless
  /// it is an absolute path.
  std::string out_path(const std::string& key) const;

  /// Canonical serialized form (sorted keys), used by manifests.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace asymrec::pipeline
