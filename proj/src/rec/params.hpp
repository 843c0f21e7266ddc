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

#include <map>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/matrix.hpp"
#include "core/rng.hpp"
#include "core/tape.hpp"

namespace asymrec::rec {

/// Ordered, named parameter set. Insertion order is the canonical order
/// for optimizer state, serialization and tape registration, which keeps
/// training byte-reproducible.
class ParamStore {
 public:
  num::Matrix& add(const std::string& name, num::Matrix init) {
    if (index_.count(name))
      throw usage_error("ParamStore: duplicate parameter " + name);
    index_[name] = items_.size();
    items_.emplace_back(name, std::move(init));
    return items_.back().second;
  }

  num::Matrix& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end())
      throw usage_error("ParamStore: unknown parameter " + name);
    return items_[it->second].second;
  }
  const num::Matrix& get(const std::string& name) const {
    return const_cast<ParamStore*>(this)->get(name);
  }
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return items_.size(); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, m] : items_) n += m.size();
    return n;
  }
  const std::vector<std::pair<std::string, num::Matrix>>& entries() const {
    return items_;
  }
  std::vector<std::pair<std::string, num::Matrix>>& entries() {
    return items_;
  }

 private:
  std::vector<std::pair<std::string, num::Matrix>> items_;
  std::map<std::string, std::size_t> index_;
};

/// Tape handles for every parameter in a store.
struct VarMap {
  std::map<std::string, num::Tape::Var> vars;

  num::Tape::Var at(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end())
      throw usage_error("VarMap: unknown parameter " + name);
    return it->second;
  }
};

inline VarMap register_params(num::Tape& tape, const ParamStore& store) {
  VarMap vm;
  for (const auto& [name, mat] : store.entries())
    vm.vars[name] = tape.param_ref(&mat, name);
  return vm;
}

/// Glorot-uniform weight init; biases start at zero.
inline num::Matrix glorot(std::size_t rows, std::size_t cols, num::Rng& rng) {
  num::Matrix m(rows, cols);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

}  // namespace asymrec::rec
