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

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace asymrec::num {

/// A named parameter the checker may perturb in place.
struct ParamRef {
  std::string name;
  Matrix* value = nullptr;
};

struct FdReport {
  bool pass = true;
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  // Worst coordinate seen.
  std::string worst_param;
  std::size_t worst_row = 0;
  std::size_t worst_col = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  std::string describe() const;
};

/// Compares analytic gradients against central finite differences over
/// every coordinate of every parameter. loss_fn must read the parameter
/// matrices through the ParamRef pointers (they are perturbed and
/// restored one coordinate at a time). grads holds the analytic
/// gradients evaluated at the unperturbed point.
FdReport finite_difference_check(
    const std::function<double()>& loss_fn,
    const std::map<std::string, Matrix>& grads,
    const std::vector<ParamRef>& params, double step, double tol);

}  // namespace asymrec::num
