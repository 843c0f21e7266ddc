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

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "core/matrix.hpp"

namespace asymrec::num {

/// Reverse-mode differentiation tape over Matrix values.
///
/// Build a computation forward with the factory methods, then call
/// backward() on a scalar (1x1) node; gradients for every tracked
/// parameter are then available through grad() / param_grads().
///
/// One tape per training step, single-threaded; leaves registered with
/// param_ref()/constant_ref() alias caller-owned matrices that must stay
/// alive and unmodified until the tape is dropped.
class Tape {
 public:
  struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
    bool valid() const { return id != static_cast<std::size_t>(-1); }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Var param(Matrix value, std::string name);
  Var param_ref(const Matrix* value, std::string name);
  Var constant(Matrix value);
  Var constant_ref(const Matrix* value);

  // Linear algebra.
  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_row_broadcast(Var a, Var row);  // row is 1 x cols, added per row
  Var hadamard(Var a, Var b);
  Var scale(Var a, double c);
  Var scale_rows(Var a, Var col);  // col is rows x 1; row i scaled by col[i]

  // Structure.
  Var slice_rows(Var a, std::size_t r0, std::size_t n);
  Var slice_cols(Var a, std::size_t c0, std::size_t n);
  Var concat_cols(std::span<const Var> parts);

  // Nonlinearities and reductions.
  Var gelu(Var a);
  Var softmax_rows(Var a);
  /// Row-wise softmax with a causal mask: row i only sees columns <= i.
  Var causal_softmax_rows(Var a);
  Var layer_norm_rows(Var x, Var gain, Var bias, double eps = 1e-5);
  Var sum_all(Var a);     // 1x1
  Var sum_squares(Var a); // 1x1
  Var abs_elems(Var a);
  Var sqrt_scalar(Var a); // 1x1 -> 1x1
  /// Sum over rows of -log softmax(logits_row)[target_row]. Returns 1x1.
  Var cross_entropy_sum(Var logits, const std::vector<std::size_t>& targets);

  const Matrix& value(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Reverse pass from a scalar loss. Throws usage error on non-scalar.
  void backward(Var loss);

  /// Gradient of a node after backward(). Zero matrix if untouched.
  Matrix grad(Var v) const;
  /// name -> gradient for every tracked parameter.
  std::map<std::string, Matrix> param_grads() const;

 private:
  struct Node {
    Matrix owned;
    const Matrix* view = nullptr;
    Matrix grad;
    bool grad_live = false;
    bool tracked = false;
    std::string name;
    std::function<void(Tape&, std::size_t)> back;

    const Matrix& val() const { return view ? *view : owned; }
  };

  const Matrix& val(std::size_t id) const { return nodes_[id].val(); }
  Matrix& grad_buf(std::size_t id);
  bool grad_live(std::size_t id) const { return nodes_[id].grad_live; }
  Var push(Node n);

  std::vector<Node> nodes_;
};

}  // namespace asymrec::num
