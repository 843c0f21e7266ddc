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

#include "core/tape.hpp"

#include <cmath>
#include <numbers>

#include "core/error.hpp"

namespace asymrec::num {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

void require(bool ok, const std::string& what) {
  if (!ok) throw usage_error("tape: " + what);
}

}  // namespace

Tape::Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Matrix& Tape::grad_buf(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.grad_live) {
    n.grad = Matrix(n.val().rows(), n.val().cols());
    n.grad_live = true;
  }
  return n.grad;
}

Tape::Var Tape::param(Matrix value, std::string name) {
  Node n;
  n.owned = std::move(value);
  n.tracked = true;
  n.name = std::move(name);
  return push(std::move(n));
}

Tape::Var Tape::param_ref(const Matrix* value, std::string name) {
  Node n;
  n.view = value;
  n.tracked = true;
  n.name = std::move(name);
  return push(std::move(n));
}

Tape::Var Tape::constant(Matrix value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Tape::Var Tape::constant_ref(const Matrix* value) {
  Node n;
  n.view = value;
  return push(std::move(n));
}

const Matrix& Tape::value(Var v) const { return nodes_[v.id].val(); }

Tape::Var Tape::matmul(Var a, Var b) {
  Node n;
  n.owned = num::matmul(val(a.id), val(b.id));
  n.back = [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    t.grad_buf(a.id) += num::matmul_nt(g, t.val(b.id));
    t.grad_buf(b.id) += num::matmul_tn(t.val(a.id), g);
  };
  return push(std::move(n));
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  Node n;
  n.owned = num::matmul_nt(val(a.id), val(b.id));
  n.back = [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    t.grad_buf(a.id) += num::matmul(g, t.val(b.id));
    t.grad_buf(b.id) += num::matmul_tn(g, t.val(a.id));
  };
  return push(std::move(n));
}

Tape::Var Tape::add(Var a, Var b) {
  Node n;
  n.owned = num::add(val(a.id), val(b.id));
  n.back = [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    t.grad_buf(a.id) += g;
    t.grad_buf(b.id) += g;
  };
  return push(std::move(n));
}

Tape::Var Tape::sub(Var a, Var b) {
  Node n;
  n.owned = num::sub(val(a.id), val(b.id));
  n.back = [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    t.grad_buf(a.id) += g;
    t.grad_buf(b.id) -= g;
  };
  return push(std::move(n));
}

Tape::Var Tape::add_row_broadcast(Var a, Var row) {
  const Matrix& av = val(a.id);
  const Matrix& rv = val(row.id);
  require(rv.rows() == 1 && rv.cols() == av.cols(),
          "add_row_broadcast: row must be 1 x cols");
  Node n;
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out.at(i, j) += rv.at(0, j);
  n.owned = std::move(out);
  n.back = [a, row](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    t.grad_buf(a.id) += g;
    Matrix& rg = t.grad_buf(row.id);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) rg.at(0, j) += g.at(i, j);
  };
  return push(std::move(n));
}

Tape::Var Tape::hadamard(Var a, Var b) {
  Node n;
  n.owned = num::hadamard(val(a.id), val(b.id));
  n.back = [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    t.grad_buf(a.id) += num::hadamard(g, t.val(b.id));
    t.grad_buf(b.id) += num::hadamard(g, t.val(a.id));
  };
  return push(std::move(n));
}

Tape::Var Tape::scale(Var a, double c) {
  Node n;
  n.owned = num::scale(val(a.id), c);
  n.back = [a, c](Tape& t, std::size_t self) {
    t.grad_buf(a.id) += num::scale(t.nodes_[self].grad, c);
  };
  return push(std::move(n));
}

Tape::Var Tape::scale_rows(Var a, Var col) {
  const Matrix& av = val(a.id);
  const Matrix& cv = val(col.id);
  require(cv.cols() == 1 && cv.rows() == av.rows(),
          "scale_rows: col must be rows x 1");
  Node n;
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    const double s = cv.at(i, 0);
    for (std::size_t j = 0; j < out.cols(); ++j) out.at(i, j) *= s;
  }
  n.owned = std::move(out);
  n.back = [a, col](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& av2 = t.val(a.id);
    const Matrix& cv2 = t.val(col.id);
    Matrix& ag = t.grad_buf(a.id);
    Matrix& cg = t.grad_buf(col.id);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const double s = cv2.at(i, 0);
      double acc = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) {
        ag.at(i, j) += g.at(i, j) * s;
        acc += g.at(i, j) * av2.at(i, j);
      }
      cg.at(i, 0) += acc;
    }
  };
  return push(std::move(n));
}

Tape::Var Tape::slice_rows(Var a, std::size_t r0, std::size_t nrows) {
  const Matrix& av = val(a.id);
  require(r0 + nrows <= av.rows(), "slice_rows out of range");
  Node n;
  Matrix out(nrows, av.cols());
  for (std::size_t i = 0; i < nrows; ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out.at(i, j) = av.at(r0 + i, j);
  n.owned = std::move(out);
  n.back = [a, r0](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ag = t.grad_buf(a.id);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ag.at(r0 + i, j) += g.at(i, j);
  };
  return push(std::move(n));
}

Tape::Var Tape::slice_cols(Var a, std::size_t c0, std::size_t ncols) {
  const Matrix& av = val(a.id);
  require(c0 + ncols <= av.cols(), "slice_cols out of range");
  Node n;
  Matrix out(av.rows(), ncols);
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < ncols; ++j) out.at(i, j) = av.at(i, c0 + j);
  n.owned = std::move(out);
  n.back = [a, c0](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ag = t.grad_buf(a.id);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ag.at(i, c0 + j) += g.at(i, j);
  };
  return push(std::move(n));
}

Tape::Var Tape::concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no parts");
  const std::size_t rows = val(parts[0].id).rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    require(val(p.id).rows() == rows, "concat_cols: row mismatch");
    cols += val(p.id).cols();
  }
  Node n;
  Matrix out(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Matrix& pv = val(p.id);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < pv.cols(); ++j)
        out.at(i, off + j) = pv.at(i, j);
    off += pv.cols();
  }
  n.owned = std::move(out);
  std::vector<Var> saved(parts.begin(), parts.end());
  n.back = [saved](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    std::size_t off = 0;
    for (Var p : saved) {
      Matrix& pg = t.grad_buf(p.id);
      for (std::size_t i = 0; i < pg.rows(); ++i)
        for (std::size_t j = 0; j < pg.cols(); ++j)
          pg.at(i, j) += g.at(i, off + j);
      off += pg.cols();
    }
  };
  return push(std::move(n));
}

Tape::Var Tape::gelu(Var a) {
  const Matrix& av = val(a.id);
  Node n;
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = av.data()[i];
    out.data()[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
  n.owned = std::move(out);
  n.back = [a](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& av2 = t.val(a.id);
    Matrix& ag = t.grad_buf(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = av2.data()[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      ag.data()[i] += g.data()[i] * (cdf + x * pdf);
    }
  };
  return push(std::move(n));
}

namespace {

// Softmax over row entries [0, limit); entries past limit get 0.
void softmax_row(const double* in, double* out, std::size_t limit,
                 std::size_t cols) {
  double mx = in[0];
  for (std::size_t j = 1; j < limit; ++j) mx = std::max(mx, in[j]);
  double z = 0.0;
  for (std::size_t j = 0; j < limit; ++j) {
    out[j] = std::exp(in[j] - mx);
    z += out[j];
  }
  for (std::size_t j = 0; j < limit; ++j) out[j] /= z;
  for (std::size_t j = limit; j < cols; ++j) out[j] = 0.0;
}

// dL/dx = p * (dL/dp - sum_k dL/dp_k * p_k), rowwise.
void softmax_backward_row(const double* p, const double* gp, double* gx,
                          std::size_t limit) {
  double inner = 0.0;
  for (std::size_t j = 0; j < limit; ++j) inner += gp[j] * p[j];
  for (std::size_t j = 0; j < limit; ++j) gx[j] += p[j] * (gp[j] - inner);
}

}  // namespace

Tape::Var Tape::softmax_rows(Var a) {
  const Matrix& av = val(a.id);
  Node n;
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i)
    softmax_row(av.row(i), out.row(i), av.cols(), av.cols());
  n.owned = std::move(out);
  n.back = [a](Tape& t, std::size_t self) {
    const Matrix& p = t.nodes_[self].val();
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ag = t.grad_buf(a.id);
    for (std::size_t i = 0; i < p.rows(); ++i)
      softmax_backward_row(p.row(i), g.row(i), ag.row(i), p.cols());
  };
  return push(std::move(n));
}

Tape::Var Tape::causal_softmax_rows(Var a) {
  const Matrix& av = val(a.id);
  require(av.rows() == av.cols(), "causal_softmax_rows: square scores");
  Node n;
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i)
    softmax_row(av.row(i), out.row(i), i + 1, av.cols());
  n.owned = std::move(out);
  n.back = [a](Tape& t, std::size_t self) {
    const Matrix& p = t.nodes_[self].val();
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ag = t.grad_buf(a.id);
    for (std::size_t i = 0; i < p.rows(); ++i)
      softmax_backward_row(p.row(i), g.row(i), ag.row(i), i + 1);
  };
  return push(std::move(n));
}

Tape::Var Tape::layer_norm_rows(Var x, Var gain, Var bias, double eps) {
  const Matrix& xv = val(x.id);
  const Matrix& gv = val(gain.id);
  const Matrix& bv = val(bias.id);
  require(gv.rows() == 1 && gv.cols() == xv.cols() && bv.rows() == 1 &&
              bv.cols() == xv.cols(),
          "layer_norm_rows: gain/bias must be 1 x cols");
  const std::size_t cols = xv.cols();
  Node n;
  Matrix out(xv.rows(), cols);
  Matrix xhat(xv.rows(), cols);   // saved for backward
  Matrix invstd(xv.rows(), 1);
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mean += xv.at(i, j);
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = xv.at(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double is = 1.0 / std::sqrt(var + eps);
    invstd.at(i, 0) = is;
    for (std::size_t j = 0; j < cols; ++j) {
      const double h = (xv.at(i, j) - mean) * is;
      xhat.at(i, j) = h;
      out.at(i, j) = h * gv.at(0, j) + bv.at(0, j);
    }
  }
  n.owned = std::move(out);
  n.back = [x, gain, bias, xhat = std::move(xhat),
            invstd = std::move(invstd)](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& gv2 = t.val(gain.id);
    Matrix& xg = t.grad_buf(x.id);
    Matrix& gg = t.grad_buf(gain.id);
    Matrix& bg = t.grad_buf(bias.id);
    const std::size_t cols = g.cols();
    const double nc = static_cast<double>(cols);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double sum_dh = 0.0, sum_dh_h = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const double dy = g.at(i, j);
        gg.at(0, j) += dy * xhat.at(i, j);
        bg.at(0, j) += dy;
        const double dh = dy * gv2.at(0, j);
        sum_dh += dh;
        sum_dh_h += dh * xhat.at(i, j);
      }
      const double is = invstd.at(i, 0);
      for (std::size_t j = 0; j < cols; ++j) {
        const double dh = g.at(i, j) * gv2.at(0, j);
        xg.at(i, j) +=
            is * (dh - sum_dh / nc - xhat.at(i, j) * sum_dh_h / nc);
      }
    }
  };
  return push(std::move(n));
}

Tape::Var Tape::sum_all(Var a) {
  Node n;
  Matrix out(1, 1);
  out.at(0, 0) = num::sum_all(val(a.id));
  n.owned = std::move(out);
  n.back = [a](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad.at(0, 0);
    Matrix& ag = t.grad_buf(a.id);
    for (std::size_t i = 0; i < ag.size(); ++i) ag.data()[i] += g;
  };
  return push(std::move(n));
}

Tape::Var Tape::sum_squares(Var a) {
  Node n;
  Matrix out(1, 1);
  out.at(0, 0) = num::sum_of_squares(val(a.id));
  n.owned = std::move(out);
  n.back = [a](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad.at(0, 0);
    const Matrix& av = t.val(a.id);
    Matrix& ag = t.grad_buf(a.id);
    for (std::size_t i = 0; i < ag.size(); ++i)
      ag.data()[i] += 2.0 * g * av.data()[i];
  };
  return push(std::move(n));
}

Tape::Var Tape::abs_elems(Var a) {
  const Matrix& av = val(a.id);
  Node n;
  Matrix out = av;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = std::fabs(out.data()[i]);
  n.owned = std::move(out);
  n.back = [a](Tape& t, std::size_t self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& av2 = t.val(a.id);
    Matrix& ag = t.grad_buf(a.id);
    for (std::size_t i = 0; i < ag.size(); ++i) {
      const double x = av2.data()[i];
      const double sgn = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
      ag.data()[i] += g.data()[i] * sgn;
    }
  };
  return push(std::move(n));
}

Tape::Var Tape::sqrt_scalar(Var a) {
  const Matrix& av = val(a.id);
  require(av.rows() == 1 && av.cols() == 1, "sqrt_scalar: scalar input");
  Node n;
  Matrix out(1, 1);
  out.at(0, 0) = std::sqrt(av.at(0, 0));
  n.owned = std::move(out);
  n.back = [a](Tape& t, std::size_t self) {
    const double y = t.nodes_[self].val().at(0, 0);
    if (y <= 1e-150) return;  // subgradient 0 at the origin
    t.grad_buf(a.id).at(0, 0) += t.nodes_[self].grad.at(0, 0) / (2.0 * y);
  };
  return push(std::move(n));
}

Tape::Var Tape::cross_entropy_sum(Var logits,
                                  const std::vector<std::size_t>& targets) {
  const Matrix& lv = val(logits.id);
  require(targets.size() == lv.rows(), "cross_entropy_sum: one target per row");
  for (std::size_t t : targets)
    require(t < lv.cols(), "cross_entropy_sum: target out of range");
  Node n;
  Matrix probs(lv.rows(), lv.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < lv.rows(); ++i) {
    softmax_row(lv.row(i), probs.row(i), lv.cols(), lv.cols());
    // -log p computed from the stabilized logits, not from p, for accuracy.
    double mx = lv.at(i, 0);
    for (std::size_t j = 1; j < lv.cols(); ++j) mx = std::max(mx, lv.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < lv.cols(); ++j) z += std::exp(lv.at(i, j) - mx);
    loss += std::log(z) - (lv.at(i, targets[i]) - mx);
  }
  Matrix out(1, 1);
  out.at(0, 0) = loss;
  n.owned = std::move(out);
  n.back = [logits, targets, probs = std::move(probs)](Tape& t,
                                                       std::size_t self) {
    const double g = t.nodes_[self].grad.at(0, 0);
    Matrix& lg = t.grad_buf(logits.id);
    for (std::size_t i = 0; i < lg.rows(); ++i) {
      for (std::size_t j = 0; j < lg.cols(); ++j)
        lg.at(i, j) += g * probs.at(i, j);
      lg.at(i, targets[i]) -= g;
    }
  };
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  require(loss.valid() && loss.id < nodes_.size(), "backward: bad node");
  const Matrix& lv = val(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1)
    throw usage_error("tape: backward requires a scalar (1x1) loss node");
  grad_buf(loss.id).at(0, 0) = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.grad_live || !n.back) continue;
    n.back(*this, i);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad_live) return n.grad;
  return Matrix(n.val().rows(), n.val().cols());
}

std::map<std::string, Matrix> Tape::param_grads() const {
  std::map<std::string, Matrix> out;
  for (const Node& n : nodes_) {
    if (!n.tracked) continue;
    if (n.grad_live)
      out[n.name] = n.grad;
    else
      out[n.name] = Matrix(n.val().rows(), n.val().cols());
  }
  return out;
}

}  // namespace asymrec::num
