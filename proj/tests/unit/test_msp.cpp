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

#include "core/gradcheck.hpp"
#include "core/rng.hpp"
#include "msp/projection.hpp"

using namespace asymrec;
using msp::MspConfig;
using num::Matrix;
using num::Rng;
using rec::ParamStore;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

struct Fixture {
  MspConfig cfg;
  ParamStore store;

  explicit Fixture(std::size_t experts = 3, std::size_t d = 6,
                   std::size_t d_m = 4, std::uint64_t seed = 1) {
    cfg.experts = experts;
    cfg.input_dim = d;
    cfg.out_dim = d_m;
    Rng rng(seed);
    msp::init_params(cfg, store, rng);
  }
};

}  // namespace

TEST_CASE("msp: zero gate weights give uniform expert weights") {
  Fixture f;
  f.store.get("msp.gate") = Matrix(3, 6);
  Rng rng(2);
  Matrix x = random_matrix(rng, 5, 6);
  Matrix alpha = msp::gate(f.store, f.cfg, x);
  for (std::size_t i = 0; i < alpha.rows(); ++i)
    for (std::size_t e = 0; e < 3; ++e)
      CHECK(alpha.at(i, e) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("msp: dominant gate logit saturates") {
  Fixture f(3, 2, 4);
  // Make expert 1's logit exceed the others by 50 for x = (1, 0).
  Matrix g(3, 2);
  g.at(0, 0) = 0.0;
  g.at(1, 0) = 50.0;
  g.at(2, 0) = 0.0;
  f.store.get("msp.gate") = g;
  Matrix x = Matrix::from({{1.0, 0.0}});
  Matrix alpha = msp::gate(f.store, f.cfg, x);
  CHECK(alpha.at(0, 1) >= 1.0 - 1e-9);
}

TEST_CASE("msp: gate outputs stay on the probability simplex") {
  Fixture f;
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix x = random_matrix(rng, 4, 6);
    Matrix alpha = msp::gate(f.store, f.cfg, x);
    for (std::size_t i = 0; i < alpha.rows(); ++i) {
      double sum = 0.0;
      for (std::size_t e = 0; e < alpha.cols(); ++e) {
        CHECK(alpha.at(i, e) >= 0.0);
        sum += alpha.at(i, e);
      }
      CHECK(std::fabs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("msp: single expert mixture ignores the gate") {
  Fixture f(1, 5, 3, 7);
  Rng rng(5);
  Matrix x = random_matrix(rng, 4, 5);
  Matrix with_gate = msp::apply(f.store, f.cfg, x);
  f.store.get("msp.gate") = random_matrix(rng, 1, 5);  // any gate weights
  Matrix other_gate = msp::apply(f.store, f.cfg, x);
  CHECK(num::max_abs_diff(with_gate, other_gate) < 1e-12);
}

TEST_CASE("msp: identical experts collapse to one expert output") {
  Fixture f(3, 5, 4, 11);
  for (std::size_t e = 1; e < 3; ++e) {
    f.store.get("msp.e" + std::to_string(e) + ".w1") =
        f.store.get("msp.e0.w1");
    f.store.get("msp.e" + std::to_string(e) + ".b1") =
        f.store.get("msp.e0.b1");
    f.store.get("msp.e" + std::to_string(e) + ".w2") =
        f.store.get("msp.e0.w2");
    f.store.get("msp.e" + std::to_string(e) + ".b2") =
        f.store.get("msp.e0.b2");
  }
  Rng rng(6);
  Matrix x = random_matrix(rng, 6, 5);
  Matrix mixed = msp::apply(f.store, f.cfg, x);

  // Expert 0 alone, by direct recomputation.
  Fixture lone(1, 5, 4, 99);
  lone.store.get("msp.e0.w1") = f.store.get("msp.e0.w1");
  lone.store.get("msp.e0.b1") = f.store.get("msp.e0.b1");
  lone.store.get("msp.e0.w2") = f.store.get("msp.e0.w2");
  lone.store.get("msp.e0.b2") = f.store.get("msp.e0.b2");
  Matrix single = msp::apply(lone.store, lone.cfg, x);
  CHECK(num::max_abs_diff(mixed, single) < 1e-12);
}

TEST_CASE("msp: forward matches independent recomposition") {
  Fixture f(3, 6, 4, 13);
  Rng rng(7);
  Matrix x = random_matrix(rng, 5, 6);
  Matrix got = msp::apply(f.store, f.cfg, x);

  // Recompose sum_e alpha_e * f_e(x) with plain matrix calls.
  Matrix alpha = msp::gate(f.store, f.cfg, x);
  Matrix want(5, 4);
  auto erf_gelu = [](double v) {
    return 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
  };
  for (std::size_t e = 0; e < 3; ++e) {
    const std::string p = "msp.e" + std::to_string(e);
    Matrix h = num::matmul_nt(x, f.store.get(p + ".w1"));
    for (std::size_t i = 0; i < h.rows(); ++i)
      for (std::size_t j = 0; j < h.cols(); ++j)
        h.at(i, j) = erf_gelu(h.at(i, j) + f.store.get(p + ".b1").at(0, j));
    Matrix o = num::matmul_nt(h, f.store.get(p + ".w2"));
    for (std::size_t i = 0; i < o.rows(); ++i)
      for (std::size_t j = 0; j < o.cols(); ++j)
        want.at(i, j) +=
            alpha.at(i, e) * (o.at(i, j) + f.store.get(p + ".b2").at(0, j));
  }
  CHECK(num::max_abs_diff(got, want) < 1e-10);
}

TEST_CASE("msp: forward is locally continuous") {
  Fixture f(3, 6, 4, 17);
  Rng rng(8);
  Matrix x = random_matrix(rng, 1, 6);
  Matrix base = msp::apply(f.store, f.cfg, x);

  // Measure a local Lipschitz bound from moderate probes, then verify
  // tiny perturbations stay within it (with 2x headroom).
  double lip = 0.0;
  for (int probe = 0; probe < 8; ++probe) {
    Matrix dir = random_matrix(rng, 1, 6);
    const double norm = num::frobenius_norm(dir);
    Matrix xp = x;
    for (std::size_t j = 0; j < 6; ++j)
      xp.at(0, j) += dir.at(0, j) / norm * 1e-3;
    Matrix out = msp::apply(f.store, f.cfg, xp);
    lip = std::max(lip, num::frobenius_norm(num::sub(out, base)) / 1e-3);
  }
  for (int probe = 0; probe < 8; ++probe) {
    Matrix dir = random_matrix(rng, 1, 6);
    const double norm = num::frobenius_norm(dir);
    Matrix xp = x;
    for (std::size_t j = 0; j < 6; ++j)
      xp.at(0, j) += dir.at(0, j) / norm * 1e-6;
    Matrix out = msp::apply(f.store, f.cfg, xp);
    CHECK(num::frobenius_norm(num::sub(out, base)) <=
          (2.0 * lip + 1.0) * 1e-6);
  }
}

TEST_CASE("msp: gradients of experts and gate pass finite differences") {
  Fixture f(2, 4, 3, 19);
  Rng rng(9);
  Matrix x = random_matrix(rng, 3, 4);

  auto loss_value = [&]() {
    num::Tape tape;
    auto vm = rec::register_params(tape, f.store);
    auto h = msp::forward(tape, vm, f.cfg, tape.constant_ref(&x));
    return tape.value(tape.sum_squares(h)).at(0, 0);
  };
  num::Tape tape;
  auto vm = rec::register_params(tape, f.store);
  tape.backward(tape.sum_squares(msp::forward(tape, vm, f.cfg,
                                              tape.constant_ref(&x))));
  auto grads = tape.param_grads();
  std::vector<num::ParamRef> refs;
  for (auto& [name, mat] : f.store.entries()) refs.push_back({name, &mat});
  auto rep = num::finite_difference_check(loss_value, grads, refs, 1e-5, 1e-4);
  INFO(rep.describe());
  CHECK(rep.pass);
}

TEST_CASE("msp: single-expert variant basics") {
  msp::SingleExpertConfig cfg;
  cfg.input_dim = 6;
  cfg.out_dim = 4;
  cfg.hidden_dim = 3 * 4;
  ParamStore store;
  Rng rng(21);
  msp::init_single_expert_params(cfg, store, rng);

  // Zero weights: only the final bias path survives.
  store.get("se.w1") = Matrix(cfg.hidden_dim, cfg.input_dim);
  store.get("se.w2") = Matrix(cfg.out_dim, cfg.hidden_dim);
  Matrix b2(1, 4);
  b2.at(0, 0) = 0.5;
  b2.at(0, 3) = -1.25;
  store.get("se.b2") = b2;
  Matrix x = random_matrix(rng, 2, 6);
  Matrix out = msp::single_expert_apply(store, cfg, x);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(out.at(i, j) == b2.at(0, j));
}

TEST_CASE("msp: single-expert parameter count matches the mixture within 2%") {
  // The relative gap shrinks like 1/d_m, so use realistic proportions.
  const std::size_t d = 512, d_m = 64, experts = 3;
  Fixture f(experts, d, d_m, 23);
  msp::SingleExpertConfig se;
  se.input_dim = d;
  se.out_dim = d_m;
  se.hidden_dim = experts * d_m;
  ParamStore store;
  Rng rng(24);
  msp::init_single_expert_params(se, store, rng);
  const double multi = static_cast<double>(f.store.scalar_count());
  const double single = static_cast<double>(store.scalar_count());
  CHECK(std::fabs(multi - single) / multi < 0.02);
}

TEST_CASE("msp: single-expert gradient passes finite differences") {
  msp::SingleExpertConfig cfg;
  cfg.input_dim = 4;
  cfg.out_dim = 3;
  cfg.hidden_dim = 6;
  ParamStore store;
  Rng rng(25);
  msp::init_single_expert_params(cfg, store, rng);
  Matrix x = random_matrix(rng, 3, 4);

  auto loss_value = [&]() {
    num::Tape tape;
    auto vm = rec::register_params(tape, store);
    return tape
        .value(tape.sum_squares(
            msp::single_expert_forward(tape, vm, cfg, tape.constant_ref(&x))))
        .at(0, 0);
  };
  num::Tape tape;
  auto vm = rec::register_params(tape, store);
  tape.backward(tape.sum_squares(
      msp::single_expert_forward(tape, vm, cfg, tape.constant_ref(&x))));
  std::vector<num::ParamRef> refs;
  for (auto& [name, mat] : store.entries()) refs.push_back({name, &mat});
  auto rep = num::finite_difference_check(loss_value, tape.param_grads(),
                                          refs, 1e-5, 1e-4);
  INFO(rep.describe());
  CHECK(rep.pass);
}
