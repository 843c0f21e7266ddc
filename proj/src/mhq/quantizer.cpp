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

#include "mhq/quantizer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "core/binio.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/tape.hpp"

namespace asymrec::mhq {

void MhqConfig::validate() const {
  if (proj_dim == 0 || subspaces == 0 || levels == 0)
    throw usage_error("mhq: proj_dim, subspaces and levels must be positive");
  if (proj_dim % subspaces != 0)
    throw usage_error("mhq: proj_dim must be divisible by subspaces");
  if (codebook_size < 2) throw usage_error("mhq: codebook_size must be >= 2");
  if (ema_gamma <= 0.0 || ema_gamma >= 1.0) {
    // gamma = 0 is allowed for the no-memory limit used in tests.
    if (ema_gamma != 0.0)
      throw usage_error("mhq: ema_gamma must lie in [0, 1)");
  }
  if (lr <= 0.0) throw usage_error("mhq: lr must be positive");
  if (batch == 0) throw usage_error("mhq: batch must be positive");
}

void Codebook::refresh_centroids() {
  const std::size_t k = ema_count.size();
  const std::size_t d = ema_sum.cols();
  for (std::size_t i = 0; i < k; ++i) {
    const double denom = ema_count[i] + kEmaEpsilon;
    for (std::size_t j = 0; j < d; ++j)
      centroids.at(i, j) = ema_sum.at(i, j) / denom;
  }
}

num::Matrix project(const CodebookSet& cb, const num::Matrix& x_row) {
  if (x_row.rows() != 1 || x_row.cols() != cb.input_dim)
    throw usage_error("mhq::project: expected a 1 x input_dim row");
  return num::matmul_nt(x_row, cb.w_p);
}

std::vector<num::Matrix> split_subspaces(const num::Matrix& tilde,
                                         std::size_t subspaces) {
  if (tilde.rows() != 1) throw usage_error("split_subspaces: expected a row");
  if (subspaces == 0 || tilde.cols() % subspaces != 0)
    throw usage_error("split_subspaces: length not divisible by subspaces");
  const std::size_t d_sub = tilde.cols() / subspaces;
  std::vector<num::Matrix> out;
  out.reserve(subspaces);
  for (std::size_t m = 0; m < subspaces; ++m) {
    num::Matrix z(1, d_sub);
    for (std::size_t j = 0; j < d_sub; ++j)
      z.at(0, j) = tilde.at(0, m * d_sub + j);
    out.push_back(std::move(z));
  }
  return out;
}

namespace {

// Nearest centroid by L2; ties resolve to the lowest index.
std::uint32_t nearest_centroid(const num::Matrix& centroids,
                               const double* z) {
  std::uint32_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centroids.rows(); ++k) {
    const double* c = centroids.row(k);
    double dist = 0.0;
    for (std::size_t j = 0; j < centroids.cols(); ++j) {
      const double d = z[j] - c[j];
      dist += d * d;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<std::uint32_t>(k);
    }
  }
  return best;
}

}  // namespace

QuantizeResult quantize_subspace(const CodebookSet& cb, std::size_t m,
                                 const num::Matrix& z) {
  const std::size_t d_sub = cb.cfg.subspace_dim();
  if (z.rows() != 1 || z.cols() != d_sub)
    throw usage_error("quantize_subspace: expected a 1 x d_sub row");
  QuantizeResult res;
  res.reconstruction = num::Matrix(1, d_sub);
  res.residual_trace.push_back(z);
  num::Matrix r = z;
  for (std::size_t l = 0; l < cb.cfg.levels; ++l) {
    const Codebook& book = cb.book(m, l);
    const std::uint32_t idx = nearest_centroid(book.centroids, r.row(0));
    res.indices.push_back(idx);
    for (std::size_t j = 0; j < d_sub; ++j) {
      const double c = book.centroids.at(idx, j);
      res.reconstruction.at(0, j) += c;
      r.at(0, j) -= c;
    }
    res.residual_trace.push_back(r);
  }
  return res;
}

SemanticCode assign_code(const CodebookSet& cb, const num::Matrix& x_row) {
  const num::Matrix tilde = project(cb, x_row);
  const auto zs = split_subspaces(tilde, cb.cfg.subspaces);
  SemanticCode code;
  code.indices.reserve(cb.cfg.code_len());
  for (std::size_t m = 0; m < cb.cfg.subspaces; ++m) {
    auto q = quantize_subspace(cb, m, zs[m]);
    code.indices.insert(code.indices.end(), q.indices.begin(),
                        q.indices.end());
  }
  return code;
}

std::vector<SemanticCode> assign_all(const CodebookSet& cb,
                                     const data::EmbeddingTable& table) {
  if (table.dim != cb.input_dim)
    throw usage_error("assign_all: table dim does not match codebooks");
  std::vector<SemanticCode> out;
  out.reserve(table.n_items);
  for (std::size_t i = 0; i < table.n_items; ++i)
    out.push_back(assign_code(cb, table.item_row(i)));
  return out;
}

BatchForward forward_batch(const CodebookSet& cb, const num::Matrix& x_batch) {
  if (x_batch.cols() != cb.input_dim)
    throw usage_error("forward_batch: bad input width");
  const std::size_t b = x_batch.rows();
  const std::size_t d_sub = cb.cfg.subspace_dim();
  BatchForward fwd;
  fwd.projected = num::matmul_nt(x_batch, cb.w_p);
  fwd.reconstructed = num::Matrix(b, cb.cfg.proj_dim);
  fwd.levels.resize(cb.cfg.code_len());
  for (std::size_t m = 0; m < cb.cfg.subspaces; ++m)
    for (std::size_t l = 0; l < cb.cfg.levels; ++l) {
      auto& la = fwd.levels[m * cb.cfg.levels + l];
      la.indices.resize(b);
      la.residuals = num::Matrix(b, d_sub);
    }

  num::Matrix z(1, d_sub);
  for (std::size_t j = 0; j < b; ++j) {
    for (std::size_t m = 0; m < cb.cfg.subspaces; ++m) {
      for (std::size_t t = 0; t < d_sub; ++t)
        z.at(0, t) = fwd.projected.at(j, m * d_sub + t);
      auto q = quantize_subspace(cb, m, z);
      for (std::size_t t = 0; t < d_sub; ++t)
        fwd.reconstructed.at(j, m * d_sub + t) = q.reconstruction.at(0, t);
      for (std::size_t l = 0; l < cb.cfg.levels; ++l) {
        auto& la = fwd.levels[m * cb.cfg.levels + l];
        la.indices[j] = q.indices[l];
        for (std::size_t t = 0; t < d_sub; ++t)
          la.residuals.at(j, t) = q.residual_trace[l].at(0, t);
      }
    }
  }
  return fwd;
}

void ema_update(CodebookSet& cb, const BatchForward& fwd) {
  const double gamma = cb.cfg.ema_gamma;
  const std::size_t d_sub = cb.cfg.subspace_dim();
  for (std::size_t bi = 0; bi < cb.books.size(); ++bi) {
    Codebook& book = cb.books[bi];
    const LevelAssignments& la = fwd.levels[bi];
    const std::size_t k = cb.cfg.codebook_size;
    std::vector<double> counts(k, 0.0);
    num::Matrix sums(k, d_sub);
    for (std::size_t j = 0; j < la.indices.size(); ++j) {
      const std::uint32_t idx = la.indices[j];
      counts[idx] += 1.0;
      for (std::size_t t = 0; t < d_sub; ++t)
        sums.at(idx, t) += la.residuals.at(j, t);
    }
    for (std::size_t i = 0; i < k; ++i) {
      book.ema_count[i] = gamma * book.ema_count[i] + (1.0 - gamma) * counts[i];
      for (std::size_t t = 0; t < d_sub; ++t)
        book.ema_sum.at(i, t) =
            gamma * book.ema_sum.at(i, t) + (1.0 - gamma) * sums.at(i, t);
    }
    book.refresh_centroids();
  }
}

MhqLosses losses(const CodebookSet& cb, const num::Matrix& x_batch) {
  if (x_batch.rows() == 0) throw usage_error("mhq::losses: empty batch");
  const BatchForward fwd = forward_batch(cb, x_batch);
  const std::size_t b = x_batch.rows();
  const std::size_t d_sub = cb.cfg.subspace_dim();
  const std::size_t m_count = cb.cfg.subspaces;

  MhqLosses out;
  out.rec = num::sum_of_squares(num::sub(fwd.projected, fwd.reconstructed)) /
            static_cast<double>(b);

  std::vector<double> energy(m_count, 0.0);
  for (std::size_t m = 0; m < m_count; ++m) {
    double e = 0.0;
    for (std::size_t j = 0; j < b; ++j)
      for (std::size_t t = 0; t < d_sub; ++t) {
        const double v = fwd.projected.at(j, m * d_sub + t);
        e += v * v;
      }
    energy[m] = e / static_cast<double>(b);
  }
  double mean_energy = 0.0;
  for (double e : energy) mean_energy += e;
  mean_energy /= static_cast<double>(m_count);
  for (double e : energy) out.bal += std::fabs(e - mean_energy);
  out.bal /= static_cast<double>(m_count);

  num::Matrix gram = num::matmul_nt(cb.w_p, cb.w_p);
  for (std::size_t i = 0; i < gram.rows(); ++i) gram.at(i, i) -= 1.0;
  out.reg = num::frobenius_norm(gram);

  out.total = out.rec + cb.cfg.lambda_bal * out.bal +
              cb.cfg.lambda_reg * out.reg;
  return out;
}

namespace {

// Residual reservoirs per codebook collect candidate vectors for
// dead-code reseeding; filled by reservoir sampling over the epoch's
// residual stream.
struct Reservoir {
  std::vector<num::Matrix> rows;
  std::size_t seen = 0;
  std::size_t capacity = 0;

  void offer(const double* v, std::size_t d, num::Rng& rng) {
    ++seen;
    if (rows.size() < capacity) {
      num::Matrix r(1, d);
      for (std::size_t j = 0; j < d; ++j) r.at(0, j) = v[j];
      rows.push_back(std::move(r));
      return;
    }
    const std::size_t slot = static_cast<std::size_t>(rng.below(seen));
    if (slot < capacity)
      for (std::size_t j = 0; j < d; ++j) rows[slot].at(0, j) = v[j];
  }
};

// Glorot-uniform init for the projection.
num::Matrix init_projection(std::size_t rows, std::size_t cols,
                            num::Rng& rng) {
  num::Matrix w(rows, cols);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (std::size_t i = 0; i < w.size(); ++i)
    w.data()[i] = rng.uniform(-bound, bound);
  return w;
}

// Seeds codebooks level by level from the residual stream implied by the
// initial projection: level l sees the residuals left by levels < l.
void init_codebooks(CodebookSet& cb, const data::EmbeddingTable& table,
                    num::Rng& rng) {
  const std::size_t k = cb.cfg.codebook_size;
  const std::size_t d_sub = cb.cfg.subspace_dim();
  const std::size_t n = table.n_items;
  cb.books.resize(cb.cfg.code_len());

  // Projected subspace views of the whole table.
  num::Matrix tilde = num::matmul_nt(table.matrix, cb.w_p);

  for (std::size_t m = 0; m < cb.cfg.subspaces; ++m) {
    // Running residuals for this subspace across all items.
    num::Matrix residual(n, d_sub);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < d_sub; ++t)
        residual.at(i, t) = tilde.at(i, m * d_sub + t);

    for (std::size_t l = 0; l < cb.cfg.levels; ++l) {
      Codebook& book = cb.book(m, l);
      book.centroids = num::Matrix(k, d_sub);
      book.ema_sum = num::Matrix(k, d_sub);
      book.ema_count.assign(k, 1.0);

      const auto sample = rng.sample_without_replacement(n, k);
      for (std::size_t i = 0; i < k; ++i) {
        if (i < sample.size()) {
          for (std::size_t t = 0; t < d_sub; ++t)
            book.ema_sum.at(i, t) = residual.at(sample[i], t);
        } else {
          // Fewer residuals than codes: small Gaussian fallback.
          for (std::size_t t = 0; t < d_sub; ++t)
            book.ema_sum.at(i, t) = rng.normal(0.0, 0.01);
        }
      }
      book.refresh_centroids();

      // Advance the residual stream past this level.
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t idx =
            nearest_centroid(book.centroids, residual.row(i));
        for (std::size_t t = 0; t < d_sub; ++t)
          residual.at(i, t) -= book.centroids.at(idx, t);
      }
    }
  }
}

struct TapeLosses {
  num::Tape::Var rec, bal, reg, total;
};

// Builds L_MHQ on the tape with the reconstruction held constant
// (codewords learn by EMA only, so no gradient flows through z_hat).
TapeLosses build_mhq_loss(num::Tape& tape, num::Tape::Var w_p,
                          num::Tape::Var x_batch,
                          const num::Matrix& reconstructed,
                          const MhqConfig& cfg) {
  const std::size_t b = reconstructed.rows();
  const std::size_t d_sub = cfg.subspace_dim();
  TapeLosses out;

  auto tilde = tape.matmul_nt(x_batch, w_p);
  auto diff = tape.sub(tilde, tape.constant(reconstructed));
  out.rec = tape.scale(tape.sum_squares(diff), 1.0 / static_cast<double>(b));

  std::vector<num::Tape::Var> energies;
  for (std::size_t m = 0; m < cfg.subspaces; ++m) {
    auto z = tape.slice_cols(tilde, m * d_sub, d_sub);
    energies.push_back(
        tape.scale(tape.sum_squares(z), 1.0 / static_cast<double>(b)));
  }
  auto mean_energy = energies[0];
  for (std::size_t m = 1; m < energies.size(); ++m)
    mean_energy = tape.add(mean_energy, energies[m]);
  mean_energy =
      tape.scale(mean_energy, 1.0 / static_cast<double>(cfg.subspaces));
  num::Tape::Var bal;
  for (std::size_t m = 0; m < energies.size(); ++m) {
    auto dev = tape.abs_elems(tape.sub(energies[m], mean_energy));
    bal = (m == 0) ? dev : tape.add(bal, dev);
  }
  out.bal = tape.scale(bal, 1.0 / static_cast<double>(cfg.subspaces));

  auto gram = tape.matmul_nt(w_p, w_p);
  auto centered =
      tape.sub(gram, tape.constant(num::Matrix::identity(cfg.proj_dim)));
  out.reg = tape.sqrt_scalar(tape.sum_squares(centered));

  out.total = tape.add(
      out.rec, tape.add(tape.scale(out.bal, cfg.lambda_bal),
                        tape.scale(out.reg, cfg.lambda_reg)));
  return out;
}

}  // namespace

ProjectionStep projection_loss_and_grad(const CodebookSet& cb,
                                        const num::Matrix& x_batch,
                                        const num::Matrix& reconstruction) {
  num::Tape tape;
  auto w_var = tape.param_ref(&cb.w_p, "w_p");
  auto x_var = tape.constant_ref(&x_batch);
  const TapeLosses tl =
      build_mhq_loss(tape, w_var, x_var, reconstruction, cb.cfg);
  ProjectionStep out;
  out.losses.rec = tape.value(tl.rec).at(0, 0);
  out.losses.bal = tape.value(tl.bal).at(0, 0);
  out.losses.reg = tape.value(tl.reg).at(0, 0);
  out.losses.total = tape.value(tl.total).at(0, 0);
  tape.backward(tl.total);
  out.w_grad = tape.grad(w_var);
  return out;
}

TrainResult train_mhq(const MhqConfig& cfg, const data::EmbeddingTable& table,
                      const StepObserver& observer) {
  cfg.validate();
  if (table.n_items == 0) throw usage_error("train_mhq: empty table");

  num::Rng rng(cfg.seed);
  TrainResult result;
  CodebookSet& cb = result.codebooks;
  cb.cfg = cfg;
  cb.input_dim = table.dim;
  cb.w_p = init_projection(cfg.proj_dim, table.dim, rng);
  init_codebooks(cb, table, rng);

  std::vector<std::size_t> order(table.n_items);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<Reservoir> reservoirs(cfg.code_len());
  const std::size_t d_sub = cfg.subspace_dim();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (auto& r : reservoirs) {
      r.rows.clear();
      r.seen = 0;
      r.capacity = std::max<std::size_t>(cfg.codebook_size, 64);
    }

    MhqLosses epoch_sum;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t b = std::min(cfg.batch, order.size() - start);
      num::Matrix x(b, table.dim);
      for (std::size_t j = 0; j < b; ++j)
        for (std::size_t t = 0; t < table.dim; ++t)
          x.at(j, t) = table.matrix.at(order[start + j], t);

      const BatchForward fwd = forward_batch(cb, x);
      const ProjectionStep step =
          projection_loss_and_grad(cb, x, fwd.reconstructed);
      if (!std::isfinite(step.losses.total))
        throw numeric_error("train_mhq: loss diverged at epoch " +
                            std::to_string(epoch + 1) + " step " +
                            std::to_string(steps + 1));
      epoch_sum.rec += step.losses.rec;
      epoch_sum.bal += step.losses.bal;
      epoch_sum.reg += step.losses.reg;
      epoch_sum.total += step.losses.total;

      for (std::size_t i = 0; i < cb.w_p.size(); ++i)
        cb.w_p.data()[i] -= cfg.lr * step.w_grad.data()[i];

      // EMA update uses the assignments made by this step's forward pass.
      ema_update(cb, fwd);

      for (std::size_t bi = 0; bi < fwd.levels.size(); ++bi)
        for (std::size_t j = 0; j < b; ++j)
          reservoirs[bi].offer(fwd.levels[bi].residuals.row(j), d_sub, rng);

      ++steps;
      if (observer) observer(cb, epoch, steps);
    }

    // Dead-code reseeding: codes holding less than 1% of the expected
    // uniform EMA mass restart from a sampled residual.
    std::size_t reseeded = 0;
    for (std::size_t bi = 0; bi < cb.books.size(); ++bi) {
      Codebook& book = cb.books[bi];
      Reservoir& res = reservoirs[bi];
      if (res.rows.empty()) continue;
      double total_mass = 0.0;
      for (double c : book.ema_count) total_mass += c;
      const double threshold =
          0.01 * total_mass / static_cast<double>(cfg.codebook_size);
      for (std::size_t i = 0; i < book.ema_count.size(); ++i) {
        if (book.ema_count[i] >= threshold) continue;
        const num::Matrix& r =
            res.rows[static_cast<std::size_t>(rng.below(res.rows.size()))];
        book.ema_count[i] = 1.0;
        for (std::size_t t = 0; t < d_sub; ++t)
          book.ema_sum.at(i, t) = r.at(0, t);
        ++reseeded;
      }
      book.refresh_centroids();
    }

    EpochLog log;
    const double inv_steps = 1.0 / static_cast<double>(steps);
    log.mean_losses.rec = epoch_sum.rec * inv_steps;
    log.mean_losses.bal = epoch_sum.bal * inv_steps;
    log.mean_losses.reg = epoch_sum.reg * inv_steps;
    log.mean_losses.total = epoch_sum.total * inv_steps;
    log.reseeded_codes = reseeded;
    result.log.push_back(log);
  }
  return result;
}

std::vector<double> codebook_utilization(const CodebookSet& cb,
                                         const data::EmbeddingTable& table) {
  std::vector<std::vector<bool>> used(
      cb.books.size(), std::vector<bool>(cb.cfg.codebook_size, false));
  for (std::size_t i = 0; i < table.n_items; ++i) {
    const SemanticCode code = assign_code(cb, table.item_row(i));
    for (std::size_t p = 0; p < code.indices.size(); ++p)
      used[p][code.indices[p]] = true;
  }
  std::vector<double> util(cb.books.size(), 0.0);
  for (std::size_t p = 0; p < used.size(); ++p) {
    std::size_t n = 0;
    for (bool u : used[p]) n += u ? 1 : 0;
    util[p] = static_cast<double>(n) /
              static_cast<double>(cb.cfg.codebook_size);
  }
  return util;
}

CollisionReport collision_report(const std::vector<SemanticCode>& codes) {
  CollisionReport rep;
  rep.n_items = codes.size();
  std::map<std::vector<std::uint32_t>, std::vector<std::uint32_t>> by_code;
  for (std::size_t i = 0; i < codes.size(); ++i)
    by_code[codes[i].indices].push_back(static_cast<std::uint32_t>(i));
  for (auto& [code, items] : by_code) {
    if (items.size() == 1)
      ++rep.unique_count;
    else
      rep.groups.push_back(items);
  }
  return rep;
}

namespace {
constexpr char kSnapshotMagic[4] = {'M', 'H', 'Q', '1'};
}

void save_codebooks(const CodebookSet& cb, const std::string& path) {
  io::ByteWriter w;
  w.raw(kSnapshotMagic, 4);
  w.u32(static_cast<std::uint32_t>(cb.cfg.proj_dim));
  w.u32(static_cast<std::uint32_t>(cb.cfg.subspaces));
  w.u32(static_cast<std::uint32_t>(cb.cfg.levels));
  w.u32(static_cast<std::uint32_t>(cb.cfg.codebook_size));
  w.u32(static_cast<std::uint32_t>(cb.input_dim));
  for (std::size_t i = 0; i < cb.w_p.size(); ++i) w.f64(cb.w_p.data()[i]);
  for (const Codebook& book : cb.books) {
    for (std::size_t i = 0; i < book.centroids.size(); ++i)
      w.f64(book.centroids.data()[i]);
    for (double c : book.ema_count) w.f64(c);
    for (std::size_t i = 0; i < book.ema_sum.size(); ++i)
      w.f64(book.ema_sum.data()[i]);
  }
  w.u64(io::byte_sum(w.bytes().data() + 4, w.size() - 4));
  w.write_file(path);
}

CodebookSet load_codebooks(const std::string& path) {
  io::ByteReader r = io::ByteReader::from_file(path);
  if (r.str(4) != std::string(kSnapshotMagic, 4))
    throw data_error(path + ": bad magic at byte offset 0 (expected MHQ1)");
  CodebookSet cb;
  cb.cfg.proj_dim = r.u32();
  cb.cfg.subspaces = r.u32();
  cb.cfg.levels = r.u32();
  cb.cfg.codebook_size = r.u32();
  cb.input_dim = r.u32();
  if (cb.cfg.subspaces == 0 || cb.cfg.proj_dim % cb.cfg.subspaces != 0)
    throw data_error(path + ": inconsistent dimensions in header");
  const std::size_t d_sub = cb.cfg.subspace_dim();
  const std::size_t k = cb.cfg.codebook_size;

  cb.w_p = num::Matrix(cb.cfg.proj_dim, cb.input_dim);
  for (std::size_t i = 0; i < cb.w_p.size(); ++i) cb.w_p.data()[i] = r.f64();
  cb.books.resize(cb.cfg.code_len());
  for (Codebook& book : cb.books) {
    book.centroids = num::Matrix(k, d_sub);
    for (std::size_t i = 0; i < book.centroids.size(); ++i)
      book.centroids.data()[i] = r.f64();
    book.ema_count.resize(k);
    for (double& c : book.ema_count) c = r.f64();
    book.ema_sum = num::Matrix(k, d_sub);
    for (std::size_t i = 0; i < book.ema_sum.size(); ++i)
      book.ema_sum.data()[i] = r.f64();
  }
  const std::uint64_t declared = r.u64();
  const std::uint64_t actual = io::byte_sum(r.data() + 4, r.size() - 12);
  if (declared != actual)
    throw data_error(path + ": snapshot checksum mismatch");
  return cb;
}

void write_codes_file(const std::vector<SemanticCode>& codes,
                      const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw data_error("cannot open for writing: " + path);
  for (std::size_t i = 0; i < codes.size(); ++i) {
    f << i << '\t';
    const auto& idx = codes[i].indices;
    for (std::size_t p = 0; p < idx.size(); ++p) {
      if (p) f << ' ';
      f << idx[p];
    }
    f << '\n';
  }
  if (!f) throw data_error("write failed: " + path);
}

std::vector<SemanticCode> read_codes_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw data_error("cannot open: " + path);
  std::vector<SemanticCode> codes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw data_error(path + ":" + std::to_string(line_no) + ": missing tab");
    std::uint64_t item_id = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + tab, item_id);
    if (ec != std::errc() || item_id != codes.size())
      throw data_error(path + ":" + std::to_string(line_no) +
                       ": item ids must be dense and ascending from 0");
    SemanticCode code;
    std::istringstream rest(line.substr(tab + 1));
    std::uint32_t v;
    while (rest >> v) code.indices.push_back(v);
    if (code.indices.empty())
      throw data_error(path + ":" + std::to_string(line_no) + ": empty code");
    if (!codes.empty() && code.indices.size() != codes[0].indices.size())
      throw data_error(path + ":" + std::to_string(line_no) +
                       ": inconsistent code length");
    codes.push_back(std::move(code));
  }
  return codes;
}

void write_collision_report(const CollisionReport& report,
                            const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw data_error("cannot open for writing: " + path);
  f << "items\t" << report.n_items << '\n';
  f << "unique\t" << report.unique_count << '\n';
  f << "groups\t" << report.groups.size() << '\n';
  for (const auto& g : report.groups) {
    f << "group";
    for (auto id : g) f << ' ' << id;
    f << '\n';
  }
  if (!f) throw data_error("write failed: " + path);
}

}  // namespace asymrec::mhq
