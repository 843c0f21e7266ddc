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

#include "rec/checkpoint.hpp"

#include "core/binio.hpp"

namespace asymrec::rec {

namespace {
constexpr char kMagic[4] = {'A', 'R', 'E', 'C'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const RecModel& model,
                     std::uint64_t mhq_snapshot_checksum,
                     const std::string& path) {
  io::ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(model.cfg.variant));
  w.u32(static_cast<std::uint32_t>(model.dims.input_dim));
  w.u32(static_cast<std::uint32_t>(model.dims.code_len));
  w.u32(static_cast<std::uint32_t>(model.dims.codebook_size));
  w.u32(static_cast<std::uint32_t>(model.cfg.hidden_dim));
  w.u32(static_cast<std::uint32_t>(model.cfg.layers));
  w.u32(static_cast<std::uint32_t>(model.cfg.heads));
  w.u32(static_cast<std::uint32_t>(model.cfg.max_len));
  w.u32(static_cast<std::uint32_t>(model.cfg.experts));
  w.u32(static_cast<std::uint32_t>(model.cfg.batch));
  w.u32(static_cast<std::uint32_t>(model.cfg.max_epochs));
  w.u32(static_cast<std::uint32_t>(model.cfg.patience));
  w.u32(model.cfg.per_position ? 1 : 0);
  w.f64(model.cfg.dropout);
  w.f64(model.cfg.lr);
  w.f64(model.cfg.momentum);
  w.u64(model.cfg.seed);
  w.u64(mhq_snapshot_checksum);
  w.u32(static_cast<std::uint32_t>(model.params.size()));
  for (const auto& [name, mat] : model.params.entries()) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.str(name);
    w.u32(static_cast<std::uint32_t>(mat.rows()));
    w.u32(static_cast<std::uint32_t>(mat.cols()));
    for (std::size_t i = 0; i < mat.size(); ++i) w.f64(mat.data()[i]);
  }
  w.u64(io::byte_sum(w.bytes().data() + 4, w.size() - 4));
  w.write_file(path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  io::ByteReader r = io::ByteReader::from_file(path);
  if (r.str(4) != std::string(kMagic, 4))
    throw data_error(path + ": bad magic at byte offset 0 (expected AREC)");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw data_error(path + ": unsupported checkpoint version " +
                     std::to_string(version));
  LoadedCheckpoint out;
  RecModel& model = out.model;
  model.cfg.variant = static_cast<Variant>(r.u32());
  model.dims.input_dim = r.u32();
  model.dims.code_len = r.u32();
  model.dims.codebook_size = r.u32();
  model.cfg.hidden_dim = r.u32();
  model.cfg.layers = r.u32();
  model.cfg.heads = r.u32();
  model.cfg.max_len = r.u32();
  model.cfg.experts = r.u32();
  model.cfg.batch = r.u32();
  model.cfg.max_epochs = r.u32();
  model.cfg.patience = r.u32();
  model.cfg.per_position = r.u32() != 0;
  model.cfg.dropout = r.f64();
  model.cfg.lr = r.f64();
  model.cfg.momentum = r.f64();
  model.cfg.seed = r.u64();
  out.mhq_snapshot_checksum = r.u64();
  const std::uint32_t n_params = r.u32();
  for (std::uint32_t p = 0; p < n_params; ++p) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.str(name_len);
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    num::Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = r.f64();
    if (!m.all_finite())
      throw data_error(path + ": non-finite values in parameter " + name);
    model.params.add(name, std::move(m));
  }
  const std::uint64_t declared = r.u64();
  const std::uint64_t actual = io::byte_sum(r.data() + 4, r.size() - 12);
  if (declared != actual)
    throw data_error(path + ": checkpoint checksum mismatch");
  return out;
}

}  // namespace asymrec::rec
