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

#include "asymrec/asymrec.h"

#include <cstring>
#include <string>

#include "core/error.hpp"
#include "data/embeddings.hpp"
#include "mhq/quantizer.hpp"
#include "pipeline/commands.hpp"
#include "pipeline/config.hpp"
#include "rec/checkpoint.hpp"

namespace {

thread_local std::string g_last_error;

int status_of(const asymrec::Error& e) { return e.exit_code(); }

// Runs fn, translating exceptions into status codes + last_error.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return ASYMREC_OK;
  } catch (const asymrec::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ASYMREC_ERROR_INTERNAL;
  }
}

template <typename T, typename Fn>
T* guarded_create(Fn&& fn) {
  try {
    return fn();
  } catch (const asymrec::Error& e) {
    g_last_error = e.what();
    return nullptr;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return nullptr;
  }
}

int require(bool ok, const char* what) {
  if (ok) return ASYMREC_OK;
  g_last_error = what;
  return ASYMREC_ERROR_USAGE;
}

}  // namespace

struct asymrec_config {
  asymrec::pipeline::RunConfig cfg;
};

struct asymrec_embeddings {
  asymrec::data::EmbeddingTable table;
};

struct asymrec_codebooks {
  asymrec::mhq::CodebookSet set;
};

struct asymrec_catalog {
  asymrec::data::EmbeddingTable table;
  std::vector<asymrec::mhq::SemanticCode> codes;
};

struct asymrec_model {
  asymrec::rec::RecModel model;
  std::uint64_t mhq_ref = 0;
};

extern "C" {

const char* asymrec_version(void) {
  return asymrec::pipeline::version_string();
}

const char* asymrec_last_error(void) { return g_last_error.c_str(); }

asymrec_config* asymrec_config_create(void) {
  return guarded_create<asymrec_config>([] { return new asymrec_config(); });
}

void asymrec_config_destroy(asymrec_config* cfg) { delete cfg; }

int asymrec_config_load_file(asymrec_config* cfg, const char* path) {
  if (int rc = require(cfg && path, "null argument")) return rc;
  return guarded([&] { cfg->cfg.load_file(path); });
}

int asymrec_config_set(asymrec_config* cfg, const char* key,
                       const char* value) {
  if (int rc = require(cfg && key && value, "null argument")) return rc;
  return guarded([&] { cfg->cfg.set(key, value); });
}

int asymrec_config_get(const asymrec_config* cfg, const char* key, char* buf,
                       size_t buf_len) {
  if (int rc = require(cfg && key && buf && buf_len > 0, "null argument"))
    return rc;
  return guarded([&] {
    const std::string& v = cfg->cfg.get(key);
    const size_t n = std::min(buf_len - 1, v.size());
    std::memcpy(buf, v.data(), n);
    buf[n] = '\0';
  });
}

int asymrec_run(const asymrec_config* cfg, const char* command) {
  if (int rc = require(cfg && command, "null argument")) return rc;
  return guarded(
      [&] { asymrec::pipeline::run_command(command, cfg->cfg); });
}

asymrec_embeddings* asymrec_embeddings_open(const char* path) {
  if (!path) {
    g_last_error = "null path";
    return nullptr;
  }
  return guarded_create<asymrec_embeddings>([&] {
    auto* e = new asymrec_embeddings();
    e->table = asymrec::data::load_embeddings(path);
    return e;
  });
}

void asymrec_embeddings_destroy(asymrec_embeddings* e) { delete e; }

size_t asymrec_embeddings_count(const asymrec_embeddings* e) {
  return e ? e->table.n_items : 0;
}

size_t asymrec_embeddings_dim(const asymrec_embeddings* e) {
  return e ? e->table.dim : 0;
}

int asymrec_embeddings_row(const asymrec_embeddings* e, size_t item,
                           double* out, size_t len) {
  if (int rc = require(e && out, "null argument")) return rc;
  if (int rc = require(item < e->table.n_items, "item id out of range"))
    return rc;
  if (int rc = require(len == e->table.dim, "length must equal dim"))
    return rc;
  std::memcpy(out, e->table.matrix.row(item), len * sizeof(double));
  return ASYMREC_OK;
}

asymrec_codebooks* asymrec_codebooks_open(const char* path) {
  if (!path) {
    g_last_error = "null path";
    return nullptr;
  }
  return guarded_create<asymrec_codebooks>([&] {
    auto* cb = new asymrec_codebooks();
    cb->set = asymrec::mhq::load_codebooks(path);
    return cb;
  });
}

void asymrec_codebooks_destroy(asymrec_codebooks* cb) { delete cb; }

size_t asymrec_codebooks_code_len(const asymrec_codebooks* cb) {
  return cb ? cb->set.cfg.code_len() : 0;
}

size_t asymrec_codebooks_input_dim(const asymrec_codebooks* cb) {
  return cb ? cb->set.input_dim : 0;
}

int asymrec_codebooks_assign(const asymrec_codebooks* cb,
                             const double* embedding, size_t dim,
                             uint32_t* out_indices, size_t out_len) {
  if (int rc = require(cb && embedding && out_indices, "null argument"))
    return rc;
  if (int rc = require(dim == cb->set.input_dim, "dim mismatch")) return rc;
  if (int rc = require(out_len == cb->set.cfg.code_len(),
                       "out_len must equal code_len"))
    return rc;
  return guarded([&] {
    asymrec::num::Matrix x(1, dim);
    std::memcpy(x.data(), embedding, dim * sizeof(double));
    const auto code = asymrec::mhq::assign_code(cb->set, x);
    for (size_t i = 0; i < out_len; ++i) out_indices[i] = code.indices[i];
  });
}

asymrec_catalog* asymrec_catalog_open(const char* embeddings_path,
                                      const char* codes_path) {
  if (!embeddings_path) {
    g_last_error = "null embeddings path";
    return nullptr;
  }
  return guarded_create<asymrec_catalog>([&] {
    auto* c = new asymrec_catalog();
    c->table = asymrec::data::load_embeddings(embeddings_path);
    if (codes_path) {
      c->codes = asymrec::mhq::read_codes_file(codes_path);
      if (c->codes.size() != c->table.n_items)
        throw asymrec::data_error("catalog: codes/table size mismatch");
    }
    return c;
  });
}

void asymrec_catalog_destroy(asymrec_catalog* c) { delete c; }

size_t asymrec_catalog_items(const asymrec_catalog* c) {
  return c ? c->table.n_items : 0;
}

asymrec_model* asymrec_model_open(const char* checkpoint_path) {
  if (!checkpoint_path) {
    g_last_error = "null path";
    return nullptr;
  }
  return guarded_create<asymrec_model>([&] {
    auto* m = new asymrec_model();
    auto loaded = asymrec::rec::load_checkpoint(checkpoint_path);
    m->model = std::move(loaded.model);
    m->mhq_ref = loaded.mhq_snapshot_checksum;
    return m;
  });
}

void asymrec_model_destroy(asymrec_model* m) { delete m; }

int asymrec_recommend(const asymrec_model* m, const asymrec_catalog* c,
                      const uint32_t* context_items, size_t context_len,
                      uint32_t* out_items, double* out_scores, size_t k) {
  if (int rc = require(m && c && context_items && out_items && out_scores,
                       "null argument"))
    return rc;
  if (int rc = require(context_len > 0, "empty context")) return rc;
  if (int rc = require(k > 0 && k <= c->table.n_items,
                       "k must be in [1, catalog size]"))
    return rc;
  return guarded([&] {
    const bool discrete =
        m->model.cfg.variant != asymrec::rec::Variant::continuous_output;
    if (discrete && c->codes.size() != c->table.n_items)
      throw asymrec::usage_error(
          "catalog was opened without codes but the model has discrete "
          "heads");
    std::vector<asymrec::data::ItemId> context(context_items,
                                               context_items + context_len);
    auto scored =
        asymrec::rec::score_catalog(m->model, c->table, c->codes, context);
    for (size_t i = 0; i < k; ++i) {
      out_items[i] = scored.ranked[i].first;
      out_scores[i] = scored.ranked[i].second;
    }
  });
}

}  // extern "C"
