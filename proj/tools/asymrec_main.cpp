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

// Command-line front end. All functionality lives behind the C API in
// libasymrec; this binary only parses arguments, builds a run
// configuration and dispatches.

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <asymrec/asymrec.h>

namespace {

constexpr int kUsageExit = 2;

struct ConfigDeleter {
  void operator()(asymrec_config* c) const { asymrec_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<asymrec_config, ConfigDeleter>;

int fail(int rc) {
  std::fprintf(stderr, "asymrec: %s\n", asymrec_last_error());
  return rc;
}

// Extras are free-form `--key value` / `--key=value` overrides.
int apply_overrides(asymrec_config* cfg,
                    const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string token = extras[i];
    if (token.rfind("--", 0) != 0) {
      std::fprintf(stderr, "asymrec: expected --key, got '%s'\n",
                   token.c_str());
      return kUsageExit;
    }
    token = token.substr(2);
    std::string value;
    const auto eq = token.find('=');
    if (eq != std::string::npos) {
      value = token.substr(eq + 1);
      token = token.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) {
        std::fprintf(stderr, "asymrec: missing value for --%s\n",
                     token.c_str());
        return kUsageExit;
      }
      value = extras[++i];
    }
    if (int rc = asymrec_config_set(cfg, token.c_str(), value.c_str()))
      return fail(rc);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AsymRec: semantic-ID tokenizer and asymmetric generative "
               "recommender"};
  app.set_version_flag("--version", asymrec_version());
  app.require_subcommand(0, 1);

  const std::map<std::string, std::string> commands = {
      {"synth", "generate a synthetic embeddings + interactions dataset"},
      {"train-mhq", "train the hierarchical quantizer on an embedding table"},
      {"assign", "tokenize every item and report code collisions"},
      {"train-rec", "train the sequence recommender on semantic codes"},
      {"eval", "evaluate a checkpoint (metrics, bins, spectrum exports)"},
      {"fuse", "reciprocal-rank-fuse two prediction files"},
      {"spectrum", "export the hidden-state singular spectrum"},
  };
  std::map<std::string, CLI::App*> subs;
  std::map<std::string, std::string> config_files;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->allow_extras();
    sub->add_option("--config", config_files[name],
                    "key = value configuration file");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  CLI::App* active = nullptr;
  std::string active_name;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.get_subcommand(name);
    if (sub->parsed()) {
      active = sub;
      active_name = name;
      break;
    }
  }
  if (!active) {
    std::fprintf(stderr, "%s\n", app.help().c_str());
    return kUsageExit;
  }

  ConfigPtr cfg(asymrec_config_create());
  if (!cfg) return fail(ASYMREC_ERROR_INTERNAL);
  const std::string& config_file = config_files[active_name];
  if (!config_file.empty())
    if (int rc = asymrec_config_load_file(cfg.get(), config_file.c_str()))
      return fail(rc);
  if (int rc = apply_overrides(cfg.get(), active->remaining())) return rc;

  if (int rc = asymrec_run(cfg.get(), active_name.c_str())) return fail(rc);
  return 0;
}
