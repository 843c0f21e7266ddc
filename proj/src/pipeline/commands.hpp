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

#include <string>
#include <vector>

#include "pipeline/config.hpp"

namespace asymrec::pipeline {

const char* version_string();

// Pipeline stages behind the CLI subcommands. Each stage reads its
// inputs from the config, writes its outputs under out_dir, and records
// a manifest (config, input checksums, output checksums, version).
// Errors are reported by throwing asymrec::Error; the wrapping layer
// maps the error kind to the process exit code.
void run_synth(const RunConfig& cfg);
void run_train_mhq(const RunConfig& cfg);
void run_assign(const RunConfig& cfg);
void run_train_rec(const RunConfig& cfg);
void run_eval(const RunConfig& cfg);
void run_fuse(const RunConfig& cfg);
void run_spectrum(const RunConfig& cfg);

const std::vector<std::string>& command_names();
void run_command(const std::string& name, const RunConfig& cfg);

}  // namespace asymrec::pipeline
