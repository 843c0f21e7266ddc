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

#include <stdexcept>
#include <string>

namespace asymrec {

/// Error categories. Values double as process exit codes at the CLI
/// boundary (0 is success, 1 is reserved for unexpected crashes).
enum class ErrorKind : int {
  usage = 2,    // bad configuration, bad arguments, contract violation
  data = 3,     // malformed or inconsistent input files
  numeric = 4,  // divergence, NaN/Inf where finite values are required
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

inline Error usage_error(const std::string& msg) {
  return Error(ErrorKind::usage, msg);
}
inline Error data_error(const std::string& msg) {
  return Error(ErrorKind::data, msg);
}
inline Error numeric_error(const std::string& msg) {
  return Error(ErrorKind::numeric, msg);
}

}  // namespace asymrec
