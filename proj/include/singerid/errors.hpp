// singerid/errors.hpp

// Copyright 2026  The singerid authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SINGERID_ERRORS_HPP_
#define SINGERID_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace singerid {

// Exit codes used by the CLI; library code throws, the CLI maps to codes.
enum class ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfig = 2,
  kData = 3,
  kNumeric = 4,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg, ExitCode code = ExitCode::kUnexpected)
      : std::runtime_error(msg), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

// Invalid configuration: bad flag values, unknown keys, inconsistent options.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg, ExitCode::kConfig) {}
};

// Bad or insufficient input data: unreadable files, short clips, missing labels.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg, ExitCode::kData) {}
};

// Numerical failure during training or evaluation (NaN/Inf loss and similar).
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg, ExitCode::kNumeric) {}
};

#define SINGERID_CHECK(cond, ExType, msg)      \
  do {                                         \
    if (!(cond)) throw ExType(msg);            \
  } while (0)

}  // namespace singerid

#endif  // SINGERID_ERRORS_HPP_
