// Copyright 2026 The MTDA Authors.
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

namespace mtda {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or dataset layout. `key` names the offending
/// configuration key when there is one.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message, std::string key = {})
      : Error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// A target domain uses a class that the source does not define.
class LabelSpaceError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A caller broke an operation's precondition (shapes, absent labels, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Training diverged or an engine stage failed.
class RuntimeAbort : public Error {
 public:
  using Error::Error;
};

/// File system or serialization failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A checkpoint or manifest was written with an incompatible schema.
class SchemaVersionError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace mtda

#define MTDA_REQUIRE(cond, msg)                                 \
  do {                                                          \
    if (!(cond)) throw ::mtda::ContractViolation(std::string(msg)); \
  } while (false)
