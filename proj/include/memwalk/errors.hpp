// Copyright 2026 The memwalk Authors.
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

namespace memwalk {

/// Caller violated a precondition (bad arguments, mismatched inputs).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested quantity is undefined for the given law or data.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A run would exceed the memory budget or the packed coordinate range.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A user-registered kernel broke ellipticity or lattice symmetry.
class KernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration problem, optionally pinned to a line of the source file.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace memwalk
