// Copyright 2026 The repkd Authors.
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

namespace repkd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an API precondition (shape mismatch, missing cache, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Input data is unusable (empty sequences, out-of-vocabulary ids, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A configuration value is out of range or inconsistent.
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// A binary file has a bad magic, version or is truncated.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Two artifacts disagree (token counts, frame counts, config digests).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// The model assigns zero probability to every alignment, or training diverged.
class DegenerateModel : public Error {
 public:
  using Error::Error;
};

/// A required file or in-memory artifact does not exist.
class MissingArtifact : public Error {
 public:
  using Error::Error;
};

}  // namespace repkd
