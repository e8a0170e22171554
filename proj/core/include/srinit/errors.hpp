// Copyright 2026 The srinit Authors. All Rights Reserved.
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

#ifndef SRINIT_ERRORS_HPP_
#define SRINIT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace srinit {

// Every failure raised by the library derives from Error. The CLI maps each
// subclass to its own exit status (see tools/pipeline.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid architecture or pipeline configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad argument to an operation (unknown unit id, shape mismatch, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Attempt to remove a unit whose input and output shapes differ.
class CompatibilityError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// Corrupt, truncated or version-mismatched checkpoint / artifact.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable dataset files.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss during training.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage could not find an artifact produced by an upstream stage.
class DependencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace srinit

#endif  // SRINIT_ERRORS_HPP_
