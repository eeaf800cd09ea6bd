// Copyright 2026 The asdkit Authors
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

namespace asd {

// Exception hierarchy. The CLI maps these onto exit codes:
// ConfigError -> 2, DataError / InvalidInput -> 3, NumericError -> 4.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by a caller-supplied argument.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent data on disk (WAV, FVEC, manifest, model files).
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or divergence during fitting.
class NumericError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(int epoch, int batch, const std::string& what)
      : NumericError("training diverged at epoch " + std::to_string(epoch) +
                     ", batch " + std::to_string(batch) + ": " + what),
        epoch_(epoch),
        batch_(batch) {}

  int epoch() const noexcept { return epoch_; }
  int batch() const noexcept { return batch_; }

 private:
  int epoch_;
  int batch_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidInput(msg);
}

}  // namespace asd
