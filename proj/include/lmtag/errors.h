// Copyright 2026 The lmtag Authors.
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

#ifndef LMTAG_ERRORS_H_
#define LMTAG_ERRORS_H_

#include <stdexcept>
#include <string>

namespace lmtag {

// Error hierarchy. The CLI maps each family onto an exit code:
// UsageError -> 1, DataError -> 2, NumericError (and ShapeError) -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Operand shapes violate an operation's shape rule.
class ShapeError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace lmtag

#endif  // LMTAG_ERRORS_H_
