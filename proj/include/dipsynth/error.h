// Copyright 2026 The dipsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DIPSYNTH_ERROR_H_
#define DIPSYNTH_ERROR_H_

#include <stdexcept>
#include <string>

namespace dipsynth {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied argument violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data (files, schemas, cells) is malformed or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

// A privacy charge would push the ledger past its total budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

// A numerical routine could not produce a valid result (non-PD matrix,
// rank deficiency, failed bracket).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dipsynth

#endif  // DIPSYNTH_ERROR_H_
