// Copyright 2026 The kngsynth Authors
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

#ifndef KNGSYNTH_ERROR_HPP_
#define KNGSYNTH_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace kngsynth {

// Base class for every error raised by the library. Callers that only care
// about "did it work" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data: CSV syntax, ragged rows, missing columns, schema.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or arguments (bounds, weights, grids, plans).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: rank deficiency, non-convergence that cannot be
// recovered, or an infeasible sampler constraint.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace kngsynth

#endif  // KNGSYNTH_ERROR_HPP_
