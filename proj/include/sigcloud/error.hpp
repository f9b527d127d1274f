// Copyright 2026 The sigcloud Authors
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
#include <string_view>

namespace sigcloud {

enum class Errc {
  // sigmodel
  TooFewRows,
  NonMonotonicTime,
  EmptyMask,
  EmptyDataset,
  // synthgen / file I/O
  IoFailure,
  ParseFailure,
  SchemaViolation,
  // preprocess
  InsufficientSamples,
  NonFiniteInput,
  ZeroVarianceFeature,
  DecompositionFailure,
  DimensionMismatch,
  // nnet
  BadShape,
  Diverged,
  SolveFailure,
  SingleClassDataset,
  PartitionTooSmall,
  EmptyEnsemble,
  // eval
  EmptyScores,
  NoNegatives,
  NoPositives,
  SingleClassScores,
  NonPositiveTime,
  // costmodel
  NegativeDuration,
  NegativeInput,
  // pipeline
  InsufficientEnrollment,
  UserNotEnrolled,
  CorruptStore,
  InvalidArgument,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure surfaced by the library is an Error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void raise(Errc code, const std::string& detail);

}  // namespace sigcloud
