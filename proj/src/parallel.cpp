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

#include "sigcloud/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include "sigcloud/error.hpp"

namespace sigcloud {

void parallel_for(std::size_t n_tasks, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  if (n_tasks == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, n_tasks);

  std::mutex error_mutex;
  std::size_t error_index = std::numeric_limits<std::size_t>::max();
  std::exception_ptr error;

  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (i < error_index) {
        error_index = i;
        error = std::current_exception();
      }
    }
  };

  if (workers == 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) run(i);
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

Range partition_range(std::size_t n, std::size_t parts, std::size_t index) {
  if (parts == 0 || index >= parts) raise(Errc::InvalidArgument, "partition index out of range");
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  const std::size_t begin = index * base + std::min(index, extra);
  return {begin, begin + base + (index < extra ? 1 : 0)};
}

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::NonMonotonicTime: return "NonMonotonicTime";
    case Errc::EmptyMask: return "EmptyMask";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::IoFailure: return "IoFailure";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::InsufficientSamples: return "InsufficientSamples";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::ZeroVarianceFeature: return "ZeroVarianceFeature";
    case Errc::DecompositionFailure: return "DecompositionFailure";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::BadShape: return "BadShape";
    case Errc::Diverged: return "Diverged";
    case Errc::SolveFailure: return "SolveFailure";
    case Errc::SingleClassDataset: return "SingleClassDataset";
    case Errc::PartitionTooSmall: return "PartitionTooSmall";
    case Errc::EmptyEnsemble: return "EmptyEnsemble";
    case Errc::EmptyScores: return "EmptyScores";
    case Errc::NoNegatives: return "NoNegatives";
    case Errc::NoPositives: return "NoPositives";
    case Errc::SingleClassScores: return "SingleClassScores";
    case Errc::NonPositiveTime: return "NonPositiveTime";
    case Errc::NegativeDuration: return "NegativeDuration";
    case Errc::NegativeInput: return "NegativeInput";
    case Errc::InsufficientEnrollment: return "InsufficientEnrollment";
    case Errc::UserNotEnrolled: return "UserNotEnrolled";
    case Errc::CorruptStore: return "CorruptStore";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

void raise(Errc code, const std::string& detail) {
  std::string what(errc_name(code));
  if (!detail.empty()) what += ": " + detail;
  throw Error(code, what);
}

}  // namespace sigcloud
