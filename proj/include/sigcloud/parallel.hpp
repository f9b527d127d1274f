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

#include <cstddef>
#include <exception>
#include <functional>

namespace sigcloud {

// Runs fn(i) for i in [0, n_tasks) on up to `workers` threads. Tasks are pulled
// from a shared counter; callers write results into pre-sized slots so output
// order never depends on scheduling. If tasks throw, the exception of the
// lowest failing task index is rethrown after all threads join.
void parallel_for(std::size_t n_tasks, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

// Half-open [begin, end) bounds of contiguous partition `index` out of `parts`
// over `n` items. Earlier partitions get the remainder.
struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};
Range partition_range(std::size_t n, std::size_t parts, std::size_t index);

}  // namespace sigcloud
