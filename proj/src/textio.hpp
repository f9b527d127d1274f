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

// Text helpers shared by the file formats: a small JSON emitter that writes
// reals with 17 significant digits, parsing helpers, and atomic file writes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "json.hpp"

namespace sigcloud::textio {

class JsonWriter {
 public:
  // Compact output puts the whole document on one line.
  explicit JsonWriter(bool pretty = true) : pretty_(pretty) {}

  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(std::string_view name);
  JsonWriter& value(double v);
  JsonWriter& value(std::int64_t v);
  JsonWriter& value(std::uint64_t v);
  JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
  JsonWriter& value(bool v);
  JsonWriter& value(std::string_view v);
  JsonWriter& value(const char* v) { return value(std::string_view(v)); }
  JsonWriter& reals(std::span<const double> values);
  JsonWriter& reals(const Eigen::VectorXd& v) { return reals(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))); }
  // Row-major flattening of a matrix.
  JsonWriter& reals_row_major(const Eigen::MatrixXd& m);
  JsonWriter& counts(std::span<const std::size_t> values);

  std::string str() const { return fmt::to_string(buf_) + "\n"; }
  std::string line() const { return fmt::to_string(buf_); }

 private:
  void separate();
  void newline();

  fmt::memory_buffer buf_;
  struct Frame {
    bool object;
    bool empty = true;
  };
  std::vector<Frame> stack_;
  bool after_key_ = false;
  bool pretty_ = true;
};

std::string real(double v);

Eigen::VectorXd to_vector(const nlohmann::json& j);
Eigen::MatrixXd to_matrix(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols);

nlohmann::json parse_file(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace sigcloud::textio
