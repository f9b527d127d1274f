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

#include "textio.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "sigcloud/error.hpp"

namespace sigcloud::textio {

std::string real(double v) {
  if (!std::isfinite(v)) raise(Errc::NonFiniteInput, "cannot serialize a non-finite value");
  return fmt::format("{:.17g}", v);
}

void JsonWriter::newline() {
  if (!pretty_) return;
  buf_.push_back('\n');
  for (std::size_t i = 0; i < stack_.size(); ++i) buf_.append(std::string_view("  "));
}

void JsonWriter::separate() {
  if (after_key_) {
    after_key_ = false;
    return;
  }
  if (stack_.empty()) return;
  Frame& f = stack_.back();
  if (!f.empty) buf_.push_back(',');
  f.empty = false;
  if (f.object) newline();
}

JsonWriter& JsonWriter::begin_object() {
  separate();
  buf_.push_back('{');
  stack_.push_back({true});
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  const bool had_members = !stack_.back().empty;
  stack_.pop_back();
  if (had_members) newline();
  buf_.push_back('}');
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  separate();
  buf_.push_back('[');
  stack_.push_back({false});
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  stack_.pop_back();
  buf_.push_back(']');
  return *this;
}

JsonWriter& JsonWriter::key(std::string_view name) {
  separate();
  buf_.append(nlohmann::json(std::string(name)).dump());
  buf_.append(pretty_ ? std::string_view(": ") : std::string_view(":"));
  after_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  separate();
  buf_.append(real(v));
  return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v) {
  separate();
  fmt::format_to(std::back_inserter(buf_), "{}", v);
  return *this;
}

JsonWriter& JsonWriter::value(std::uint64_t v) {
  separate();
  fmt::format_to(std::back_inserter(buf_), "{}", v);
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  separate();
  buf_.append(std::string_view(v ? "true" : "false"));
  return *this;
}

JsonWriter& JsonWriter::value(std::string_view v) {
  separate();
  buf_.append(nlohmann::json(std::string(v)).dump());
  return *this;
}

JsonWriter& JsonWriter::reals(std::span<const double> values) {
  separate();
  buf_.push_back('[');
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) buf_.push_back(',');
    buf_.append(real(values[i]));
  }
  buf_.push_back(']');
  return *this;
}

JsonWriter& JsonWriter::reals_row_major(const Eigen::MatrixXd& m) {
  separate();
  buf_.push_back('[');
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (r > 0 || c > 0) buf_.push_back(',');
      buf_.append(real(m(r, c)));
    }
  }
  buf_.push_back(']');
  return *this;
}

JsonWriter& JsonWriter::counts(std::span<const std::size_t> values) {
  separate();
  buf_.push_back('[');
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) buf_.push_back(',');
    fmt::format_to(std::back_inserter(buf_), "{}", values[i]);
  }
  buf_.push_back(']');
  return *this;
}

Eigen::VectorXd to_vector(const nlohmann::json& j) {
  if (!j.is_array()) raise(Errc::SchemaViolation, "expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd to_matrix(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols) {
    raise(Errc::SchemaViolation, "matrix has " + std::to_string(j.size()) + " entries, expected " +
                                     std::to_string(rows * cols));
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[i++].get<double>();
  }
  return m;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json parse_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(Errc::ParseFailure, path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::IoFailure, "cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) raise(Errc::IoFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) raise(Errc::IoFailure, "rename to " + path.string() + " failed: " + ec.message());
}

}  // namespace sigcloud::textio
