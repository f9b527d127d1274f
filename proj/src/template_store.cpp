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

#include <algorithm>
#include <array>
#include <filesystem>
#include <mutex>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "formats.hpp"
#include "sigcloud/error.hpp"
#include "sigcloud/pipeline.hpp"
#include "textio.hpp"

namespace sigcloud::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kManifestName = "manifest.json";
constexpr int kLoadAttempts = 5;

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    raise(Errc::IoFailure, "SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) fmt::format_to(std::back_inserter(hex), "{:02x}", digest[i]);
  return hex;
}

struct ManifestEntry {
  std::string file;
  std::string sha256;
};

using Manifest = std::map<std::string, ManifestEntry>;

// Content addressed, so a reader holding an older manifest never sees a
// template file change under it.
std::string template_file_name(const std::string& user_id, const std::string& digest) {
  return fmt::format("template-{}-{}.json", sha256_hex(user_id).substr(0, 16), digest.substr(0, 16));
}

std::string serialize_manifest(const Manifest& manifest) {
  textio::JsonWriter w;
  w.begin_object();
  w.key("format").value("sigcloud-store");
  w.key("version").value(1);
  w.key("templates").begin_array();
  for (const auto& [user, entry] : manifest) {
    w.begin_object();
    w.key("user_id").value(user);
    w.key("file").value(entry.file);
    w.key("sha256").value(entry.sha256);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

Manifest parse_manifest(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "sigcloud-store") raise(Errc::CorruptStore, "not a template store manifest");
    Manifest m;
    for (const auto& e : j.at("templates")) {
      const auto user = e.at("user_id").get<std::string>();
      ManifestEntry entry{e.at("file").get<std::string>(), e.at("sha256").get<std::string>()};
      if (entry.file.find('/') != std::string::npos || entry.file.find("..") != std::string::npos) {
        raise(Errc::CorruptStore, "manifest names a file outside the store: " + entry.file);
      }
      if (!m.emplace(user, std::move(entry)).second) raise(Errc::CorruptStore, "manifest lists " + user + " twice");
    }
    return m;
  } catch (const json::exception& e) {
    raise(Errc::CorruptStore, std::string("manifest: ") + e.what());
  }
}

ManifestEntry write_template_file(const fs::path& dir, const TemplateRecord& record) {
  const std::string text = serialize_template(record);
  const std::string digest = sha256_hex(text);
  ManifestEntry entry{template_file_name(record.user_id, digest), digest};
  textio::write_file_atomic(dir / entry.file, text);
  return entry;
}

void write_manifest(const fs::path& dir, const Manifest& manifest) {
  textio::write_file_atomic(dir / kManifestName, serialize_manifest(manifest));
}

void remove_unreferenced(const fs::path& dir, const Manifest& manifest) {
  std::error_code ec;
  for (const auto& item : fs::directory_iterator(dir, ec)) {
    const std::string name = item.path().filename().string();
    if (!name.starts_with("template-") || !name.ends_with(".json")) continue;
    const bool referenced = std::any_of(manifest.begin(), manifest.end(),
                                        [&](const auto& kv) { return kv.second.file == name; });
    if (!referenced) fs::remove(item.path(), ec);
  }
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) raise(Errc::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

struct TemplateStore::State {
  mutable std::mutex snapshot_mutex;
  Snapshot records = std::make_shared<const std::map<std::string, TemplateRecord>>();
  std::mutex write_mutex;
  std::optional<fs::path> dir;
  Manifest manifest;
};

TemplateStore::TemplateStore() : state_(std::make_unique<State>()) {}
TemplateStore::TemplateStore(std::unique_ptr<State> state) : state_(std::move(state)) {}
TemplateStore::TemplateStore(TemplateStore&&) noexcept = default;
TemplateStore& TemplateStore::operator=(TemplateStore&&) noexcept = default;
TemplateStore::~TemplateStore() = default;

TemplateStore TemplateStore::open(const fs::path& dir) {
  if (fs::exists(dir / kManifestName)) return store_load(dir);
  ensure_directory(dir);
  auto state = std::make_unique<State>();
  state->dir = dir;
  write_manifest(dir, state->manifest);
  return TemplateStore(std::move(state));
}

TemplateStore::Snapshot TemplateStore::snapshot() const {
  std::lock_guard lock(state_->snapshot_mutex);
  return state_->records;
}

std::shared_ptr<const TemplateRecord> TemplateStore::find(const std::string& user_id) const {
  Snapshot snap = snapshot();
  const auto it = snap->find(user_id);
  if (it == snap->end()) return nullptr;
  return {snap, &it->second};
}

const std::optional<fs::path>& TemplateStore::directory() const { return state_->dir; }

void TemplateStore::put(TemplateRecord record) {
  check_consistency(record);
  std::lock_guard write_lock(state_->write_mutex);
  auto next = std::make_shared<std::map<std::string, TemplateRecord>>(*snapshot());
  const std::string user = record.user_id;
  if (state_->dir) {
    const fs::path& dir = *state_->dir;
    const ManifestEntry entry = write_template_file(dir, record);
    Manifest manifest = state_->manifest;
    const auto previous = manifest.find(user);
    const std::string stale = previous != manifest.end() ? previous->second.file : std::string();
    manifest[user] = entry;
    write_manifest(dir, manifest);
    state_->manifest = std::move(manifest);
    if (!stale.empty() && stale != entry.file) {
      std::error_code ec;
      fs::remove(dir / stale, ec);
    }
  }
  (*next)[user] = std::move(record);
  std::lock_guard lock(state_->snapshot_mutex);
  state_->records = std::move(next);
}

bool TemplateStore::operator==(const TemplateStore& other) const { return *snapshot() == *other.snapshot(); }

void store_save(const TemplateStore& store, const fs::path& dir) {
  ensure_directory(dir);
  const TemplateStore::Snapshot snap = store.snapshot();
  Manifest manifest;
  for (const auto& [user, record] : *snap) manifest[user] = write_template_file(dir, record);
  write_manifest(dir, manifest);
  remove_unreferenced(dir, manifest);
}

TemplateStore store_load(const fs::path& dir) {
  const fs::path manifest_path = dir / kManifestName;
  std::string problem;
  for (int attempt = 0; attempt < kLoadAttempts; ++attempt) {
    const std::string manifest_text = textio::read_file(manifest_path);
    const Manifest manifest = parse_manifest(manifest_text);
    auto records = std::make_shared<std::map<std::string, TemplateRecord>>();
    problem.clear();
    for (const auto& [user, entry] : manifest) {
      std::string text;
      try {
        text = textio::read_file(dir / entry.file);
      } catch (const Error& e) {
        problem = e.what();
        break;
      }
      if (sha256_hex(text) != entry.sha256) {
        problem = "checksum mismatch for " + entry.file;
        break;
      }
      try {
        TemplateRecord record = parse_template(text);
        if (record.user_id != user) {
          problem = entry.file + " holds " + record.user_id + ", manifest says " + user;
          break;
        }
        check_consistency(record);
        records->emplace(user, std::move(record));
      } catch (const Error& e) {
        problem = entry.file + ": " + e.what();
        break;
      }
    }
    if (problem.empty()) {
      auto state = std::make_unique<TemplateStore::State>();
      state->records = std::move(records);
      state->dir = dir;
      state->manifest = manifest;
      return TemplateStore(std::move(state));
    }
    // A writer may have replaced the manifest while we read; retry only then.
    std::string again;
    try {
      again = textio::read_file(manifest_path);
    } catch (const Error&) {
      break;
    }
    if (again == manifest_text) break;
  }
  raise(Errc::CorruptStore, dir.string() + ": " + problem);
}

bool TemplateRecord::operator==(const TemplateRecord& o) const {
  return user_id == o.user_id && model == o.model && pca == o.pca && threshold == o.threshold &&
         enrollment_eer == o.enrollment_eer && enrolled_at == o.enrolled_at && fingerprint == o.fingerprint &&
         trainer == o.trainer && enrollment_scores == o.enrollment_scores;
}

void check_consistency(const TemplateRecord& r) {
  const Fingerprint& f = r.fingerprint;
  if (r.pca.input_dimension() != f.mask.count() * f.resample_length) {
    raise(Errc::DimensionMismatch, fmt::format("template of {} expects {} raw features, PCA model takes {}", r.user_id,
                                               f.mask.count() * f.resample_length, r.pca.input_dimension()));
  }
  if (r.pca.k != f.components || nnet::model_input_size(r.model) != f.components) {
    raise(Errc::DimensionMismatch, fmt::format("template of {}: fingerprint k={}, PCA k={}, model inputs={}",
                                               r.user_id, f.components, r.pca.k, nnet::model_input_size(r.model)));
  }
  if (f.algorithm != r.trainer.trainer.algorithm) {
    raise(Errc::DimensionMismatch, "template of " + r.user_id + " names two different trainers");
  }
  if (!(r.threshold > 0.0 && r.threshold < 1.0)) {
    raise(Errc::InvalidArgument, fmt::format("template of {} has threshold {} outside (0, 1)", r.user_id, r.threshold));
  }
}

std::string serialize_template(const TemplateRecord& r) {
  textio::JsonWriter w;
  w.begin_object();
  w.key("format").value("sigcloud-template");
  w.key("version").value(1);
  w.key("user_id").value(r.user_id);
  w.key("enrolled_at").value(static_cast<std::int64_t>(r.enrolled_at));
  w.key("threshold").value(r.threshold);
  w.key("enrollment_eer").value(r.enrollment_eer);
  w.key("fingerprint").begin_object();
  w.key("resample_length").value(static_cast<std::uint64_t>(r.fingerprint.resample_length));
  w.key("mask").value(r.fingerprint.mask.to_string());
  w.key("components").value(static_cast<std::uint64_t>(r.fingerprint.components));
  w.key("algorithm").value(nnet::algorithm_name(r.fingerprint.algorithm));
  w.end_object();
  w.key("trainer");
  formats::write_trainer(w, r.trainer);
  w.key("enrollment_scores").begin_array();
  for (const auto& s : r.enrollment_scores) {
    w.begin_object();
    w.key("sample_id").value(s.sample_id);
    w.key("label").value(sigmodel::label_name(s.label));
    w.key("score").value(s.score);
    w.end_object();
  }
  w.end_array();
  w.key("pca");
  formats::write_pca(w, r.pca);
  w.key("model");
  formats::write_model(w, r.model);
  w.end_object();
  return w.str();
}

TemplateRecord parse_template(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(Errc::ParseFailure, std::string("template: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "sigcloud-template") raise(Errc::SchemaViolation, "not a template");
    TemplateRecord r;
    r.user_id = j.at("user_id").get<std::string>();
    r.enrolled_at = j.at("enrolled_at").get<std::int64_t>();
    r.threshold = j.at("threshold").get<double>();
    r.enrollment_eer = j.at("enrollment_eer").get<double>();
    const json& f = j.at("fingerprint");
    r.fingerprint.resample_length = f.at("resample_length").get<std::size_t>();
    r.fingerprint.mask = sigmodel::FeatureMask::parse(f.at("mask").get<std::string>());
    r.fingerprint.components = f.at("components").get<std::size_t>();
    r.fingerprint.algorithm = nnet::parse_algorithm(f.at("algorithm").get<std::string>());
    r.trainer = formats::trainer_from_json(j.at("trainer"));
    for (const auto& s : j.at("enrollment_scores")) {
      r.enrollment_scores.push_back({s.at("sample_id").get<std::uint64_t>(),
                                     sigmodel::parse_label(s.at("label").get<std::string>()),
                                     s.at("score").get<double>()});
    }
    r.pca = formats::pca_from_json(j.at("pca"));
    r.model = formats::model_from_json(j.at("model"));
    return r;
  } catch (const json::exception& e) {
    raise(Errc::SchemaViolation, std::string("template: ") + e.what());
  }
}

}  // namespace sigcloud::pipeline
