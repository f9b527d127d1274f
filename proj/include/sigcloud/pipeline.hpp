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
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sigcloud/eval.hpp"
#include "sigcloud/nnet.hpp"
#include "sigcloud/preprocess.hpp"
#include "sigcloud/serialization.hpp"
#include "sigcloud/sigmodel.hpp"

namespace sigcloud::pipeline {

using sigmodel::Label;
using sigmodel::RawSignatureSample;

// What a probe must be prepared with to be comparable to the template.
struct Fingerprint {
  std::size_t resample_length = sigmodel::kDefaultResampleLength;
  sigmodel::FeatureMask mask;
  std::size_t components = 0;
  nnet::Algorithm algorithm = nnet::Algorithm::Lm;

  bool operator==(const Fingerprint&) const = default;
};

struct EnrollmentScore {
  std::uint64_t sample_id = 0;
  Label label = Label::Genuine;
  double score = 0.0;

  bool operator==(const EnrollmentScore&) const = default;
};

struct TemplateRecord {
  std::string user_id;
  nnet::Model model;
  preprocess::PcaModel pca;
  double threshold = 0.5;  // in (0, 1)
  double enrollment_eer = 0.0;
  std::int64_t enrolled_at = 0;  // seconds since the epoch
  Fingerprint fingerprint;
  io::TrainerMeta trainer;
  std::vector<EnrollmentScore> enrollment_scores;  // in enrollment sample order

  bool operator==(const TemplateRecord& other) const;
};

// Throws DimensionMismatch when the model, PCA model and fingerprint disagree.
void check_consistency(const TemplateRecord& record);

std::string serialize_template(const TemplateRecord& record);
TemplateRecord parse_template(std::string_view text);

class TemplateStore {
 public:
  using Snapshot = std::shared_ptr<const std::map<std::string, TemplateRecord>>;

  // In memory only.
  TemplateStore();
  // Backed by `dir`: loads it when it holds a manifest, otherwise starts empty.
  static TemplateStore open(const std::filesystem::path& dir);

  TemplateStore(TemplateStore&&) noexcept;
  TemplateStore& operator=(TemplateStore&&) noexcept;
  ~TemplateStore();

  // Replaces any previous template of the user; persisted when backed by a
  // directory. Safe to call concurrently for distinct users.
  void put(TemplateRecord record);

  // Immutable view; later writes do not affect it.
  Snapshot snapshot() const;
  std::shared_ptr<const TemplateRecord> find(const std::string& user_id) const;
  std::size_t size() const { return snapshot()->size(); }
  const std::optional<std::filesystem::path>& directory() const;

  bool operator==(const TemplateStore& other) const;

 private:
  struct State;
  explicit TemplateStore(std::unique_ptr<State> state);
  std::unique_ptr<State> state_;

  friend TemplateStore store_load(const std::filesystem::path& path);
};

// Writes every template plus manifest.json into `dir`.
void store_save(const TemplateStore& store, const std::filesystem::path& dir);
// Throws IoFailure when no manifest can be read, CorruptStore on checksum or
// content mismatch.
TemplateStore store_load(const std::filesystem::path& dir);

struct EnrollConfig {
  std::size_t resample_length = sigmodel::kDefaultResampleLength;
  sigmodel::FeatureMask mask;
  preprocess::ComponentsRule components;
  nnet::TrainerConfig trainer;
  std::vector<std::size_t> hidden = nnet::kDefaultHidden;
  bool distributed = false;
  std::size_t partitions = 3;
  std::size_t workers = 1;
  std::size_t min_genuine = 4;
  std::size_t min_forged = 4;
  std::int64_t timestamp = 0;  // recorded as enrolled_at
  // Projection shared across templates. When absent it is fitted on every
  // sample passed to enroll, other users included.
  std::optional<preprocess::PcaModel> pca;
};

// Fits (or reuses) the PCA model, then trains on the samples of `user_id`.
// Throws InsufficientEnrollment.
TemplateRecord enroll(TemplateStore& store, const std::string& user_id, std::span<const RawSignatureSample> samples,
                      const EnrollConfig& cfg);

enum class Decision { Genuine, Forged };

std::string_view decision_name(Decision d);

struct VerifyDecision {
  Decision decision = Decision::Forged;
  double score = 0.0;
  double threshold = 0.0;
};

double probe_score(const TemplateRecord& record, const RawSignatureSample& probe);
VerifyDecision verify(const TemplateRecord& record, const RawSignatureSample& probe);
// Throws UserNotEnrolled.
VerifyDecision verify(const TemplateStore& store, const std::string& user_id, const RawSignatureSample& probe);

struct BenchConfig {
  std::vector<std::size_t> workers = {1, 2, 4, 8};
  std::size_t runs = 3;
  preprocess::ComponentsRule components;
  nnet::TrainerConfig trainer;
  std::vector<std::size_t> hidden = nnet::kDefaultHidden;
  std::size_t train_users = 0;  // 0 trains every user
};

struct StageTiming {
  std::string stage;  // "preprocess" or "train"
  std::size_t workers = 1;
  double median_seconds = 0.0;
  eval::SpeedupRecord speedup;
};

struct BenchReport {
  std::vector<StageTiming> timings;

  // Mean of the stage speedups at `workers`.
  double overall(std::size_t workers) const;
};

double mean_speedup(std::span<const double> stage_speedups);

BenchReport bench(const sigmodel::Dataset& features, const BenchConfig& cfg);

// stage,workers,median_seconds,speedup with an overall row per worker count.
std::string bench_csv(const BenchReport& report);
// stage, speedup and their mean at the largest worker count.
std::string bench_summary(const BenchReport& report);

}  // namespace sigcloud::pipeline
