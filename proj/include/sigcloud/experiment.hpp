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

// Preprocess -> train -> score runs over a corpus, and the single-feature
// exclusion ablation built on top of them.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sigcloud/eval.hpp"
#include "sigcloud/nnet.hpp"
#include "sigcloud/preprocess.hpp"
#include "sigcloud/sigmodel.hpp"

namespace sigcloud::eval {

enum class TrainingMode { Sequential, Distributed };

std::string_view mode_name(TrainingMode mode);

struct ExperimentConfig {
  std::size_t resample_length = sigmodel::kDefaultResampleLength;
  sigmodel::FeatureMask mask;
  preprocess::ComponentsRule components;
  double train_fraction = 0.75;
  std::uint64_t split_seed = 1;
  nnet::TrainerConfig trainer;
  std::vector<std::size_t> hidden = nnet::kDefaultHidden;
  TrainingMode mode = TrainingMode::Sequential;
  std::size_t partitions = 3;
  std::size_t workers = 1;
};

struct UserOutcome {
  std::string user_id;
  double eer = 0.0;
};

struct ExperimentResult {
  EvalReport pooled;  // held-out scores of every user, each scored by its own model
  std::vector<ScoredSample> test_scores;
  std::vector<UserOutcome> per_user;
  std::size_t components = 0;
  double mean_user_eer = 0.0;
};

// Fits PCA on the training split of all users, trains one model per user
// (users in parallel), and scores the held-out split.
ExperimentResult run_experiment(const std::vector<sigmodel::RawSignatureSample>& corpus, const ExperimentConfig& cfg);

struct AblationRow {
  std::size_t combination = 0;  // 1..12
  std::size_t excluded = 0;     // channel index
  sigmodel::FeatureMask mask;
  TrainingMode mode = TrainingMode::Sequential;
  double eer = 0.0;
};

// Combination c excludes channel 12 - c (0-based): row 1 drops Z_gyro, row 12
// drops X_accel. Rows come out sequential first, each mode in combination order.
std::vector<AblationRow> ablate(const std::vector<sigmodel::RawSignatureSample>& corpus, const ExperimentConfig& base);

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace sigcloud::eval
