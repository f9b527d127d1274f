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

// Features file (JSON lines with a metadata header) and model file.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sigcloud/nnet.hpp"
#include "sigcloud/preprocess.hpp"
#include "sigcloud/sigmodel.hpp"

namespace sigcloud::io {

// Projected vectors plus the PCA model that produced them. The first line
// holds {"meta": {...}}, every following line one record.
struct FeaturesFile {
  preprocess::PcaModel pca;
  preprocess::ComponentsRule rule;
  sigmodel::Dataset dataset;  // dataset.resample_length and dataset.mask describe the raw features
};

std::string serialize_features(const FeaturesFile& file);
void write_features(const FeaturesFile& file, const std::filesystem::path& path);
FeaturesFile read_features(const std::filesystem::path& path);

struct TrainerMeta {
  nnet::TrainerConfig trainer;
  std::vector<std::size_t> hidden = nnet::kDefaultHidden;
  bool distributed = false;
  std::size_t partitions = 1;

  // Compares the persisted fields only.
  bool operator==(const TrainerMeta& other) const;
};

struct UserModel {
  std::string user_id;
  nnet::Model model;

  bool operator==(const UserModel&) const = default;
};

struct ModelFile {
  TrainerMeta meta;
  std::size_t resample_length = sigmodel::kDefaultResampleLength;
  sigmodel::FeatureMask mask;
  preprocess::PcaModel pca;  // the model the training features were projected with
  std::vector<UserModel> users;

  const UserModel* find(const std::string& user_id) const;
};

std::string serialize_model_file(const ModelFile& file);
void write_model_file(const ModelFile& file, const std::filesystem::path& path);
ModelFile read_model_file(const std::filesystem::path& path);

// Trains one model per user of `features` (in user order), users in parallel.
ModelFile train_models(const FeaturesFile& features, const TrainerMeta& meta, std::size_t workers = 1);

}  // namespace sigcloud::io
