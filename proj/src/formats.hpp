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

// JSON fragments shared by the features file, the model file and the
// template store.

#include "json.hpp"
#include "sigcloud/nnet.hpp"
#include "sigcloud/preprocess.hpp"
#include "sigcloud/serialization.hpp"
#include "textio.hpp"

namespace sigcloud::formats {

void write_pca(textio::JsonWriter& w, const preprocess::PcaModel& model);
preprocess::PcaModel pca_from_json(const nlohmann::json& j);

void write_network(textio::JsonWriter& w, const nnet::Network& net);
nnet::Network network_from_json(const nlohmann::json& j);

// {"kind": "single", "networks": [...]} or {"kind": "ensemble", ...}
void write_model(textio::JsonWriter& w, const nnet::Model& model);
nnet::Model model_from_json(const nlohmann::json& j);

void write_trainer(textio::JsonWriter& w, const io::TrainerMeta& meta);
io::TrainerMeta trainer_from_json(const nlohmann::json& j);

}  // namespace sigcloud::formats
