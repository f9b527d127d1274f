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

#include "sigcloud/experiment.hpp"

#include <fmt/format.h>

#include "sigcloud/error.hpp"
#include "sigcloud/parallel.hpp"

namespace sigcloud::eval {

std::string_view mode_name(TrainingMode mode) {
  return mode == TrainingMode::Sequential ? "sequential" : "distributed";
}

ExperimentResult run_experiment(const std::vector<sigmodel::RawSignatureSample>& corpus, const ExperimentConfig& cfg) {
  if (corpus.empty()) raise(Errc::EmptyDataset, "empty corpus");
  const sigmodel::Dataset all = sigmodel::featurize(corpus, cfg.resample_length, cfg.mask, cfg.workers);
  const auto [train, test] = sigmodel::stratified_split(all, cfg.train_fraction, cfg.split_seed);

  const preprocess::PreprocessResult pre = preprocess::dist_sig_preprocess(train, cfg.workers, cfg.components);
  const sigmodel::Dataset& train_proj = pre.projected;
  const sigmodel::Dataset test_proj = preprocess::project_dataset(pre.model, test, cfg.workers);

  const std::vector<std::string> users = train_proj.user_ids();
  std::vector<std::vector<ScoredSample>> user_scores(users.size());
  parallel_for(users.size(), cfg.workers, [&](std::size_t u) {
    const sigmodel::Dataset mine = train_proj.subset_for_user(users[u]);
    nnet::Model model;
    if (cfg.mode == TrainingMode::Sequential) {
      model = nnet::train_sample(mine, cfg.trainer, cfg.hidden).network;
    } else {
      model = nnet::dist_train_sample(mine, cfg.trainer, cfg.partitions, cfg.hidden, 1);
    }
    for (const auto& r : test_proj.records) {
      if (r.user_id == users[u]) user_scores[u].push_back({nnet::model_score(model, r.x), r.label});
    }
  });

  ExperimentResult result;
  result.components = pre.model.k;
  double eer_sum = 0.0;
  for (std::size_t u = 0; u < users.size(); ++u) {
    result.test_scores.insert(result.test_scores.end(), user_scores[u].begin(), user_scores[u].end());
    bool genuine = false;
    bool forged = false;
    for (const auto& s : user_scores[u]) (s.label == Label::Genuine ? genuine : forged) = true;
    if (genuine && forged) {
      const double e = eer(roc(user_scores[u])).eer;
      result.per_user.push_back({users[u], e});
      eer_sum += e;
    }
  }
  if (!result.per_user.empty()) result.mean_user_eer = eer_sum / static_cast<double>(result.per_user.size());
  result.pooled = evaluate(result.test_scores);
  return result;
}

std::vector<AblationRow> ablate(const std::vector<sigmodel::RawSignatureSample>& corpus, const ExperimentConfig& base) {
  std::vector<AblationRow> rows;
  for (TrainingMode mode : {TrainingMode::Sequential, TrainingMode::Distributed}) {
    for (std::size_t combination = 1; combination <= sigmodel::kChannels; ++combination) {
      ExperimentConfig cfg = base;
      cfg.mode = mode;
      const std::size_t excluded = sigmodel::kChannels - combination;
      cfg.mask = sigmodel::FeatureMask::excluding(excluded);
      rows.push_back({combination, excluded, cfg.mask, mode, run_experiment(corpus, cfg).pooled.eer});
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "combination,mode,excluded_feature,eer\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{:.6f}\n", r.combination, mode_name(r.mode), sigmodel::kChannelNames[r.excluded], r.eer);
  }
  return out;
}

}  // namespace sigcloud::eval
