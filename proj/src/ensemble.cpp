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

#include <map>
#include <string>

#include "sigcloud/error.hpp"
#include "sigcloud/nnet.hpp"
#include "sigcloud/parallel.hpp"

namespace sigcloud::nnet {

std::vector<Dataset> stratified_partitions(const Dataset& ds, std::size_t partitions) {
  if (partitions == 0) raise(Errc::InvalidArgument, "need at least one partition");
  std::vector<std::vector<sigmodel::Record>> parts(partitions);
  std::map<std::pair<std::string, int>, std::size_t> dealt;
  for (const auto& r : ds.records) {
    std::size_t& next = dealt[{r.user_id, static_cast<int>(r.label)}];
    parts[next % partitions].push_back(r);
    ++next;
  }
  std::vector<Dataset> out;
  out.reserve(partitions);
  for (std::size_t p = 0; p < partitions; ++p) {
    bool has_genuine = false;
    bool has_forged = false;
    for (const auto& r : parts[p]) (r.label == Label::Genuine ? has_genuine : has_forged) = true;
    if (!has_genuine || !has_forged) {
      raise(Errc::PartitionTooSmall, "partition " + std::to_string(p) + " of " + std::to_string(partitions) +
                                         " is missing a label class");
    }
    out.push_back(ds.with_records(std::move(parts[p])));
  }
  return out;
}

GlobalModel dist_train_sample(const Dataset& ds, const TrainerConfig& cfg, std::size_t partitions,
                              const std::vector<std::size_t>& hidden, std::size_t workers) {
  const std::vector<Dataset> parts = stratified_partitions(ds, partitions);
  GlobalModel global;
  global.locals.resize(partitions);
  parallel_for(partitions, workers, [&](std::size_t p) {
    TrainerConfig local = cfg;
    local.seed = cfg.seed + p;
    global.locals[p] = train_sample(parts[p], local, hidden).network;
  });
  return global;
}

double ensemble_score(const GlobalModel& model, const Eigen::VectorXd& x) {
  if (model.locals.empty()) raise(Errc::EmptyEnsemble, "global model has no local networks");
  double total = 0.0;
  for (const Network& net : model.locals) total += score(net, x);
  return total / static_cast<double>(model.locals.size());
}

double model_score(const Model& model, const Eigen::VectorXd& x) {
  if (const auto* net = std::get_if<Network>(&model)) return score(*net, x);
  return ensemble_score(std::get<GlobalModel>(model), x);
}

std::size_t model_input_size(const Model& model) {
  if (const auto* net = std::get_if<Network>(&model)) return net->input_size();
  const auto& g = std::get<GlobalModel>(model);
  return g.locals.empty() ? 0 : g.locals.front().input_size();
}

}  // namespace sigcloud::nnet
