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

#include "sigcloud/serialization.hpp"

#include <fstream>

#include <fmt/format.h>

#include "formats.hpp"
#include "sigcloud/error.hpp"
#include "sigcloud/parallel.hpp"
#include "textio.hpp"

namespace sigcloud {

namespace formats {

using nlohmann::json;

void write_pca(textio::JsonWriter& w, const preprocess::PcaModel& m) {
  w.begin_object();
  w.key("format").value("sigcloud-pca");
  w.key("version").value(1);
  w.key("d").value(static_cast<std::uint64_t>(m.input_dimension()));
  w.key("k").value(static_cast<std::uint64_t>(m.k));
  w.key("mean").reals(m.mean);
  w.key("scale").reals(m.scale);
  w.key("explained").reals(m.explained);
  w.key("axes").reals_row_major(m.axes);
  w.end_object();
}

preprocess::PcaModel pca_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "sigcloud-pca") raise(Errc::SchemaViolation, "not a PCA model");
    const auto d = j.at("d").get<Eigen::Index>();
    preprocess::PcaModel m;
    m.k = j.at("k").get<std::size_t>();
    m.mean = textio::to_vector(j.at("mean"));
    m.scale = textio::to_vector(j.at("scale"));
    m.explained = textio::to_vector(j.at("explained"));
    m.axes = textio::to_matrix(j.at("axes"), d, d);
    if (m.mean.size() != d || m.scale.size() != d || m.explained.size() != d || m.k < 1 ||
        m.k > static_cast<std::size_t>(d)) {
      raise(Errc::SchemaViolation, "PCA model fields disagree in dimension");
    }
    return m;
  } catch (const json::exception& e) {
    raise(Errc::SchemaViolation, std::string("PCA model: ") + e.what());
  }
}

void write_network(textio::JsonWriter& w, const nnet::Network& net) {
  w.begin_object();
  w.key("sizes").counts(net.sizes());
  w.key("layers").begin_array();
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const bool output = l + 1 == layers.size();
    w.begin_object();
    w.key("activation").value(output ? nnet::kOutputActivation : nnet::kHiddenActivation);
    w.key("weights").reals_row_major(layers[l].weights);
    w.key("bias").reals(layers[l].bias);
    w.end_object();
  }
  w.end_array();
  w.end_object();
}

nnet::Network network_from_json(const json& j) {
  try {
    nnet::Network net(j.at("sizes").get<std::vector<std::size_t>>());
    const auto& layers = j.at("layers");
    if (!layers.is_array() || layers.size() != net.layers().size()) {
      raise(Errc::SchemaViolation, "network layer count disagrees with sizes");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const bool output = l + 1 == layers.size();
      const auto activation = layers[l].at("activation").get<std::string>();
      if (activation != (output ? nnet::kOutputActivation : nnet::kHiddenActivation)) {
        raise(Errc::SchemaViolation, "unsupported activation " + activation);
      }
      nnet::Layer& layer = net.layers()[l];
      layer.weights = textio::to_matrix(layers[l].at("weights"), layer.weights.rows(), layer.weights.cols());
      layer.bias = textio::to_vector(layers[l].at("bias"));
      if (layer.bias.size() != layer.weights.rows()) raise(Errc::SchemaViolation, "bias length disagrees with sizes");
    }
    return net;
  } catch (const json::exception& e) {
    raise(Errc::SchemaViolation, std::string("network: ") + e.what());
  }
}

void write_model(textio::JsonWriter& w, const nnet::Model& model) {
  w.begin_object();
  if (const auto* net = std::get_if<nnet::Network>(&model)) {
    w.key("kind").value("single");
    w.key("networks").begin_array();
    write_network(w, *net);
  } else {
    w.key("kind").value("ensemble");
    w.key("networks").begin_array();
    for (const auto& local : std::get<nnet::GlobalModel>(model).locals) write_network(w, local);
  }
  w.end_array();
  w.end_object();
}

nnet::Model model_from_json(const json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    const auto& nets = j.at("networks");
    if (!nets.is_array()) raise(Errc::SchemaViolation, "networks must be an array");
    if (kind == "single") {
      if (nets.size() != 1) raise(Errc::SchemaViolation, "single model needs exactly one network");
      return network_from_json(nets[0]);
    }
    if (kind != "ensemble") raise(Errc::SchemaViolation, "unknown model kind " + kind);
    nnet::GlobalModel g;
    for (const auto& n : nets) g.locals.push_back(network_from_json(n));
    if (g.locals.empty()) raise(Errc::EmptyEnsemble, "ensemble without networks");
    return g;
  } catch (const json::exception& e) {
    raise(Errc::SchemaViolation, std::string("model: ") + e.what());
  }
}

void write_trainer(textio::JsonWriter& w, const io::TrainerMeta& m) {
  w.begin_object();
  w.key("algorithm").value(nnet::algorithm_name(m.trainer.algorithm));
  w.key("epochs").value(static_cast<std::uint64_t>(m.trainer.max_epochs));
  w.key("goal").value(m.trainer.goal);
  w.key("min_gradient").value(m.trainer.min_gradient);
  w.key("seed").value(m.trainer.seed);
  w.key("learning_rate").value(m.trainer.learning_rate);
  w.key("gamma").value(m.trainer.gamma);
  w.key("hidden").counts(m.hidden);
  w.key("distributed").value(m.distributed);
  w.key("partitions").value(static_cast<std::uint64_t>(m.partitions));
  w.end_object();
}

io::TrainerMeta trainer_from_json(const json& j) {
  io::TrainerMeta m;
  m.trainer.algorithm = nnet::parse_algorithm(j.at("algorithm").get<std::string>());
  m.trainer.max_epochs = j.at("epochs").get<std::size_t>();
  m.trainer.goal = j.at("goal").get<double>();
  m.trainer.min_gradient = j.at("min_gradient").get<double>();
  m.trainer.seed = j.at("seed").get<std::uint64_t>();
  m.trainer.learning_rate = j.at("learning_rate").get<double>();
  m.trainer.gamma = j.at("gamma").get<double>();
  m.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  m.distributed = j.at("distributed").get<bool>();
  m.partitions = j.at("partitions").get<std::size_t>();
  return m;
}

}  // namespace formats

namespace io {

using nlohmann::json;

namespace {

json parse_line(const std::string& line, const std::string& where) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    raise(Errc::ParseFailure, where + ": " + e.what());
  }
}

}  // namespace

bool TrainerMeta::operator==(const TrainerMeta& o) const {
  const auto& a = trainer;
  const auto& b = o.trainer;
  return a.algorithm == b.algorithm && a.max_epochs == b.max_epochs && a.goal == b.goal &&
         a.min_gradient == b.min_gradient && a.seed == b.seed && a.learning_rate == b.learning_rate &&
         a.gamma == b.gamma && hidden == o.hidden && distributed == o.distributed && partitions == o.partitions;
}

std::string serialize_features(const FeaturesFile& file) {
  std::string out;
  {
    textio::JsonWriter w(false);
    w.begin_object();
    w.key("meta").begin_object();
    w.key("format").value("sigcloud-features");
    w.key("version").value(1);
    w.key("resample_length").value(static_cast<std::uint64_t>(file.dataset.resample_length));
    w.key("mask").value(file.dataset.mask.to_string());
    w.key("components_rule").value(file.rule.to_string());
    w.key("seed").value(file.dataset.seed);
    w.key("pca");
    formats::write_pca(w, file.pca);
    w.end_object();
    w.end_object();
    out = w.line();
    out += '\n';
  }
  for (const auto& r : file.dataset.records) {
    textio::JsonWriter w(false);
    w.begin_object();
    w.key("user_id").value(r.user_id);
    w.key("sample_id").value(r.sample_id);
    w.key("label").value(sigmodel::label_name(r.label));
    w.key("values").reals(r.x);
    w.end_object();
    out += w.line();
    out += '\n';
  }
  return out;
}

void write_features(const FeaturesFile& file, const std::filesystem::path& path) {
  textio::write_file_atomic(path, serialize_features(file));
}

FeaturesFile read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::IoFailure, "cannot open " + path.string());
  FeaturesFile file;
  bool have_meta = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const json j = parse_line(line, where);
    try {
      if (!have_meta) {
        const json& meta = j.at("meta");
        if (meta.at("format").get<std::string>() != "sigcloud-features") {
          raise(Errc::SchemaViolation, where + ": not a features file");
        }
        file.dataset.resample_length = meta.at("resample_length").get<std::size_t>();
        file.dataset.mask = sigmodel::FeatureMask::parse(meta.at("mask").get<std::string>());
        file.rule = preprocess::ComponentsRule::parse(meta.at("components_rule").get<std::string>());
        file.dataset.seed = meta.at("seed").get<std::uint64_t>();
        file.pca = formats::pca_from_json(meta.at("pca"));
        have_meta = true;
        continue;
      }
      sigmodel::Record r;
      r.user_id = j.at("user_id").get<std::string>();
      r.sample_id = j.at("sample_id").get<std::uint64_t>();
      r.label = sigmodel::parse_label(j.at("label").get<std::string>());
      r.x = textio::to_vector(j.at("values"));
      if (static_cast<std::size_t>(r.x.size()) != file.pca.k) {
        raise(Errc::SchemaViolation, where + ": expected " + std::to_string(file.pca.k) + " values");
      }
      file.dataset.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      raise(Errc::SchemaViolation, where + ": " + e.what());
    }
  }
  if (!have_meta) raise(Errc::SchemaViolation, path.string() + ": missing metadata line");
  return file;
}

const UserModel* ModelFile::find(const std::string& user_id) const {
  for (const auto& u : users) {
    if (u.user_id == user_id) return &u;
  }
  return nullptr;
}

std::string serialize_model_file(const ModelFile& file) {
  textio::JsonWriter w;
  w.begin_object();
  w.key("format").value("sigcloud-model");
  w.key("version").value(1);
  w.key("trainer");
  formats::write_trainer(w, file.meta);
  w.key("resample_length").value(static_cast<std::uint64_t>(file.resample_length));
  w.key("mask").value(file.mask.to_string());
  w.key("pca");
  formats::write_pca(w, file.pca);
  w.key("users").begin_array();
  for (const auto& u : file.users) {
    w.begin_object();
    w.key("user_id").value(u.user_id);
    w.key("model");
    formats::write_model(w, u.model);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  return w.str();
}

void write_model_file(const ModelFile& file, const std::filesystem::path& path) {
  textio::write_file_atomic(path, serialize_model_file(file));
}

ModelFile read_model_file(const std::filesystem::path& path) {
  const json j = textio::parse_file(path);
  try {
    if (j.at("format").get<std::string>() != "sigcloud-model") {
      raise(Errc::SchemaViolation, path.string() + ": not a model file");
    }
    ModelFile file;
    file.meta = formats::trainer_from_json(j.at("trainer"));
    file.resample_length = j.at("resample_length").get<std::size_t>();
    file.mask = sigmodel::FeatureMask::parse(j.at("mask").get<std::string>());
    file.pca = formats::pca_from_json(j.at("pca"));
    for (const auto& u : j.at("users")) {
      UserModel um{u.at("user_id").get<std::string>(), formats::model_from_json(u.at("model"))};
      if (nnet::model_input_size(um.model) != file.pca.k) {
        raise(Errc::DimensionMismatch, "model for " + um.user_id + " does not take " + std::to_string(file.pca.k) +
                                           " inputs");
      }
      file.users.push_back(std::move(um));
    }
    return file;
  } catch (const json::exception& e) {
    raise(Errc::SchemaViolation, path.string() + ": " + e.what());
  }
}

ModelFile train_models(const FeaturesFile& features, const TrainerMeta& meta, std::size_t workers) {
  meta.trainer.validate();
  const sigmodel::Dataset& ds = features.dataset;
  if (ds.empty()) raise(Errc::EmptyDataset, "no feature records to train on");
  const std::vector<std::string> users = ds.user_ids();
  ModelFile file;
  file.meta = meta;
  file.resample_length = ds.resample_length;
  file.mask = ds.mask;
  file.pca = features.pca;
  file.users.resize(users.size());
  parallel_for(users.size(), workers, [&](std::size_t u) {
    const sigmodel::Dataset mine = ds.subset_for_user(users[u]);
    file.users[u].user_id = users[u];
    if (meta.distributed) {
      file.users[u].model = nnet::dist_train_sample(mine, meta.trainer, meta.partitions, meta.hidden, 1);
    } else {
      file.users[u].model = nnet::train_sample(mine, meta.trainer, meta.hidden).network;
    }
  });
  return file;
}

}  // namespace io
}  // namespace sigcloud
