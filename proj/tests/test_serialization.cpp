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

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "doctest.h"
#include "sigcloud/error.hpp"
#include "sigcloud/serialization.hpp"
#include "sigcloud/synthgen.hpp"
#include "support.hpp"

using namespace sigcloud;
using namespace sigcloud::io;
namespace fs = std::filesystem;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidArgument;
}

FeaturesFile small_features(std::uint64_t seed) {
  synthgen::GenConfig g;
  g.n_users = 3;
  g.n_genuine = 8;
  g.n_forged = 8;
  g.raw_length = 40;
  g.seed = seed;
  const auto ds = sigmodel::featurize(synthgen::gen_dataset(g), 12, sigmodel::FeatureMask::parse("110111111111"));
  FeaturesFile f;
  f.rule = preprocess::ComponentsRule::parse("var:0.9");
  auto pre = preprocess::sig_preprocess(ds, f.rule);
  f.pca = std::move(pre.model);
  f.dataset = std::move(pre.projected);
  return f;
}

void expect_same_dataset(const sigmodel::Dataset& a, const sigmodel::Dataset& b) {
  CHECK(a.resample_length == b.resample_length);
  CHECK(a.mask == b.mask);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.records[i].user_id == b.records[i].user_id);
    CHECK(a.records[i].sample_id == b.records[i].sample_id);
    CHECK(a.records[i].label == b.records[i].label);
    CHECK(a.records[i].x == b.records[i].x);
  }
}

TrainerMeta quick_meta(bool distributed) {
  TrainerMeta meta;
  meta.trainer.max_epochs = 8;
  meta.hidden = {5};
  meta.distributed = distributed;
  meta.partitions = distributed ? 2 : 1;
  return meta;
}

}  // namespace

TEST_CASE("features file round-trips bit for bit") {
  const FeaturesFile f = small_features(4);
  const fs::path path = testing::scratch_dir("features") / "features.jsonl";
  write_features(f, path);
  const FeaturesFile back = read_features(path);
  CHECK(back.pca == f.pca);
  CHECK(back.rule.to_string() == f.rule.to_string());
  expect_same_dataset(back.dataset, f.dataset);
  CHECK(serialize_features(back) == serialize_features(f));

  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first.rfind("{\"meta\":{\"format\":\"sigcloud-features\"", 0) == 0);
  std::size_t lines = 1;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == f.dataset.size() + 1);
}

TEST_CASE("malformed features files are rejected") {
  const fs::path dir = testing::scratch_dir("features-bad");
  CHECK(code_of([&] { (void)read_features(dir / "missing.jsonl"); }) == Errc::IoFailure);
  std::ofstream(dir / "empty.jsonl");
  CHECK(code_of([&] { (void)read_features(dir / "empty.jsonl"); }) == Errc::SchemaViolation);
  std::ofstream(dir / "garbage.jsonl") << "{not json\n";
  CHECK(code_of([&] { (void)read_features(dir / "garbage.jsonl"); }) == Errc::ParseFailure);

  const FeaturesFile f = small_features(5);
  std::string text = serialize_features(f);
  const auto second_line = text.find('\n') + 1;
  // Drop the first value of the first record.
  const auto values = text.find("\"values\":[", second_line) + 10;
  text.erase(values, text.find(',', values) - values + 1);
  std::ofstream(dir / "short.jsonl") << text;
  CHECK(code_of([&] { (void)read_features(dir / "short.jsonl"); }) == Errc::SchemaViolation);
}

TEST_CASE("model file round-trips single and ensemble models") {
  const FeaturesFile f = small_features(6);
  for (bool distributed : {false, true}) {
    const ModelFile m = train_models(f, quick_meta(distributed));
    REQUIRE(m.users.size() == 3);
    for (const auto& u : m.users) {
      CHECK(std::holds_alternative<nnet::GlobalModel>(u.model) == distributed);
      CHECK(nnet::model_input_size(u.model) == f.pca.k);
    }
    const fs::path path = testing::scratch_dir("model") / "model.json";
    write_model_file(m, path);
    const ModelFile back = read_model_file(path);
    CHECK(back.meta == m.meta);
    CHECK(back.resample_length == 12);
    CHECK(back.mask == f.dataset.mask);
    CHECK(back.pca == f.pca);
    CHECK(back.users == m.users);
    CHECK(serialize_model_file(back) == serialize_model_file(m));
    CHECK(back.find(m.users[1].user_id) != nullptr);
    CHECK(back.find("nobody") == nullptr);
  }
}

TEST_CASE("a model that does not take the stored projection is rejected") {
  const FeaturesFile f = small_features(7);
  ModelFile m = train_models(f, quick_meta(false));
  m.users[0].model = nnet::init_network({f.pca.k + 1, 3, 2}, 1);
  const fs::path path = testing::scratch_dir("model-bad") / "model.json";
  write_model_file(m, path);
  CHECK(code_of([&] { (void)read_model_file(path); }) == Errc::DimensionMismatch);
}

TEST_CASE("train_models is deterministic and independent of the worker count") {
  const FeaturesFile f = small_features(8);
  for (bool distributed : {false, true}) {
    const std::string one = serialize_model_file(train_models(f, quick_meta(distributed), 1));
    CHECK(one == serialize_model_file(train_models(f, quick_meta(distributed), 1)));
    CHECK(one == serialize_model_file(train_models(f, quick_meta(distributed), 3)));
  }
}
