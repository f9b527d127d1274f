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
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <thread>

#include "doctest.h"
#include "sigcloud/error.hpp"
#include "sigcloud/parallel.hpp"
#include "sigcloud/pipeline.hpp"
#include "sigcloud/synthgen.hpp"
#include "support.hpp"

using namespace sigcloud;
using namespace sigcloud::pipeline;
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

std::vector<RawSignatureSample> small_corpus(std::size_t users, std::uint64_t seed = 3) {
  synthgen::GenConfig g;
  g.n_users = users;
  g.n_genuine = 10;
  g.n_forged = 10;
  g.raw_length = 48;
  g.seed = seed;
  return synthgen::gen_dataset(g);
}

EnrollConfig small_config() {
  EnrollConfig cfg;
  cfg.resample_length = 16;
  cfg.trainer.max_epochs = 20;
  cfg.hidden = {6};
  cfg.timestamp = 1700000000;
  return cfg;
}

std::vector<RawSignatureSample> samples_of(const std::vector<RawSignatureSample>& corpus, const std::string& user) {
  std::vector<RawSignatureSample> out;
  for (const auto& s : corpus) {
    if (s.user_id == user) out.push_back(s);
  }
  return out;
}

std::map<std::string, std::string> directory_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::ifstream in(entry.path(), std::ios::binary);
    out[entry.path().filename().string()] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  return out;
}

}  // namespace

TEST_CASE("enroll persists a template that reloads with a matching fingerprint") {
  const auto corpus = small_corpus(3);
  const fs::path dir = testing::scratch_dir("enroll");
  const std::string user = corpus.front().user_id;
  TemplateStore store = TemplateStore::open(dir);
  const TemplateRecord rec = enroll(store, user, corpus, small_config());
  CHECK(rec.user_id == user);
  CHECK(rec.fingerprint.resample_length == 16);
  CHECK(rec.fingerprint.mask == sigmodel::FeatureMask::all());
  CHECK(rec.fingerprint.components == rec.pca.k);
  CHECK(rec.fingerprint.components == 48);  // quarter of 12 * 16
  CHECK(nnet::model_input_size(rec.model) == rec.pca.k);
  CHECK(rec.threshold > 0.0);
  CHECK(rec.threshold < 1.0);
  CHECK(rec.enrolled_at == 1700000000);
  CHECK(rec.enrollment_scores.size() == 20);
  CHECK(*store.find(user) == rec);

  const TemplateStore reopened = TemplateStore::open(dir);
  REQUIRE(reopened.find(user) != nullptr);
  CHECK(*reopened.find(user) == rec);
  CHECK(reopened == store);
  CHECK(parse_template(serialize_template(rec)) == rec);
}

TEST_CASE("enroll needs enough genuine and forged samples") {
  auto samples = samples_of(small_corpus(1), synthgen::user_id_for(0, 1));
  TemplateStore store;
  std::vector<RawSignatureSample> two_genuine;
  for (const auto& s : samples) {
    if (s.label == Label::Genuine && two_genuine.size() < 2) two_genuine.push_back(s);
  }
  CHECK(code_of([&] { (void)enroll(store, samples.front().user_id, two_genuine, small_config()); }) ==
        Errc::InsufficientEnrollment);
  std::vector<RawSignatureSample> few_forged;
  std::size_t forged = 0;
  for (const auto& s : samples) {
    if (s.label == Label::Genuine || forged++ < 3) few_forged.push_back(s);
  }
  CHECK(code_of([&] { (void)enroll(store, samples.front().user_id, few_forged, small_config()); }) ==
        Errc::InsufficientEnrollment);
  EnrollConfig lenient = small_config();
  lenient.min_forged = 3;
  CHECK_NOTHROW((void)enroll(store, samples.front().user_id, few_forged, lenient));
  CHECK(code_of([&] { (void)enroll(store, "nobody", samples, small_config()); }) == Errc::InsufficientEnrollment);
  CHECK(store.size() == 1);
}

TEST_CASE("enrolling the same samples twice writes byte-identical files") {
  const auto corpus = small_corpus(2);
  const fs::path a = testing::scratch_dir("bytes-a");
  const fs::path b = testing::scratch_dir("bytes-b");
  for (const fs::path& dir : {a, b}) {
    TemplateStore store = TemplateStore::open(dir);
    for (std::size_t u = 0; u < 2; ++u) (void)enroll(store, synthgen::user_id_for(u, 2), corpus, small_config());
  }
  const auto ca = directory_contents(a);
  CHECK(ca.size() == 3);
  CHECK(ca == directory_contents(b));
}

TEST_CASE("re-enrolling replaces the template and leaves one file per user") {
  const auto corpus = small_corpus(2);
  const fs::path dir = testing::scratch_dir("reenroll");
  TemplateStore store = TemplateStore::open(dir);
  const std::string user = synthgen::user_id_for(0, 2);
  (void)enroll(store, user, corpus, small_config());
  EnrollConfig later = small_config();
  later.timestamp += 60;
  later.trainer.seed = 99;
  const TemplateRecord second = enroll(store, user, corpus, later);
  CHECK(store.size() == 1);
  CHECK(directory_contents(dir).size() == 2);
  CHECK(TemplateStore::open(dir).find(user)->enrolled_at == second.enrolled_at);
}

TEST_CASE("verify rejects unknown users and drifted fingerprints") {
  const auto corpus = small_corpus(2);
  TemplateStore store;
  const std::string user = synthgen::user_id_for(0, 2);
  const TemplateRecord rec = enroll(store, user, corpus, small_config());
  CHECK(code_of([&] { (void)verify(store, synthgen::user_id_for(1, 2), corpus.front()); }) == Errc::UserNotEnrolled);

  TemplateRecord drifted = rec;
  drifted.fingerprint.resample_length = 32;
  CHECK(code_of([&] { (void)verify(drifted, corpus.front()); }) == Errc::DimensionMismatch);
  CHECK(code_of([&] { check_consistency(drifted); }) == Errc::DimensionMismatch);
  drifted = rec;
  drifted.fingerprint.mask = sigmodel::FeatureMask::excluding(3);
  CHECK(code_of([&] { (void)verify(drifted, corpus.front()); }) == Errc::DimensionMismatch);
  drifted = rec;
  drifted.fingerprint.components = rec.pca.k - 1;
  CHECK(code_of([&] { check_consistency(drifted); }) == Errc::DimensionMismatch);
  drifted = rec;
  drifted.threshold = 1.0;
  CHECK(code_of([&] { check_consistency(drifted); }) == Errc::InvalidArgument);
}

TEST_CASE("enrollment samples re-presented as probes score as during training") {
  const auto corpus = small_corpus(3);
  for (bool distributed : {false, true}) {
    TemplateStore store;
    EnrollConfig cfg = small_config();
    cfg.distributed = distributed;
    cfg.partitions = 2;
    const std::string user = synthgen::user_id_for(1, 3);
    const TemplateRecord rec = enroll(store, user, corpus, cfg);
    CHECK(std::holds_alternative<nnet::GlobalModel>(rec.model) == distributed);
    const auto own = samples_of(corpus, user);
    REQUIRE(own.size() == rec.enrollment_scores.size());
    for (std::size_t i = 0; i < own.size(); ++i) {
      CHECK(rec.enrollment_scores[i].sample_id == own[i].sample_id);
      CHECK(rec.enrollment_scores[i].label == own[i].label);
      CHECK(std::abs(probe_score(rec, own[i]) - rec.enrollment_scores[i].score) <= 1e-12);
    }
  }
}

TEST_CASE("property: the decision is genuine exactly when score >= threshold") {
  const auto corpus = small_corpus(3);
  TemplateStore store;
  const TemplateRecord rec = enroll(store, synthgen::user_id_for(0, 3), corpus, small_config());
  for (const auto& probe : corpus) {
    const VerifyDecision d = verify(rec, probe);
    CHECK(d.threshold == rec.threshold);
    CHECK(d.score > 0.0);
    CHECK(d.score < 1.0);
    CHECK((d.decision == Decision::Genuine) == (d.score >= d.threshold));
  }
  CHECK(decision_name(Decision::Genuine) == "genuine");
  CHECK(decision_name(Decision::Forged) == "forged");
}

TEST_CASE("store round-trips five users and an empty store") {
  const auto corpus = small_corpus(5);
  TemplateStore store;
  for (std::size_t u = 0; u < 5; ++u) (void)enroll(store, synthgen::user_id_for(u, 5), corpus, small_config());
  const fs::path dir = testing::scratch_dir("roundtrip");
  store_save(store, dir);
  const TemplateStore loaded = store_load(dir);
  CHECK(loaded.size() == 5);
  CHECK(loaded == store);

  const fs::path empty = testing::scratch_dir("roundtrip-empty");
  store_save(TemplateStore{}, empty);
  CHECK(store_load(empty).size() == 0);
  CHECK(store_load(empty) == TemplateStore{});
}

TEST_CASE("property: store round-trip identity over random stores") {
  const auto corpus = small_corpus(4, 11);
  std::vector<TemplateRecord> pool;
  TemplateStore scratch;
  for (std::size_t u = 0; u < 4; ++u) pool.push_back(enroll(scratch, synthgen::user_id_for(u, 4), corpus, small_config()));
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 20; ++trial) {
    TemplateStore store;
    const std::size_t n = rng() % 6;
    for (std::size_t i = 0; i < n; ++i) {
      TemplateRecord r = pool[rng() % pool.size()];
      r.user_id = "user-" + std::to_string(rng() % 1000);
      r.enrolled_at = static_cast<std::int64_t>(rng() % 2000000000);
      r.threshold = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
      store.put(r);
    }
    const fs::path dir = testing::scratch_dir("random-store");
    store_save(store, dir);
    CHECK(store_load(dir) == store);
  }
}

TEST_CASE("damaged stores are reported") {
  const auto corpus = small_corpus(2);
  const fs::path dir = testing::scratch_dir("damaged");
  {
    TemplateStore store = TemplateStore::open(dir);
    for (std::size_t u = 0; u < 2; ++u) (void)enroll(store, synthgen::user_id_for(u, 2), corpus, small_config());
  }
  fs::path victim;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().starts_with("template-")) victim = e.path();
  }
  const auto size = fs::file_size(victim);
  fs::resize_file(victim, size / 2);
  CHECK(code_of([&] { (void)store_load(dir); }) == Errc::CorruptStore);
  fs::remove(victim);
  CHECK(code_of([&] { (void)store_load(dir); }) == Errc::CorruptStore);

  fs::resize_file(dir / "manifest.json", 10);
  CHECK(code_of([&] { (void)store_load(dir); }) == Errc::CorruptStore);
  fs::remove(dir / "manifest.json");
  CHECK(code_of([&] { (void)store_load(dir); }) == Errc::IoFailure);
}

TEST_CASE("snapshots do not see later writes") {
  const auto corpus = small_corpus(2);
  TemplateStore store;
  (void)enroll(store, synthgen::user_id_for(0, 2), corpus, small_config());
  const TemplateStore::Snapshot before = store.snapshot();
  (void)enroll(store, synthgen::user_id_for(1, 2), corpus, small_config());
  CHECK(before->size() == 1);
  CHECK(store.size() == 2);
}

TEST_CASE("distinct users enroll concurrently while readers verify") {
  const auto corpus = small_corpus(4, 21);
  const fs::path dir = testing::scratch_dir("concurrent");
  TemplateStore store = TemplateStore::open(dir);
  EnrollConfig cfg = small_config();
  cfg.pca = preprocess::sig_preprocess(sigmodel::featurize(corpus, cfg.resample_length, cfg.mask), cfg.components).model;
  (void)enroll(store, synthgen::user_id_for(0, 4), corpus, cfg);

  std::atomic<bool> done = false;
  std::atomic<std::size_t> reads = 0;
  std::thread reader([&] {
    while (!done) {
      const TemplateStore::Snapshot snap = store.snapshot();
      for (const auto& [user, rec] : *snap) {
        check_consistency(rec);
        (void)verify(rec, corpus.front());
      }
      ++reads;
    }
  });
  parallel_for(3, 3, [&](std::size_t i) { (void)enroll(store, synthgen::user_id_for(i + 1, 4), corpus, cfg); });
  done = true;
  reader.join();
  CHECK(reads > 0);
  CHECK(store.size() == 4);
  CHECK(store_load(dir) == store);

  TemplateStore sequential;
  for (std::size_t u = 0; u < 4; ++u) (void)enroll(sequential, synthgen::user_id_for(u, 4), corpus, cfg);
  CHECK(sequential == store);
}

TEST_CASE("seeded 50-user benchmark: held-out probes verify at 90% or better") {
  synthgen::GenConfig g;
  g.seed = 7;
  const auto corpus = synthgen::gen_dataset(g);
  std::vector<RawSignatureSample> train;
  std::vector<RawSignatureSample> held_out;
  // last 5 of every 20 genuine and 20 forged samples are held out
  for (const auto& s : corpus) (s.sample_id % 20 >= 15 ? held_out : train).push_back(s);

  EnrollConfig cfg;
  cfg.pca = preprocess::sig_preprocess(sigmodel::featurize(train, cfg.resample_length, cfg.mask), cfg.components).model;
  TemplateStore store;
  for (std::size_t u = 0; u < g.n_users; ++u) (void)enroll(store, synthgen::user_id_for(u, g.n_users), train, cfg);

  std::size_t genuine = 0;
  std::size_t accepted = 0;
  std::size_t forged = 0;
  std::size_t rejected = 0;
  for (const auto& probe : held_out) {
    const Decision d = verify(store, probe.user_id, probe).decision;
    if (probe.label == Label::Genuine) {
      ++genuine;
      accepted += d == Decision::Genuine;
    } else {
      ++forged;
      rejected += d == Decision::Forged;
    }
  }
  MESSAGE("genuine accepted ", accepted, "/", genuine, ", forged rejected ", rejected, "/", forged);
  CHECK(genuine == 250);
  CHECK(forged == 250);
  CHECK(static_cast<double>(accepted) >= 0.9 * static_cast<double>(genuine));
  CHECK(static_cast<double>(rejected) >= 0.9 * static_cast<double>(forged));
}

TEST_CASE("bench reports per-stage speedups and their mean") {
  const auto corpus = small_corpus(3);
  const sigmodel::Dataset features = sigmodel::featurize(corpus, 16, sigmodel::FeatureMask::all());
  BenchConfig cfg;
  cfg.workers = {1, 2};
  cfg.runs = 3;
  cfg.trainer.max_epochs = 3;
  cfg.hidden = {4};
  const BenchReport r = bench(features, cfg);
  REQUIRE(r.timings.size() == 4);
  CHECK(r.timings[0].stage == "preprocess");
  CHECK(r.timings[1].stage == "train");
  for (const auto& t : r.timings) {
    CHECK(t.median_seconds > 0.0);
    if (t.workers == 1) CHECK(t.speedup.speedup == 1.0);
  }
  CHECK(r.overall(1) == 1.0);
  CHECK(r.overall(2) == (r.timings[2].speedup.speedup + r.timings[3].speedup.speedup) / 2.0);
  const std::vector<double> table_v = {10.0, 7.0};
  CHECK(mean_speedup(table_v) == 8.5);
  const std::string csv = bench_csv(r);
  CHECK(csv.rfind("stage,workers,median_seconds,speedup\n", 0) == 0);
  CHECK(csv.find("\noverall,1,,1.0000\n") != std::string::npos);
  CHECK(bench_summary(r).find("mean") != std::string::npos);
}
