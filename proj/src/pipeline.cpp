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

#include "sigcloud/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include <fmt/format.h>

#include "sigcloud/error.hpp"
#include "sigcloud/parallel.hpp"

namespace sigcloud::pipeline {

namespace {

// Strictly inside (0, 1) so that both decisions stay reachable.
constexpr double kThresholdMargin = 1e-12;

}  // namespace

TemplateRecord enroll(TemplateStore& store, const std::string& user_id, std::span<const RawSignatureSample> samples,
                      const EnrollConfig& cfg) {
  cfg.trainer.validate();
  std::size_t genuine = 0;
  std::size_t forged = 0;
  for (const auto& s : samples) {
    if (s.user_id == user_id) ++(s.label == Label::Genuine ? genuine : forged);
  }
  if (genuine < cfg.min_genuine || forged < cfg.min_forged) {
    raise(Errc::InsufficientEnrollment,
          fmt::format("{} has {} genuine and {} forged samples, need at least {} and {}", user_id, genuine, forged,
                      cfg.min_genuine, cfg.min_forged));
  }

  const std::vector<RawSignatureSample> all(samples.begin(), samples.end());
  const sigmodel::Dataset ds = sigmodel::featurize(all, cfg.resample_length, cfg.mask, cfg.workers);
  preprocess::PcaModel pca;
  if (cfg.pca) {
    pca = *cfg.pca;
  } else {
    pca = preprocess::dist_sig_preprocess(ds, cfg.workers, cfg.components).model;
  }
  if (pca.input_dimension() != cfg.mask.count() * cfg.resample_length) {
    raise(Errc::DimensionMismatch, fmt::format("PCA model takes {} features, enrollment produces {}",
                                               pca.input_dimension(), cfg.mask.count() * cfg.resample_length));
  }
  const sigmodel::Dataset mine = preprocess::project_dataset(pca, ds.subset_for_user(user_id), cfg.workers);

  TemplateRecord record;
  record.user_id = user_id;
  if (cfg.distributed) {
    record.model = nnet::dist_train_sample(mine, cfg.trainer, cfg.partitions, cfg.hidden, cfg.workers);
  } else {
    record.model = nnet::train_sample(mine, cfg.trainer, cfg.hidden).network;
  }

  std::vector<eval::ScoredSample> scores;
  for (const auto& r : mine.records) {
    const double s = nnet::model_score(record.model, r.x);
    record.enrollment_scores.push_back({r.sample_id, r.label, s});
    scores.push_back({s, r.label});
  }
  const eval::EvalReport report = eval::evaluate(scores);
  record.enrollment_eer = report.eer;
  record.threshold = std::clamp(eval::centered_eer_threshold(report.roc), kThresholdMargin, 1.0 - kThresholdMargin);
  record.pca = pca;
  record.enrolled_at = cfg.timestamp;
  record.fingerprint = {cfg.resample_length, cfg.mask, pca.k, cfg.trainer.algorithm};
  record.trainer = {cfg.trainer, cfg.hidden, cfg.distributed, cfg.distributed ? cfg.partitions : 1};

  store.put(record);
  return record;
}

std::string_view decision_name(Decision d) { return d == Decision::Genuine ? "genuine" : "forged"; }

double probe_score(const TemplateRecord& record, const RawSignatureSample& probe) {
  check_consistency(record);
  const sigmodel::FeatureVector x =
      sigmodel::flatten(sigmodel::resample(probe, record.fingerprint.resample_length), record.fingerprint.mask);
  return nnet::model_score(record.model, preprocess::pca_project(record.pca, x));
}

VerifyDecision verify(const TemplateRecord& record, const RawSignatureSample& probe) {
  const double s = probe_score(record, probe);
  return {s >= record.threshold ? Decision::Genuine : Decision::Forged, s, record.threshold};
}

VerifyDecision verify(const TemplateStore& store, const std::string& user_id, const RawSignatureSample& probe) {
  const auto record = store.find(user_id);
  if (!record) raise(Errc::UserNotEnrolled, user_id + " is not enrolled");
  return verify(*record, probe);
}

double mean_speedup(std::span<const double> stage_speedups) {
  if (stage_speedups.empty()) raise(Errc::InvalidArgument, "no stage speedups to average");
  return std::accumulate(stage_speedups.begin(), stage_speedups.end(), 0.0) /
         static_cast<double>(stage_speedups.size());
}

double BenchReport::overall(std::size_t workers) const {
  std::vector<double> s;
  for (const auto& t : timings) {
    if (t.workers == workers) s.push_back(t.speedup.speedup);
  }
  return mean_speedup(s);
}

namespace {

template <typename F>
double median_seconds(std::size_t runs, F&& work) {
  std::vector<double> t;
  for (std::size_t i = 0; i < std::max<std::size_t>(runs, 1); ++i) {
    const auto start = std::chrono::steady_clock::now();
    work();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(t.begin(), t.end());
  const std::size_t n = t.size();
  return n % 2 == 1 ? t[n / 2] : 0.5 * (t[n / 2 - 1] + t[n / 2]);
}

}  // namespace

BenchReport bench(const sigmodel::Dataset& features, const BenchConfig& cfg) {
  if (features.empty()) raise(Errc::EmptyDataset, "nothing to benchmark");
  if (cfg.workers.empty()) raise(Errc::InvalidArgument, "no worker counts given");

  const preprocess::PreprocessResult pre = preprocess::dist_sig_preprocess(features, 1, cfg.components);
  std::vector<std::string> users = pre.projected.user_ids();
  if (cfg.train_users > 0 && users.size() > cfg.train_users) users.resize(cfg.train_users);
  std::vector<sigmodel::Dataset> per_user;
  for (const auto& u : users) per_user.push_back(pre.projected.subset_for_user(u));

  const auto time_preprocess = [&](std::size_t w) {
    return median_seconds(cfg.runs, [&] { (void)preprocess::dist_sig_preprocess(features, w, cfg.components); });
  };
  const auto time_train = [&](std::size_t w) {
    return median_seconds(cfg.runs, [&] {
      std::vector<nnet::Network> nets(per_user.size());
      parallel_for(per_user.size(), w,
                   [&](std::size_t u) { nets[u] = nnet::train_sample(per_user[u], cfg.trainer, cfg.hidden).network; });
    });
  };

  const double pre_single = time_preprocess(1);
  const double train_single = time_train(1);
  BenchReport report;
  for (std::size_t w : cfg.workers) {
    if (w == 0) raise(Errc::InvalidArgument, "worker count must be positive");
    const double tp = w == 1 ? pre_single : time_preprocess(w);
    report.timings.push_back({"preprocess", w, tp, eval::speedup(pre_single, tp, w)});
    const double tt = w == 1 ? train_single : time_train(w);
    report.timings.push_back({"train", w, tt, eval::speedup(train_single, tt, w)});
  }
  return report;
}

std::string bench_csv(const BenchReport& report) {
  std::string out = "stage,workers,median_seconds,speedup\n";
  std::vector<std::size_t> seen;
  for (const auto& t : report.timings) {
    out += fmt::format("{},{},{:.6f},{:.4f}\n", t.stage, t.workers, t.median_seconds, t.speedup.speedup);
    if (std::find(seen.begin(), seen.end(), t.workers) == seen.end()) seen.push_back(t.workers);
  }
  for (std::size_t w : seen) out += fmt::format("overall,{},,{:.4f}\n", w, report.overall(w));
  return out;
}

std::string bench_summary(const BenchReport& report) {
  if (report.timings.empty()) return {};
  std::size_t widest = 0;
  for (const auto& t : report.timings) widest = std::max(widest, t.workers);
  std::string out = fmt::format("speedups with {} workers\n{:<12}{:>10}\n", widest, "stage", "speedup");
  for (const auto& t : report.timings) {
    if (t.workers == widest) out += fmt::format("{:<12}{:>10.2f}\n", t.stage, t.speedup.speedup);
  }
  out += fmt::format("{:<12}{:>10.2f}\n", "mean", report.overall(widest));
  return out;
}

}  // namespace sigcloud::pipeline
