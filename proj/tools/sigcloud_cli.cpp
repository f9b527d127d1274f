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

// Command line front end: corpus generation, preprocessing, training,
// evaluation, ablation, enrollment/verification, cost model and benchmark.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "sigcloud/costmodel.hpp"
#include "sigcloud/error.hpp"
#include "sigcloud/eval.hpp"
#include "sigcloud/experiment.hpp"
#include "sigcloud/pipeline.hpp"
#include "sigcloud/preprocess.hpp"
#include "sigcloud/serialization.hpp"
#include "sigcloud/synthgen.hpp"

namespace {

using namespace sigcloud;

constexpr int kExitError = 2;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) raise(Errc::IoFailure, "write failed for " + path.string());
}

struct TrainerFlags {
  std::string algo = "lm";
  bool dist = false;
  std::size_t partitions = 3;
  std::vector<std::size_t> hidden = nnet::kDefaultHidden;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  double gamma = 0.9;
  double learning_rate = 0.01;

  void attach(CLI::App* cmd) {
    cmd->add_option("--algo", algo, "lm, gd, cg, rprop or bayes")->capture_default_str();
    cmd->add_flag("--dist", dist, "train an ensemble over stratified partitions");
    cmd->add_option("--partitions", partitions, "partitions per user for --dist")->capture_default_str();
    cmd->add_option("--hidden", hidden, "hidden layer sizes, comma separated")->delimiter(',')->capture_default_str();
    cmd->add_option("--epochs", epochs)->capture_default_str();
    cmd->add_option("--seed", seed, "weight initialization seed")->capture_default_str();
    cmd->add_option("--gamma", gamma, "data weight of the bayes objective")->capture_default_str();
    cmd->add_option("--learning-rate", learning_rate, "gd step size")->capture_default_str();
  }

  nnet::TrainerConfig config() const {
    nnet::TrainerConfig c;
    c.algorithm = nnet::parse_algorithm(algo);
    c.max_epochs = epochs;
    c.seed = seed;
    c.gamma = gamma;
    c.learning_rate = learning_rate;
    c.validate();
    return c;
  }

  io::TrainerMeta meta() const { return {config(), hidden, dist, dist ? partitions : 1}; }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signature verification pipeline"};
  app.require_subcommand(1);

  // gen
  synthgen::GenConfig gen_cfg;
  std::string gen_out;
  std::size_t gen_workers = 1;
  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus");
  gen->add_option("--users", gen_cfg.n_users)->capture_default_str();
  gen->add_option("--genuine", gen_cfg.n_genuine)->capture_default_str();
  gen->add_option("--forged", gen_cfg.n_forged)->capture_default_str();
  gen->add_option("--seed", gen_cfg.seed)->capture_default_str();
  gen->add_option("--raw-length", gen_cfg.raw_length, "rows per sample")->capture_default_str();
  gen->add_option("--workers", gen_workers)->capture_default_str();
  gen->add_option("--out", gen_out)->required();

  // preprocess
  std::string pre_in, pre_model, pre_out, pre_rule = "quarter", pre_mask = sigmodel::FeatureMask::all().to_string();
  std::size_t pre_workers = 1;
  std::size_t pre_len = sigmodel::kDefaultResampleLength;
  auto* pre = app.add_subcommand("preprocess", "resample, flatten and project a corpus");
  pre->add_option("--in", pre_in)->required();
  pre->add_option("--workers", pre_workers)->capture_default_str();
  pre->add_option("--resample-len", pre_len)->capture_default_str();
  pre->add_option("--components-rule", pre_rule, "quarter or var:<fraction>")->capture_default_str();
  pre->add_option("--mask", pre_mask, "12 characters of 0/1, one per channel")->capture_default_str();
  pre->add_option("--out-model", pre_model)->required();
  pre->add_option("--out", pre_out)->required();

  // train
  std::string train_in, train_out;
  std::size_t train_workers = 1;
  TrainerFlags train_flags;
  auto* train = app.add_subcommand("train", "train one model per user");
  train->add_option("--in", train_in)->required();
  train->add_option("--out", train_out)->required();
  train->add_option("--workers", train_workers)->capture_default_str();
  train_flags.attach(train);

  // eval
  std::string eval_model, eval_in, eval_roc, eval_report;
  auto* ev = app.add_subcommand("eval", "score features with their users' models");
  ev->add_option("--model", eval_model)->required();
  ev->add_option("--in", eval_in)->required();
  ev->add_option("--roc", eval_roc);
  ev->add_option("--report", eval_report);

  // ablate
  std::string abl_in, abl_out;
  std::uint64_t abl_seed = 1;
  eval::ExperimentConfig abl_cfg;
  auto* abl = app.add_subcommand("ablate", "drop one channel at a time, both training modes");
  abl->add_option("--in", abl_in)->required();
  abl->add_option("--seed", abl_seed, "split and weight seed")->capture_default_str();
  abl->add_option("--out", abl_out)->required();
  abl->add_option("--workers", abl_cfg.workers)->capture_default_str();
  abl->add_option("--epochs", abl_cfg.trainer.max_epochs)->capture_default_str();
  abl->add_option("--resample-len", abl_cfg.resample_length)->capture_default_str();

  // enroll
  std::string enr_store, enr_user, enr_in, enr_rule = "quarter";
  pipeline::EnrollConfig enr_cfg;
  std::optional<std::int64_t> enr_time;
  std::string enr_pca;
  TrainerFlags enr_flags;
  auto* enr = app.add_subcommand("enroll", "train and store a user's template");
  enr->add_option("--store", enr_store)->required();
  enr->add_option("--user", enr_user)->required();
  enr->add_option("--in", enr_in)->required();
  enr->add_option("--resample-len", enr_cfg.resample_length)->capture_default_str();
  enr->add_option("--components-rule", enr_rule)->capture_default_str();
  enr->add_option("--min-genuine", enr_cfg.min_genuine)->capture_default_str();
  enr->add_option("--min-forged", enr_cfg.min_forged)->capture_default_str();
  enr->add_option("--workers", enr_cfg.workers)->capture_default_str();
  enr->add_option("--pca", enr_pca, "reuse this PCA model instead of fitting one on --in");
  enr->add_option("--timestamp", enr_time, "enrollment time in epoch seconds (default: now)");
  enr_flags.attach(enr);

  // verify
  std::string ver_store, ver_user, ver_probe;
  auto* ver = app.add_subcommand("verify", "check a probe against a stored template");
  ver->add_option("--store", ver_store)->required();
  ver->add_option("--user", ver_user)->required();
  ver->add_option("--probe", ver_probe)->required();

  // cost
  costmodel::CostParams cost_p;
  cost_p.rate_usd_per_hour = 0.21;
  cost_p.vms = 1;
  cost_p.end_hour = 1;
  std::string cost_table;
  auto* cost = app.add_subcommand("cost", "cloud cost of a run, or a table over VM counts");
  cost->add_option("--hardware", cost_p.hardware_usd, "infrastructure cost in USD")->capture_default_str();
  cost->add_option("--vms", cost_p.vms)->capture_default_str();
  cost->add_option("--rate", cost_p.rate_usd_per_hour, "USD per VM hour")->capture_default_str();
  cost->add_option("--start", cost_p.start_hour)->capture_default_str();
  cost->add_option("--end", cost_p.end_hour)->capture_default_str();
  cost->add_option("--table", cost_table, "VM range as 1..N, or N");

  // bench
  std::string bench_in, bench_out;
  pipeline::BenchConfig bench_cfg;
  bench_cfg.trainer.max_epochs = 10;
  std::size_t bench_len = sigmodel::kDefaultResampleLength;
  std::string bench_rule = "quarter";
  auto* bn = app.add_subcommand("bench", "time the preprocess and train stages across worker counts");
  bn->add_option("--in", bench_in)->required();
  bn->add_option("--workers", bench_cfg.workers)->delimiter(',')->capture_default_str();
  bn->add_option("--out", bench_out)->required();
  bn->add_option("--runs", bench_cfg.runs, "timed runs per point, the median is kept")->capture_default_str();
  bn->add_option("--resample-len", bench_len)->capture_default_str();
  bn->add_option("--components-rule", bench_rule)->capture_default_str();
  bn->add_option("--epochs", bench_cfg.trainer.max_epochs)->capture_default_str();
  bn->add_option("--train-users", bench_cfg.train_users, "0 trains every user")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitError;
  }

  try {
    if (gen->parsed()) {
      const auto corpus = synthgen::gen_dataset(gen_cfg, gen_workers);
      synthgen::write_dataset(corpus, gen_out);
      fmt::print("wrote {} samples for {} users to {}\n", corpus.size(), gen_cfg.n_users, gen_out);
    } else if (pre->parsed()) {
      const auto corpus = synthgen::read_dataset(pre_in);
      const auto rule = preprocess::ComponentsRule::parse(pre_rule);
      const auto ds = sigmodel::featurize(corpus, pre_len, sigmodel::FeatureMask::parse(pre_mask), pre_workers);
      const auto result = preprocess::dist_sig_preprocess(ds, pre_workers, rule);
      preprocess::write_pca_model(result.model, pre_model);
      io::write_features({result.model, rule, result.projected}, pre_out);
      fmt::print("d={} k={} explained={:.4f} records={}\n", result.model.input_dimension(), result.model.k,
                 result.model.explained_fraction().head(static_cast<Eigen::Index>(result.model.k)).sum(),
                 result.projected.size());
    } else if (train->parsed()) {
      const auto features = io::read_features(train_in);
      const auto file = io::train_models(features, train_flags.meta(), train_workers);
      io::write_model_file(file, train_out);
      fmt::print("trained {} users with {}{}\n", file.users.size(), train_flags.algo,
                 train_flags.dist ? fmt::format(" over {} partitions", train_flags.partitions) : "");
    } else if (ev->parsed()) {
      const auto model = io::read_model_file(eval_model);
      const auto features = io::read_features(eval_in);
      if (!(model.pca == features.pca)) {
        raise(Errc::DimensionMismatch, "features were projected with a different PCA model than the one trained on");
      }
      std::vector<eval::ScoredSample> scores;
      for (const auto& r : features.dataset.records) {
        const auto* um = model.find(r.user_id);
        if (um == nullptr) raise(Errc::UserNotEnrolled, "no model for " + r.user_id);
        scores.push_back({nnet::model_score(um->model, r.x), r.label});
      }
      const auto report = eval::evaluate(scores);
      if (!eval_roc.empty()) write_text(eval_roc, eval::roc_csv(report.roc));
      const std::string text = eval::report_text(report);
      if (!eval_report.empty()) write_text(eval_report, text);
      fmt::print("{}", text);
    } else if (abl->parsed()) {
      const auto corpus = synthgen::read_dataset(abl_in);
      abl_cfg.split_seed = abl_seed;
      abl_cfg.trainer.seed = abl_seed;
      const auto rows = eval::ablate(corpus, abl_cfg);
      write_text(abl_out, eval::ablation_csv(rows));
      fmt::print("{}", eval::ablation_csv(rows));
    } else if (enr->parsed()) {
      const auto samples = synthgen::read_dataset(enr_in);
      enr_cfg.components = preprocess::ComponentsRule::parse(enr_rule);
      enr_cfg.trainer = enr_flags.config();
      enr_cfg.hidden = enr_flags.hidden;
      enr_cfg.distributed = enr_flags.dist;
      enr_cfg.partitions = enr_flags.partitions;
      if (!enr_pca.empty()) enr_cfg.pca = preprocess::read_pca_model(enr_pca);
      enr_cfg.timestamp = enr_time ? *enr_time
                                   : std::chrono::duration_cast<std::chrono::seconds>(
                                         std::chrono::system_clock::now().time_since_epoch())
                                         .count();
      auto store = pipeline::TemplateStore::open(enr_store);
      const auto record = pipeline::enroll(store, enr_user, samples, enr_cfg);
      fmt::print("enrolled {}: k={} threshold={:.6f} enrollment_eer={:.4f}\n", record.user_id,
                 record.fingerprint.components, record.threshold, record.enrollment_eer);
    } else if (ver->parsed()) {
      const auto probes = synthgen::read_dataset(ver_probe);
      if (probes.size() != 1) {
        raise(Errc::InvalidArgument, fmt::format("probe file must hold exactly one sample, found {}", probes.size()));
      }
      const auto store = pipeline::store_load(ver_store);
      const auto d = pipeline::verify(store, ver_user, probes.front());
      fmt::print("{} score={:.6f} threshold={:.6f}\n", pipeline::decision_name(d.decision), d.score, d.threshold);
      return d.decision == pipeline::Decision::Genuine ? 0 : 1;
    } else if (cost->parsed()) {
      if (cost_table.empty()) {
        fmt::print("{:.2f}\n", costmodel::total_cost(cost_p));
      } else {
        std::size_t first = 1;
        std::size_t last = 0;
        const auto dots = cost_table.find("..");
        try {
          if (dots == std::string::npos) {
            last = std::stoul(cost_table);
          } else {
            first = std::stoul(cost_table.substr(0, dots));
            last = std::stoul(cost_table.substr(dots + 2));
          }
        } catch (const std::exception&) {
          raise(Errc::InvalidArgument, "--table expects 1..N or N, got " + cost_table);
        }
        const double hours = costmodel::vm_hours(cost_p.start_hour, cost_p.end_hour);
        fmt::print("{}", costmodel::scaling_csv(costmodel::scaling_table(first, last, cost_p.rate_usd_per_hour, hours,
                                                                         cost_p.hardware_usd)));
      }
    } else if (bn->parsed()) {
      const auto corpus = synthgen::read_dataset(bench_in);
      bench_cfg.components = preprocess::ComponentsRule::parse(bench_rule);
      const auto ds = sigmodel::featurize(corpus, bench_len, sigmodel::FeatureMask::all(), 1);
      const auto report = pipeline::bench(ds, bench_cfg);
      write_text(bench_out, pipeline::bench_csv(report));
      fmt::print("{} vectors of dimension {}\n{}", ds.size(), ds.records.front().x.size(),
                 pipeline::bench_summary(report));
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitError;
  }
  return 0;
}
