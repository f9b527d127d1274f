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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sigcloud/sigmodel.hpp"

namespace sigcloud::eval {

using sigmodel::Label;

struct ScoredSample {
  double score = 0.0;
  Label label = Label::Genuine;
};

// Genuine is the positive class; a sample is accepted when score >= threshold.
struct ConfusionCounts {
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  std::size_t tp = 0;

  std::size_t total() const { return fp + tn + fn + tp; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion_at(std::span<const ScoredSample> scores, double threshold);

// FP / (FP + TN). Throws NoNegatives.
double far(const ConfusionCounts& c);
// FN / (FN + TP). Throws NoPositives.
double frr(const ConfusionCounts& c);

struct RocPoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
};

// Thresholds: -inf, every distinct score ascending, +inf.
struct RocCurve {
  std::vector<RocPoint> points;
};

RocCurve roc(std::span<const ScoredSample> scores);

struct EerPoint {
  double eer = 0.0;
  double threshold = 0.0;
};

// First grid step where FAR - FRR reaches <= 0, linearly interpolated between
// its two thresholds. Infinite sentinels are replaced by finite stand-ins one
// unit beyond the extreme scores when a threshold is interpolated. A constant
// score set yields 0.5.
EerPoint eer(const RocCurve& curve);

// Same operating point as eer(); when FAR = FRR is hit exactly at a ROC
// point, returns the middle of the interval of thresholds that yield the
// same confusion counts instead of its upper end.
double centered_eer_threshold(const RocCurve& curve);

struct Rates {
  double far = 0.0;
  double frr = 0.0;
};

// FAR and FRR linearly interpolated in threshold between grid points.
Rates rates_at(const RocCurve& curve, double threshold);

struct EvalReport {
  RocCurve roc;
  double eer = 0.0;
  double eer_threshold = 0.0;
  ConfusionCounts at_threshold;
};

EvalReport evaluate(std::span<const ScoredSample> scores);

std::string roc_csv(const RocCurve& curve);
std::string report_text(const EvalReport& report);

struct SpeedupRecord {
  double t_single = 0.0;  // seconds
  double t_n = 0.0;
  std::size_t n = 1;
  double speedup = 1.0;
};

// S = T_single / T_n. Throws NonPositiveTime.
SpeedupRecord speedup(double t_single, double t_n, std::size_t n);

}  // namespace sigcloud::eval
