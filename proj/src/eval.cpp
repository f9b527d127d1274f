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

#include "sigcloud/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "sigcloud/error.hpp"

namespace sigcloud::eval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Finite stand-in for an infinite sentinel threshold.
double finite_threshold(const RocCurve& curve, std::size_t i) {
  const auto& p = curve.points;
  if (p[i].threshold == -kInf) return p[1].threshold - 1.0;
  if (p[i].threshold == kInf) return p[p.size() - 2].threshold + 1.0;
  return p[i].threshold;
}

}  // namespace

ConfusionCounts confusion_at(std::span<const ScoredSample> scores, double threshold) {
  if (scores.empty()) raise(Errc::EmptyScores, "no scores");
  ConfusionCounts c;
  for (const auto& s : scores) {
    const bool accepted = s.score >= threshold;
    if (s.label == Label::Genuine) {
      ++(accepted ? c.tp : c.fn);
    } else {
      ++(accepted ? c.fp : c.tn);
    }
  }
  return c;
}

double far(const ConfusionCounts& c) {
  if (c.fp + c.tn == 0) raise(Errc::NoNegatives, "FAR needs at least one forged sample");
  return static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
}

double frr(const ConfusionCounts& c) {
  if (c.fn + c.tp == 0) raise(Errc::NoPositives, "FRR needs at least one genuine sample");
  return static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp);
}

RocCurve roc(std::span<const ScoredSample> scores) {
  std::vector<ScoredSample> sorted(scores.begin(), scores.end());
  for (const auto& s : sorted) {
    if (!std::isfinite(s.score)) raise(Errc::NonFiniteInput, "scores must be finite");
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  std::size_t genuine = 0;
  for (const auto& s : sorted) genuine += s.label == Label::Genuine ? 1 : 0;
  const std::size_t forged = sorted.size() - genuine;
  if (genuine == 0 || forged == 0) raise(Errc::SingleClassScores, "ROC needs genuine and forged scores");

  const auto g = static_cast<double>(genuine);
  const auto f = static_cast<double>(forged);
  RocCurve curve;
  curve.points.push_back({-kInf, 1.0, 0.0});
  // Walking up the sorted scores, everything below the current threshold is rejected.
  std::size_t genuine_below = 0;
  std::size_t forged_below = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].score;
    curve.points.push_back({t, static_cast<double>(forged - forged_below) / f, static_cast<double>(genuine_below) / g});
    for (; i < sorted.size() && sorted[i].score == t; ++i) {
      ++(sorted[i].label == Label::Genuine ? genuine_below : forged_below);
    }
  }
  curve.points.push_back({kInf, 0.0, 1.0});
  return curve;
}

EerPoint eer(const RocCurve& curve) {
  const auto& p = curve.points;
  if (p.size() < 3) raise(Errc::SingleClassScores, "ROC curve is empty");
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double d = p[i].far - p[i].frr;
    if (d > 0.0) continue;
    if (d == 0.0) return {p[i].far, finite_threshold(curve, i)};
    const double d_prev = p[i - 1].far - p[i - 1].frr;
    const double lambda = d_prev / (d_prev - d);
    const double t0 = finite_threshold(curve, i - 1);
    const double t1 = finite_threshold(curve, i);
    return {p[i - 1].far + lambda * (p[i].far - p[i - 1].far), t0 + lambda * (t1 - t0)};
  }
  raise(Errc::SingleClassScores, "FAR and FRR never cross");
}

double centered_eer_threshold(const RocCurve& curve) {
  const EerPoint point = eer(curve);
  const auto& p = curve.points;
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double d = p[i].far - p[i].frr;
    if (d > 0.0) continue;
    if (d == 0.0) return 0.5 * (finite_threshold(curve, i - 1) + finite_threshold(curve, i));
    break;
  }
  return point.threshold;
}

Rates rates_at(const RocCurve& curve, double threshold) {
  const auto& p = curve.points;
  if (p.size() < 3) raise(Errc::SingleClassScores, "ROC curve is empty");
  if (threshold <= finite_threshold(curve, 0)) return {p.front().far, p.front().frr};
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double t1 = finite_threshold(curve, i);
    if (threshold > t1) continue;
    const double t0 = finite_threshold(curve, i - 1);
    const double lambda = (threshold - t0) / (t1 - t0);
    return {p[i - 1].far + lambda * (p[i].far - p[i - 1].far), p[i - 1].frr + lambda * (p[i].frr - p[i - 1].frr)};
  }
  return {p.back().far, p.back().frr};
}

EvalReport evaluate(std::span<const ScoredSample> scores) {
  if (scores.empty()) raise(Errc::EmptyScores, "no scores");
  EvalReport report;
  report.roc = roc(scores);
  const EerPoint point = eer(report.roc);
  report.eer = point.eer;
  report.eer_threshold = point.threshold;
  report.at_threshold = confusion_at(scores, point.threshold);
  return report;
}

std::string roc_csv(const RocCurve& curve) {
  std::string out = "threshold,far,frr\n";
  for (const auto& p : curve.points) out += fmt::format("{:.17g},{:.17g},{:.17g}\n", p.threshold, p.far, p.frr);
  return out;
}

std::string report_text(const EvalReport& r) {
  const ConfusionCounts& c = r.at_threshold;
  return fmt::format(
      "eer {:.6f}\n"
      "eer_threshold {:.17g}\n"
      "far_at_threshold {:.6f}\n"
      "frr_at_threshold {:.6f}\n"
      "tp {}\ntn {}\nfp {}\nfn {}\n"
      "roc_points {}\n",
      r.eer, r.eer_threshold, far(c), frr(c), c.tp, c.tn, c.fp, c.fn, r.roc.points.size());
}

SpeedupRecord speedup(double t_single, double t_n, std::size_t n) {
  if (!(t_single > 0.0) || !(t_n > 0.0)) raise(Errc::NonPositiveTime, "running times must be positive");
  if (n == 0) raise(Errc::InvalidArgument, "worker count must be positive");
  return {t_single, t_n, n, t_single / t_n};
}

}  // namespace sigcloud::eval
