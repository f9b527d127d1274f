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

// Helpers and independent reference computations shared by the unit and
// acceptance tests. Nothing here calls into the code under test for the
// quantity being checked.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sigcloud/eval.hpp"
#include "sigcloud/nnet.hpp"
#include "sigcloud/sigmodel.hpp"

namespace testing {

using sigcloud::sigmodel::Label;

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * n(rng);
  return m;
}

// Rows of `rows` become records; labels alternate, one user.
inline sigcloud::sigmodel::Dataset dataset_from_rows(const Eigen::MatrixXd& rows, const std::string& user = "u0001") {
  sigcloud::sigmodel::Dataset ds;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    ds.records.push_back({rows.row(i).transpose(), i % 2 == 0 ? Label::Genuine : Label::Forged, user,
                          static_cast<std::uint64_t>(i)});
  }
  return ds;
}

// Two-pass covariance with the n - 1 denominator.
inline Eigen::MatrixXd two_pass_covariance(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

inline double max_relative(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

// Brute-force threshold sweep: every distinct score plus the two infinite
// sentinels, FAR and FRR counted directly at each, then the first sign change
// of FAR - FRR resolved by linear interpolation (exact hit taken as is).
struct SweepPoint {
  double threshold;
  double far;
  double frr;
};

inline std::vector<SweepPoint> sweep(const std::vector<sigcloud::eval::ScoredSample>& s) {
  std::set<double> distinct;
  double genuine = 0;
  double forged = 0;
  for (const auto& x : s) {
    distinct.insert(x.score);
    (x.label == Label::Genuine ? genuine : forged) += 1;
  }
  std::vector<double> thresholds = {-std::numeric_limits<double>::infinity()};
  thresholds.insert(thresholds.end(), distinct.begin(), distinct.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  std::vector<SweepPoint> out;
  for (double t : thresholds) {
    double fa = 0;
    double fr = 0;
    for (const auto& x : s) {
      if (x.label == Label::Forged && x.score >= t) fa += 1;
      if (x.label == Label::Genuine && x.score < t) fr += 1;
    }
    out.push_back({t, fa / forged, fr / genuine});
  }
  return out;
}

struct OracleEer {
  double eer;
  double threshold;
};

inline OracleEer brute_force_eer(const std::vector<sigcloud::eval::ScoredSample>& s) {
  const std::vector<SweepPoint> p = sweep(s);
  // Infinite sentinels stand one unit beyond the extreme scores when a
  // threshold has to be interpolated.
  const auto finite = [&](std::size_t i) {
    if (i == 0) return p[1].threshold - 1.0;
    if (i + 1 == p.size()) return p[p.size() - 2].threshold + 1.0;
    return p[i].threshold;
  };
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double d = p[i].far - p[i].frr;
    if (d > 0.0) continue;
    if (d == 0.0) return {p[i].far, finite(i)};
    const double d_prev = p[i - 1].far - p[i - 1].frr;
    const double lambda = d_prev / (d_prev - d);
    return {p[i - 1].far + lambda * (p[i].far - p[i - 1].far), finite(i - 1) + lambda * (finite(i) - finite(i - 1))};
  }
  return {std::nan(""), std::nan("")};
}

// Central differences of the sum of squared errors.
inline Eigen::VectorXd finite_difference_gradient(const sigcloud::nnet::Network& net,
                                                  const sigcloud::nnet::Batch& batch, double h = 1e-6) {
  sigcloud::nnet::Network probe = net;
  const Eigen::VectorXd w = net.parameters();
  Eigen::VectorXd g(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Eigen::VectorXd wp = w;
    Eigen::VectorXd wm = w;
    wp(i) += h;
    wm(i) -= h;
    probe.set_parameters(wp);
    const double ep = sigcloud::nnet::sum_squared_error(probe, batch);
    probe.set_parameters(wm);
    const double em = sigcloud::nnet::sum_squared_error(probe, batch);
    g(i) = (ep - em) / (2.0 * h);
  }
  return g;
}

inline sigcloud::nnet::Batch random_batch(std::mt19937_64& rng, std::size_t n, std::size_t inputs) {
  sigcloud::nnet::Batch b;
  b.inputs = random_matrix(rng, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(inputs));
  b.targets.resize(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const bool genuine = rng() % 2 == 0;
    b.targets.row(static_cast<Eigen::Index>(i)) << (genuine ? 1.0 : 0.0), (genuine ? 0.0 : 1.0);
  }
  return b;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("sigcloud-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
