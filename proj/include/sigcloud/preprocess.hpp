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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "sigcloud/sigmodel.hpp"

namespace sigcloud::preprocess {

using sigmodel::Dataset;
using sigmodel::FeatureVector;

// Partial state exchanged between covariance mappers and the reducer:
// sample count, sum of vectors and sum of outer products.
struct CovarianceAccumulator {
  std::size_t n = 0;
  Eigen::VectorXd sum;
  Eigen::MatrixXd outer;

  static CovarianceAccumulator zero(std::size_t dim);
  std::size_t dimension() const { return static_cast<std::size_t>(sum.size()); }
};

CovarianceAccumulator cov_map(std::span<const FeatureVector> partition);
// Rows of `rows` are the samples. `dim` is used only when rows is empty.
CovarianceAccumulator cov_map(const Eigen::Ref<const Eigen::MatrixXd>& rows);
CovarianceAccumulator cov_reduce(const CovarianceAccumulator& a, const CovarianceAccumulator& b);

// C = (Q - n * mean * mean^T) / (n - 1)
Eigen::MatrixXd covariance(const CovarianceAccumulator& acc);
Eigen::MatrixXd covariance(const Eigen::Ref<const Eigen::MatrixXd>& rows);

struct Correlation {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd scale;  // sqrt of the covariance diagonal
};

// R = C ./ (S * S^T). Throws ZeroVarianceFeature naming the first bad index.
Correlation correlation(const Eigen::MatrixXd& cov);

struct ComponentsRule {
  enum class Kind { Quarter, Variance };
  Kind kind = Kind::Quarter;
  double fraction = 0.25;  // retained dimension share, or cumulative variance share

  static ComponentsRule quarter() { return {}; }
  static ComponentsRule variance(double threshold) { return {Kind::Variance, threshold}; }
  // "quarter" or "var:<frac>"
  static ComponentsRule parse(std::string_view text);
  std::string to_string() const;

  std::size_t select(const Eigen::VectorXd& explained_descending) const;
};

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  Eigen::MatrixXd axes;  // d x d, orthonormal columns, by explained variance descending
  Eigen::VectorXd explained;
  std::size_t k = 0;

  std::size_t input_dimension() const { return static_cast<std::size_t>(mean.size()); }
  Eigen::VectorXd explained_fraction() const;

  bool operator==(const PcaModel& other) const;
};

// Axes are the left singular vectors of R sorted by singular value, each
// flipped so that its largest-magnitude entry is positive.
PcaModel pca_fit(const Eigen::MatrixXd& corr, const Eigen::VectorXd& mean, const Eigen::VectorXd& scale,
                 const ComponentsRule& rule = {});

Eigen::VectorXd pca_project(const PcaModel& model, const FeatureVector& x);
// Rows in, rows out (n x k).
Eigen::MatrixXd pca_project_rows(const PcaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& rows);
// Inverse of the projection for k = d: un-rotate then un-standardize.
FeatureVector pca_reconstruct(const PcaModel& model, const Eigen::VectorXd& y);

struct PreprocessResult {
  PcaModel model;
  Dataset projected;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd correlation;
};

// Single pass over the whole data matrix.
PreprocessResult sig_preprocess(const Dataset& ds, const ComponentsRule& rule = {});

// Contiguous partitions mapped concurrently, reduced in partition order, then
// the same covariance -> correlation -> SVD chain; projection is also split
// across workers.
PreprocessResult dist_sig_preprocess(const Dataset& ds, std::size_t workers, const ComponentsRule& rule = {});

// Projects `ds` through an already fitted model.
Dataset project_dataset(const PcaModel& model, const Dataset& ds, std::size_t workers = 1);

Eigen::MatrixXd stack_rows(const Dataset& ds);

void write_pca_model(const PcaModel& model, const std::filesystem::path& path);
std::string serialize_pca_model(const PcaModel& model);
PcaModel read_pca_model(const std::filesystem::path& path);

}  // namespace sigcloud::preprocess
