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

#include "sigcloud/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sigcloud/error.hpp"
#include "sigcloud/parallel.hpp"
#include "formats.hpp"
#include "textio.hpp"

namespace sigcloud::preprocess {

CovarianceAccumulator CovarianceAccumulator::zero(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {0, Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
}

CovarianceAccumulator cov_map(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  CovarianceAccumulator acc = CovarianceAccumulator::zero(static_cast<std::size_t>(rows.cols()));
  if (rows.rows() == 0) return acc;
  acc.n = static_cast<std::size_t>(rows.rows());
  acc.sum = rows.colwise().sum().transpose();
  // Lower triangle via a rank update, mirrored so Q is exactly symmetric.
  acc.outer.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose());
  acc.outer.triangularView<Eigen::StrictlyUpper>() = acc.outer.transpose();
  return acc;
}

CovarianceAccumulator cov_map(std::span<const FeatureVector> partition) {
  if (partition.empty()) return CovarianceAccumulator::zero(0);
  const Eigen::Index d = partition.front().size();
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(partition.size()), d);
  for (std::size_t i = 0; i < partition.size(); ++i) {
    if (partition[i].size() != d) raise(Errc::DimensionMismatch, "partition vectors differ in dimension");
    rows.row(static_cast<Eigen::Index>(i)) = partition[i].transpose();
  }
  return cov_map(rows);
}

CovarianceAccumulator cov_reduce(const CovarianceAccumulator& a, const CovarianceAccumulator& b) {
  // An empty accumulator of unknown dimension is the identity.
  if (a.n == 0 && a.dimension() == 0) return b;
  if (b.n == 0 && b.dimension() == 0) return a;
  if (a.dimension() != b.dimension()) {
    raise(Errc::DimensionMismatch, std::to_string(a.dimension()) + " vs " + std::to_string(b.dimension()));
  }
  return {a.n + b.n, a.sum + b.sum, a.outer + b.outer};
}

Eigen::MatrixXd covariance(const CovarianceAccumulator& acc) {
  if (acc.n < 2) raise(Errc::InsufficientSamples, "covariance needs at least 2 samples, got " + std::to_string(acc.n));
  if (!acc.sum.allFinite() || !acc.outer.allFinite()) raise(Errc::NonFiniteInput, "accumulator is not finite");
  const double n = static_cast<double>(acc.n);
  const Eigen::VectorXd mean = acc.sum / n;
  return (acc.outer - n * mean * mean.transpose()) / (n - 1.0);
}

Eigen::MatrixXd covariance(const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (rows.rows() < 2) raise(Errc::InsufficientSamples, "covariance needs at least 2 samples");
  if (!rows.allFinite()) raise(Errc::NonFiniteInput, "data matrix is not finite");
  return covariance(cov_map(rows));
}

Correlation correlation(const Eigen::MatrixXd& cov) {
  const Eigen::Index d = cov.rows();
  Correlation out;
  out.scale.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(cov(i, i) > 0.0)) {
      raise(Errc::ZeroVarianceFeature, "feature " + std::to_string(i) + " has variance " + textio::real(cov(i, i)));
    }
    out.scale(i) = std::sqrt(cov(i, i));
  }
  out.matrix = cov.array() / (out.scale * out.scale.transpose()).array();
  return out;
}

ComponentsRule ComponentsRule::parse(std::string_view text) {
  if (text == "quarter") return quarter();
  if (text.starts_with("var:")) {
    const std::string number(text.substr(4));
    double frac = 0.0;
    try {
      std::size_t used = 0;
      frac = std::stod(number, &used);
      if (used != number.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      raise(Errc::InvalidArgument, "bad variance fraction '" + number + "'");
    }
    if (!(frac > 0.0 && frac <= 1.0)) raise(Errc::InvalidArgument, "variance fraction must lie in (0, 1]");
    return variance(frac);
  }
  raise(Errc::InvalidArgument, "components rule must be 'quarter' or 'var:<frac>'");
}

std::string ComponentsRule::to_string() const {
  return kind == Kind::Quarter ? std::string("quarter") : "var:" + textio::real(fraction);
}

std::size_t ComponentsRule::select(const Eigen::VectorXd& explained) const {
  const auto d = static_cast<std::size_t>(explained.size());
  if (d == 0) return 0;
  if (kind == Kind::Quarter) {
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(d))), 1, d);
  }
  const double total = explained.sum();
  if (!(total > 0.0)) return d;
  double running = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    running += explained(static_cast<Eigen::Index>(i));
    if (running / total >= fraction - 1e-12) return i + 1;
  }
  return d;
}

Eigen::VectorXd PcaModel::explained_fraction() const {
  const double total = explained.sum();
  return total > 0.0 ? Eigen::VectorXd(explained / total) : Eigen::VectorXd::Zero(explained.size());
}

PcaModel pca_fit(const Eigen::MatrixXd& corr, const Eigen::VectorXd& mean, const Eigen::VectorXd& scale,
                 const ComponentsRule& rule) {
  const Eigen::Index d = corr.rows();
  if (d == 0 || corr.cols() != d || mean.size() != d || scale.size() != d) {
    raise(Errc::DimensionMismatch, "correlation, mean and scale must agree in dimension");
  }
  if (!corr.allFinite()) raise(Errc::NonFiniteInput, "correlation matrix is not finite");

  // R is symmetric positive semi-definite, so its SVD is its eigendecomposition
  // with singular values |lambda|.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
  if (eig.info() != Eigen::Success) raise(Errc::DecompositionFailure, "eigensolver did not converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd singular = eig.eigenvalues().cwiseAbs();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return singular(a) > singular(b); });

  PcaModel model;
  model.mean = mean;
  model.scale = scale;
  model.axes.resize(d, d);
  model.explained.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::VectorXd axis = eig.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    const double peak = axis.cwiseAbs().maxCoeff();
    Eigen::Index pivot = 0;
    while (std::abs(axis(pivot)) < peak * (1.0 - 1e-9)) ++pivot;
    if (axis(pivot) < 0.0) axis = -axis;
    model.axes.col(j) = axis;
    model.explained(j) = singular(order[static_cast<std::size_t>(j)]);
  }
  model.k = rule.select(model.explained);
  return model;
}

Eigen::VectorXd pca_project(const PcaModel& model, const FeatureVector& x) {
  if (static_cast<std::size_t>(x.size()) != model.input_dimension()) {
    raise(Errc::DimensionMismatch, "vector has dimension " + std::to_string(x.size()) + ", model expects " +
                                       std::to_string(model.input_dimension()));
  }
  const Eigen::VectorXd standardized = (x - model.mean).cwiseQuotient(model.scale);
  return model.axes.leftCols(static_cast<Eigen::Index>(model.k)).transpose() * standardized;
}

Eigen::MatrixXd pca_project_rows(const PcaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (static_cast<std::size_t>(rows.cols()) != model.input_dimension()) {
    raise(Errc::DimensionMismatch, "rows have dimension " + std::to_string(rows.cols()));
  }
  const Eigen::MatrixXd standardized =
      (rows.rowwise() - model.mean.transpose()).array().rowwise() / model.scale.transpose().array();
  return standardized * model.axes.leftCols(static_cast<Eigen::Index>(model.k));
}

FeatureVector pca_reconstruct(const PcaModel& model, const Eigen::VectorXd& y) {
  if (static_cast<std::size_t>(y.size()) != model.k) raise(Errc::DimensionMismatch, "reduced vector has wrong size");
  const Eigen::VectorXd standardized = model.axes.leftCols(static_cast<Eigen::Index>(model.k)) * y;
  return standardized.cwiseProduct(model.scale) + model.mean;
}

Eigen::MatrixXd stack_rows(const Dataset& ds) {
  const Eigen::Index d = static_cast<Eigen::Index>(ds.dimension());
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(ds.size()), d);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.records[i].x.size() != d) raise(Errc::DimensionMismatch, "dataset vectors differ in dimension");
    rows.row(static_cast<Eigen::Index>(i)) = ds.records[i].x.transpose();
  }
  return rows;
}

namespace {

Dataset with_projection(const Dataset& ds, const Eigen::MatrixXd& projected) {
  std::vector<sigmodel::Record> records(ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& src = ds.records[i];
    records[i] = {projected.row(static_cast<Eigen::Index>(i)).transpose(), src.label, src.user_id, src.sample_id};
  }
  return ds.with_records(std::move(records));
}

PreprocessResult finish(const Dataset& ds, const CovarianceAccumulator& acc, const ComponentsRule& rule,
                        const Eigen::MatrixXd& rows, std::size_t workers) {
  PreprocessResult out;
  out.covariance = covariance(acc);
  Correlation corr = correlation(out.covariance);
  out.correlation = std::move(corr.matrix);
  out.model = pca_fit(out.correlation, acc.sum / static_cast<double>(acc.n), corr.scale, rule);

  const std::size_t n = ds.size();
  const std::size_t parts = std::clamp<std::size_t>(workers, 1, n);
  Eigen::MatrixXd projected(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(out.model.k));
  parallel_for(parts, parts, [&](std::size_t p) {
    const Range r = partition_range(n, parts, p);
    const auto begin = static_cast<Eigen::Index>(r.begin);
    const auto len = static_cast<Eigen::Index>(r.size());
    projected.middleRows(begin, len) = pca_project_rows(out.model, rows.middleRows(begin, len));
  });
  out.projected = with_projection(ds, projected);
  return out;
}

}  // namespace

PreprocessResult sig_preprocess(const Dataset& ds, const ComponentsRule& rule) {
  if (ds.size() < 2) raise(Errc::InsufficientSamples, "preprocessing needs at least 2 vectors");
  const Eigen::MatrixXd rows = stack_rows(ds);
  if (!rows.allFinite()) raise(Errc::NonFiniteInput, "dataset contains non-finite values");
  return finish(ds, cov_map(rows), rule, rows, 1);
}

PreprocessResult dist_sig_preprocess(const Dataset& ds, std::size_t workers, const ComponentsRule& rule) {
  if (workers == 0) raise(Errc::InvalidArgument, "workers must be at least 1");
  if (ds.size() < 2) raise(Errc::InsufficientSamples, "preprocessing needs at least 2 vectors");
  const Eigen::MatrixXd rows = stack_rows(ds);
  if (!rows.allFinite()) raise(Errc::NonFiniteInput, "dataset contains non-finite values");

  const std::size_t n = ds.size();
  std::vector<CovarianceAccumulator> partials(workers);
  parallel_for(workers, workers, [&](std::size_t p) {
    const Range r = partition_range(n, workers, p);
    partials[p] = cov_map(rows.middleRows(static_cast<Eigen::Index>(r.begin), static_cast<Eigen::Index>(r.size())));
  });

  CovarianceAccumulator total = CovarianceAccumulator::zero(static_cast<std::size_t>(rows.cols()));
  for (const auto& partial : partials) total = cov_reduce(total, partial);
  return finish(ds, total, rule, rows, workers);
}

Dataset project_dataset(const PcaModel& model, const Dataset& ds, std::size_t workers) {
  if (ds.empty()) return ds.with_records({});
  const Eigen::MatrixXd rows = stack_rows(ds);
  const std::size_t n = ds.size();
  const std::size_t parts = std::clamp<std::size_t>(workers, 1, n);
  Eigen::MatrixXd projected(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(model.k));
  parallel_for(parts, parts, [&](std::size_t p) {
    const Range r = partition_range(n, parts, p);
    const auto begin = static_cast<Eigen::Index>(r.begin);
    const auto len = static_cast<Eigen::Index>(r.size());
    projected.middleRows(begin, len) = pca_project_rows(model, rows.middleRows(begin, len));
  });
  return with_projection(ds, projected);
}

bool PcaModel::operator==(const PcaModel& o) const {
  const auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return k == o.k && same(mean, o.mean) && same(scale, o.scale) && same(axes, o.axes) && same(explained, o.explained);
}

std::string serialize_pca_model(const PcaModel& m) {
  textio::JsonWriter w;
  formats::write_pca(w, m);
  return w.str();
}

void write_pca_model(const PcaModel& model, const std::filesystem::path& path) {
  textio::write_file_atomic(path, serialize_pca_model(model));
}

PcaModel read_pca_model(const std::filesystem::path& path) { return formats::pca_from_json(textio::parse_file(path)); }

}  // namespace sigcloud::preprocess
