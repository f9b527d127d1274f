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

#include <random>

#include "doctest.h"
#include "sigcloud/error.hpp"
#include "sigcloud/preprocess.hpp"
#include "support.hpp"

using namespace sigcloud;
using namespace sigcloud::preprocess;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidArgument;
}

// Data with distinct, well separated correlation eigenvalues.
Eigen::MatrixXd structured(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  Eigen::MatrixXd mix = testing::random_matrix(rng, d, d);
  for (Eigen::Index j = 0; j < d; ++j) mix.col(j) *= 1.0 + 0.5 * static_cast<double>(j);
  Eigen::MatrixXd x = testing::random_matrix(rng, n, d) * mix;
  x.rowwise() += testing::random_matrix(rng, 1, d, 5.0).row(0);
  return x;
}

Eigen::MatrixXd sign_fixed(Eigen::MatrixXd u) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index arg = 0;
    const double peak = u.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      if (std::abs(u(i, j)) >= peak - 1e-9) {
        arg = i;
        break;
      }
    }
    if (u(arg, j) < 0) u.col(j) *= -1.0;
  }
  return u;
}

}  // namespace

TEST_CASE("covariance of identical rows is zero") {
  Eigen::MatrixXd x(4, 3);
  x.rowwise() = Eigen::RowVector3d(1.0, -2.0, 7.5);
  CHECK(covariance(x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("covariance of (0,0),(2,2) uses the n-1 denominator") {
  Eigen::MatrixXd x(2, 2);
  x << 0, 0, 2, 2;
  const Eigen::MatrixXd c = covariance(x);
  CHECK(c(0, 0) == 2.0);
  CHECK(c(0, 1) == 2.0);
  CHECK(c(1, 0) == 2.0);
  CHECK(c(1, 1) == 2.0);
}

TEST_CASE("covariance errors") {
  CHECK(code_of([] { (void)covariance(Eigen::MatrixXd::Ones(1, 3)); }) == Errc::InsufficientSamples);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
  x(1, 1) = std::numeric_limits<double>::infinity();
  CHECK(code_of([&] { (void)covariance(x); }) == Errc::NonFiniteInput);
}

TEST_CASE("covariance matches a two-pass computation") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd x = structured(rng, 50 + trial, 8);
    CHECK(testing::max_relative(covariance(x), testing::two_pass_covariance(x)) < 1e-10);
  }
}

TEST_CASE("correlation examples") {
  Eigen::MatrixXd c(2, 2);
  c << 2, 2, 2, 2;
  const Correlation r = correlation(c);
  CHECK((r.matrix.array() - 1.0).abs().maxCoeff() <= 1e-15);
  CHECK(r.scale(0) == doctest::Approx(std::sqrt(2.0)));

  Eigen::MatrixXd z(2, 2);
  z << 0, 0, 0, 3;
  try {
    (void)correlation(z);
    FAIL("expected ZeroVarianceFeature");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ZeroVarianceFeature);
    CHECK(std::string(e.what()).find("feature 0") != std::string::npos);
  }
}

TEST_CASE("data on the line y = x has one axis explaining everything") {
  Eigen::MatrixXd x(5, 2);
  x << -2, -2, -1, -1, 0, 0, 1, 1, 3, 3;
  const Eigen::MatrixXd c = covariance(x);
  const Correlation r = correlation(c);
  const PcaModel m = pca_fit(r.matrix, x.colwise().mean().transpose(), r.scale, ComponentsRule::variance(0.5));
  CHECK(m.k == 1);
  CHECK(m.axes(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(m.axes(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(m.explained_fraction()(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identity correlation gives equal explained variances") {
  const PcaModel m = pca_fit(Eigen::MatrixXd::Identity(6, 6), Eigen::VectorXd::Zero(6), Eigen::VectorXd::Ones(6));
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(m.explained(i) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.k == 2);
}

TEST_CASE("component rules") {
  CHECK(ComponentsRule::quarter().select(Eigen::VectorXd::Ones(768)) == 192);
  CHECK(ComponentsRule::quarter().select(Eigen::VectorXd::Ones(3)) == 1);
  Eigen::VectorXd e(4);
  e << 5, 3, 1.5, 0.5;
  CHECK(ComponentsRule::variance(0.8).select(e) == 2);
  CHECK(ComponentsRule::variance(0.81).select(e) == 3);
  CHECK(ComponentsRule::variance(1.0).select(e) == 4);
  CHECK(ComponentsRule::parse("var:0.95").fraction == 0.95);
  CHECK(ComponentsRule::parse("quarter").kind == ComponentsRule::Kind::Quarter);
  CHECK(ComponentsRule::parse(ComponentsRule::variance(0.3).to_string()).fraction == 0.3);
  CHECK_THROWS_AS(ComponentsRule::parse("var:1.5"), Error);
  CHECK_THROWS_AS(ComponentsRule::parse("half"), Error);
}

TEST_CASE("projection of a fixed 3x4 toy dataset") {
  // Reference values from an independent full SVD of the correlation matrix.
  Eigen::MatrixXd x(3, 4);
  x << 1, 2, 0, 4, 3, 1, 1, 0, 2, 5, 3, 1;
  const PreprocessResult r = sig_preprocess(testing::dataset_from_rows(x), ComponentsRule::variance(0.99));
  REQUIRE(r.model.k == 2);
  const double first_axis[4] = {-0.5150054162483038, -0.26414292459409977, -0.5461045376935133, 0.605613548834851};
  for (int i = 0; i < 4; ++i) CHECK(r.model.axes(i, 0) == doctest::Approx(first_axis[i]).epsilon(1e-12));
  const double expected[3][2] = {{1.7551084306751863, 0.20118031079608598},
                                 {-0.669230939376234, -1.3717872573587844},
                                 {-1.0858774912989524, 1.1706069465626985}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(r.projected.records[i].x(j) == doctest::Approx(expected[i][j]).epsilon(1e-11));
  }
  CHECK(r.model.explained(0) == doctest::Approx(2.35370279).epsilon(1e-8));
}

TEST_CASE("projection of the mean is zero and k = d reconstructs the input") {
  std::mt19937_64 rng(22);
  const Eigen::MatrixXd x = structured(rng, 40, 7);
  const PreprocessResult r = sig_preprocess(testing::dataset_from_rows(x), ComponentsRule::variance(1.0));
  REQUIRE(r.model.k == 7);
  CHECK(pca_project(r.model, r.model.mean).cwiseAbs().maxCoeff() < 1e-12);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd back = pca_reconstruct(r.model, pca_project(r.model, x.row(i).transpose()));
    CHECK((back - x.row(i).transpose()).norm() <= 1e-9 * x.row(i).norm());
  }
  CHECK(code_of([&] { (void)pca_project(r.model, Eigen::VectorXd::Zero(3)); }) == Errc::DimensionMismatch);
}

TEST_CASE("axes and singular values agree with a Jacobi SVD of the correlation matrix") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd x = structured(rng, 80, 9);
    const PreprocessResult r = sig_preprocess(testing::dataset_from_rows(x));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r.correlation, Eigen::ComputeFullU);
    CHECK(testing::max_relative(r.model.explained, svd.singularValues()) < 1e-10);
    CHECK(testing::max_relative(r.model.axes, sign_fixed(svd.matrixU())) < 1e-8);
  }
}

TEST_CASE("cov_map examples") {
  const CovarianceAccumulator empty = cov_map(std::span<const FeatureVector>());
  CHECK(empty.n == 0);
  CHECK(empty.sum.size() == 0);
  std::vector<FeatureVector> one = {Eigen::Vector2d(1, 2)};
  const CovarianceAccumulator a = cov_map(one);
  CHECK(a.n == 1);
  CHECK(a.sum == Eigen::Vector2d(1, 2));
  Eigen::Matrix2d q;
  q << 1, 2, 2, 4;
  CHECK(a.outer == Eigen::MatrixXd(q));
  std::vector<FeatureVector> mixed = {Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 2, 3)};
  CHECK(code_of([&] { (void)cov_map(mixed); }) == Errc::DimensionMismatch);
}

TEST_CASE("mapping the whole set equals reducing any two-way split") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    // Integer data keeps sums exact regardless of grouping.
    Eigen::MatrixXd x = (testing::random_matrix(rng, 30, 5, 20.0)).array().round();
    const Eigen::Index cut = static_cast<Eigen::Index>(rng() % 31);
    const CovarianceAccumulator whole = cov_map(x);
    const CovarianceAccumulator split = cov_reduce(cov_map(x.topRows(cut)), cov_map(x.bottomRows(30 - cut)));
    CHECK(whole.n == split.n);
    CHECK(whole.sum == split.sum);
    CHECK(testing::max_relative(split.outer, whole.outer) <= 1e-12);

    const Eigen::MatrixXd y = testing::random_matrix(rng, 30, 5);
    const CovarianceAccumulator wy = cov_map(y);
    const CovarianceAccumulator sy = cov_reduce(cov_map(y.topRows(cut)), cov_map(y.bottomRows(30 - cut)));
    CHECK(testing::max_relative(sy.outer, wy.outer) <= 1e-12);
  }
}

TEST_CASE("cov_reduce is an identity-preserving, commutative, associative combine") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    const CovarianceAccumulator a = cov_map(testing::random_matrix(rng, 7, 4));
    const CovarianceAccumulator b = cov_map(testing::random_matrix(rng, 3, 4));
    const CovarianceAccumulator c = cov_map(testing::random_matrix(rng, 5, 4));
    const CovarianceAccumulator id = CovarianceAccumulator::zero(4);
    CHECK(cov_reduce(a, id).outer == a.outer);
    CHECK(cov_reduce(a, CovarianceAccumulator::zero(0)).outer == a.outer);
    const CovarianceAccumulator ab = cov_reduce(a, b);
    const CovarianceAccumulator ba = cov_reduce(b, a);
    CHECK(ab.n == ba.n);
    CHECK(ab.sum == ba.sum);
    CHECK(ab.outer == ba.outer);
    const CovarianceAccumulator left = cov_reduce(ab, c);
    const CovarianceAccumulator right = cov_reduce(a, cov_reduce(b, c));
    CHECK(testing::max_relative(left.outer, right.outer) <= 1e-12);
  }
  CHECK(code_of([&] {
          (void)cov_reduce(cov_map(Eigen::MatrixXd::Ones(2, 3)), cov_map(Eigen::MatrixXd::Ones(2, 4)));
        }) == Errc::DimensionMismatch);
}

TEST_CASE("one worker reproduces the sequential pipeline exactly") {
  std::mt19937_64 rng(26);
  const auto ds = testing::dataset_from_rows(structured(rng, 60, 12));
  const PreprocessResult a = sig_preprocess(ds);
  const PreprocessResult b = dist_sig_preprocess(ds, 1);
  CHECK(a.covariance == b.covariance);
  CHECK(a.model == b.model);
}

TEST_CASE("four workers match the sequential pipeline on 200 x 36 data") {
  std::mt19937_64 rng(27);
  const auto ds = testing::dataset_from_rows(structured(rng, 200, 36));
  const PreprocessResult a = sig_preprocess(ds);
  const PreprocessResult b = dist_sig_preprocess(ds, 4);
  CHECK(testing::max_relative(b.covariance, a.covariance) < 1e-9);
  CHECK(testing::max_relative(b.correlation, a.correlation) < 1e-9);
  CHECK(testing::max_relative(b.model.explained, a.model.explained) < 1e-9);
  CHECK(testing::max_relative(b.model.axes, a.model.axes) < 1e-9);
  CHECK(b.projected.dimension() == 9);
}

TEST_CASE("default rule on 768-dimensional input projects to 192") {
  std::mt19937_64 rng(28);
  const auto ds = testing::dataset_from_rows(testing::random_matrix(rng, 200, 768));
  const PreprocessResult r = dist_sig_preprocess(ds, 2);
  CHECK(r.model.k == 192);
  CHECK(r.projected.dimension() == 192);
}

TEST_CASE("property: covariance is symmetric and PSD, correlation is bounded") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 40);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 12);
    const Eigen::MatrixXd x = testing::random_matrix(rng, n, d, 1.0 + static_cast<double>(rng() % 100));
    const Eigen::MatrixXd c = covariance(x);
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff()));
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c).eigenvalues();
    CHECK(ev.minCoeff() >= -1e-9 * std::max(1.0, ev.cwiseAbs().maxCoeff()));
    const Correlation r = correlation(c);
    CHECK((r.matrix.diagonal().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(r.matrix.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("property: fitted models have orthonormal sorted axes and fractions summing to one") {
  std::mt19937_64 rng(30);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng() % 15);
    const auto ds = testing::dataset_from_rows(testing::random_matrix(rng, d + 5, d));
    const PcaModel m = sig_preprocess(ds).model;
    CHECK((m.axes.transpose() * m.axes - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-9);
    for (Eigen::Index i = 1; i < d; ++i) CHECK(m.explained(i) <= m.explained(i - 1));
    CHECK(std::abs(m.explained_fraction().sum() - 1.0) <= 1e-9);
    CHECK(m.k >= 1);
    CHECK(m.k <= static_cast<std::size_t>(d));
  }
}

TEST_CASE("a duplicated channel shows up as a vanishing trailing variance, a constant one is rejected") {
  std::mt19937_64 rng(31);
  Eigen::MatrixXd x = testing::random_matrix(rng, 30, 5);
  x.col(4) = 3.0 * x.col(1);
  const PcaModel m = sig_preprocess(testing::dataset_from_rows(x)).model;
  CHECK(m.explained(4) <= 1e-10);
  x.col(2).setConstant(1.5);
  CHECK(code_of([&] { (void)sig_preprocess(testing::dataset_from_rows(x)); }) == Errc::ZeroVarianceFeature);
}

TEST_CASE("PCA model files round-trip exactly") {
  std::mt19937_64 rng(32);
  const PcaModel m = sig_preprocess(testing::dataset_from_rows(structured(rng, 30, 6))).model;
  const auto dir = testing::scratch_dir("pca");
  write_pca_model(m, dir / "pca.json");
  CHECK(read_pca_model(dir / "pca.json") == m);
  CHECK(serialize_pca_model(m) == serialize_pca_model(read_pca_model(dir / "pca.json")));
}
