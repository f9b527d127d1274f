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

#include <cmath>
#include <random>
#include <string>

#include "sigcloud/error.hpp"
#include "sigcloud/nnet.hpp"

namespace sigcloud::nnet {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Activations a_0 = x, ..., a_L = outputs for one input.
std::vector<Eigen::VectorXd> activations(const Network& net, const Eigen::VectorXd& x) {
  const auto& layers = net.layers();
  std::vector<Eigen::VectorXd> a;
  a.reserve(layers.size() + 1);
  a.push_back(x);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd z = layers[l].weights * a.back() + layers[l].bias;
    if (l + 1 == layers.size()) {
      a.push_back(z.unaryExpr([](double v) { return logistic(v); }));
    } else {
      a.push_back(z.array().tanh().matrix());
    }
  }
  return a;
}

void check_input(const Network& net, Eigen::Index size) {
  if (static_cast<std::size_t>(size) != net.input_size()) {
    raise(Errc::DimensionMismatch, "input has dimension " + std::to_string(size) + ", network expects " +
                                       std::to_string(net.input_size()));
  }
}

// Backpropagates an output-layer sensitivity `delta` (w.r.t. pre-activations)
// and writes d(delta-weighted output)/d(params) into `out`.
template <typename Out>
void backprop_into(const Network& net, const std::vector<Eigen::VectorXd>& a, Eigen::VectorXd delta, Out&& out) {
  const auto& layers = net.layers();
  std::vector<Eigen::Index> offsets(layers.size());
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    offsets[l] = offset;
    offset += layers[l].weights.size() + layers[l].bias.size();
  }
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Eigen::VectorXd& input = a[l];
    const Eigen::Index n_in = layers[l].weights.cols();
    const Eigen::Index n_out = layers[l].weights.rows();
    for (Eigen::Index r = 0; r < n_out; ++r) {
      out.segment(offsets[l] + r * n_in, n_in) += delta(r) * input;
    }
    out.segment(offsets[l] + n_out * n_in, n_out) += delta;
    if (l > 0) {
      delta = (layers[l].weights.transpose() * delta).cwiseProduct((1.0 - input.array().square()).matrix());
    }
  }
}

}  // namespace

Network::Network(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) raise(Errc::BadShape, "need at least input and output layers");
  if (sizes_.back() != 2) raise(Errc::BadShape, "output layer must have 2 nodes");
  for (std::size_t s : sizes_) {
    if (s == 0) raise(Errc::BadShape, "layer sizes must be positive");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes_[l]);
    const auto out = static_cast<Eigen::Index>(sizes_[l + 1]);
    layers_.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Eigen::VectorXd Network::parameters() const {
  Eigen::VectorXd p(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index o = 0;
  for (const Layer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      p.segment(o, l.weights.cols()) = l.weights.row(r).transpose();
      o += l.weights.cols();
    }
    p.segment(o, l.bias.size()) = l.bias;
    o += l.bias.size();
  }
  return p;
}

void Network::set_parameters(const Eigen::VectorXd& p) {
  if (static_cast<std::size_t>(p.size()) != parameter_count()) {
    raise(Errc::DimensionMismatch, "parameter vector has size " + std::to_string(p.size()));
  }
  Eigen::Index o = 0;
  for (Layer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      l.weights.row(r) = p.segment(o, l.weights.cols()).transpose();
      o += l.weights.cols();
    }
    l.bias = p.segment(o, l.bias.size());
    o += l.bias.size();
  }
}

Eigen::VectorXd Network::weight_mask() const {
  Eigen::VectorXd m(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index o = 0;
  for (const Layer& l : layers_) {
    m.segment(o, l.weights.size()).setOnes();
    o += l.weights.size();
    m.segment(o, l.bias.size()).setZero();
    o += l.bias.size();
  }
  return m;
}

Network init_network(std::vector<std::size_t> sizes, std::uint64_t seed) {
  Network net(std::move(sizes));
  std::mt19937_64 engine(seed);
  for (Layer& l : net.layers()) {
    const double bound = 0.5 / std::sqrt(static_cast<double>(l.weights.cols()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
        l.weights(r, c) = bound * (2.0 * std::generate_canonical<double, 53>(engine) - 1.0);
      }
    }
  }
  return net;
}

Outputs forward(const Network& net, const Eigen::VectorXd& x) {
  check_input(net, x.size());
  const auto a = activations(net, x);
  return {a.back()(0), a.back()(1)};
}

double score(const Network& net, const Eigen::VectorXd& x) { return forward(net, x).score(); }

Eigen::Vector2d target_for(Label label) {
  return label == Label::Genuine ? Eigen::Vector2d(1.0, 0.0) : Eigen::Vector2d(0.0, 1.0);
}

Batch make_batch(const Dataset& ds) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(ds.size());
  const auto d = static_cast<Eigen::Index>(ds.dimension());
  b.inputs.resize(n, d);
  b.targets.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = ds.records[static_cast<std::size_t>(i)];
    if (r.x.size() != d) raise(Errc::DimensionMismatch, "dataset vectors differ in dimension");
    b.inputs.row(i) = r.x.transpose();
    b.targets.row(i) = target_for(r.label).transpose();
  }
  return b;
}

Eigen::VectorXd residuals(const Network& net, const Batch& batch) {
  check_input(net, batch.inputs.cols());
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::VectorXd e(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Outputs o = forward(net, batch.inputs.row(i).transpose());
    e(2 * i) = batch.targets(i, 0) - o.genuine;
    e(2 * i + 1) = batch.targets(i, 1) - o.forged;
  }
  return e;
}

double sum_squared_error(const Network& net, const Batch& batch) { return residuals(net, batch).squaredNorm(); }

Linearization linearize(const Network& net, const Batch& batch) {
  if (batch.size() == 0) raise(Errc::InvalidArgument, "empty batch");
  check_input(net, batch.inputs.cols());
  const auto n = static_cast<Eigen::Index>(batch.size());
  Linearization lin;
  lin.residual.resize(2 * n);
  lin.jacobian = Eigen::MatrixXd::Zero(2 * n, static_cast<Eigen::Index>(net.parameter_count()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = activations(net, batch.inputs.row(i).transpose());
    const Eigen::VectorXd& o = a.back();
    for (Eigen::Index q = 0; q < 2; ++q) {
      lin.residual(2 * i + q) = batch.targets(i, q) - o(q);
      Eigen::VectorXd delta = Eigen::VectorXd::Zero(2);
      delta(q) = o(q) * (1.0 - o(q));
      auto row = lin.jacobian.row(2 * i + q).transpose();
      backprop_into(net, a, delta, row);
    }
  }
  return lin;
}

Eigen::VectorXd gradient(const Network& net, const Batch& batch) {
  if (batch.size() == 0) raise(Errc::InvalidArgument, "empty batch");
  check_input(net, batch.inputs.cols());
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(batch.size()); ++i) {
    const auto a = activations(net, batch.inputs.row(i).transpose());
    const Eigen::VectorXd& o = a.back();
    const Eigen::VectorXd e = batch.targets.row(i).transpose() - o;
    const Eigen::VectorXd delta = -2.0 * e.cwiseProduct(o.cwiseProduct((1.0 - o.array()).matrix()));
    backprop_into(net, a, delta, g);
  }
  return g;
}

}  // namespace sigcloud::nnet
