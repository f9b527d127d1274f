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
#include <cstdint>
#include <functional>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sigcloud/sigmodel.hpp"

namespace sigcloud::nnet {

using sigmodel::Dataset;
using sigmodel::Label;

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;

  bool operator==(const Layer& other) const { return weights == other.weights && bias == other.bias; }
};

// Feedforward network with tanh hidden layers and a two-node logistic output
// layer (genuine, forged). Parameters are laid out per layer as row-major
// weights followed by biases.
class Network {
 public:
  Network() = default;
  // All-zero parameters. Throws BadShape unless sizes = [in, hidden..., 2].
  explicit Network(std::vector<std::size_t> sizes);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_size() const { return sizes_.empty() ? 0 : sizes_.front(); }
  std::size_t parameter_count() const;

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& params);
  // 1 for connection weights, 0 for biases.
  Eigen::VectorXd weight_mask() const;

  bool operator==(const Network& other) const { return sizes_ == other.sizes_ && layers_ == other.layers_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<Layer> layers_;
};

inline constexpr std::string_view kHiddenActivation = "tanh";
inline constexpr std::string_view kOutputActivation = "logistic";

// Weights uniform in [-0.5, 0.5] / sqrt(fan_in), biases zero.
Network init_network(std::vector<std::size_t> sizes, std::uint64_t seed);

struct Outputs {
  double genuine = 0.0;
  double forged = 0.0;
  // (1 + o_genuine - o_forged) / 2, in (0, 1).
  double score() const { return 0.5 * (1.0 + genuine - forged); }
};

Outputs forward(const Network& net, const Eigen::VectorXd& x);
double score(const Network& net, const Eigen::VectorXd& x);

// genuine -> (1, 0), forged -> (0, 1)
Eigen::Vector2d target_for(Label label);

struct Batch {
  Eigen::MatrixXd inputs;   // one sample per row
  Eigen::MatrixXd targets;  // n x 2

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
};

Batch make_batch(const Dataset& ds);

// e = targets - outputs, stacked sample by sample as (genuine, forged).
Eigen::VectorXd residuals(const Network& net, const Batch& batch);
double sum_squared_error(const Network& net, const Batch& batch);

struct Linearization {
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;  // d outputs / d parameters, (2 * batch) x n_params
};

Linearization linearize(const Network& net, const Batch& batch);

// Gradient of E_D = e^T e, i.e. -2 J^T e, by a single backward pass.
Eigen::VectorXd gradient(const Network& net, const Batch& batch);

// ---------------------------------------------------------------------------
// Levenberg-Marquardt

struct LmParams {
  double mu_initial = 1e-3;
  double mu_increase = 10.0;
  double mu_decrease = 10.0;
  double mu_max = 1e12;
  double mu_min = 1e-12;
};

// Solution of (J^T J + mu I) delta = J^T r together with the relative residual
// ||(J^T J + mu I) delta - J^T r|| / ||J^T r|| of that system.
struct DampedSolution {
  Eigen::VectorXd delta;
  double relative_residual = 0.0;
};

DampedSolution solve_damped(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& residual, double mu);

// Residual vector r(w) = target - model(w) of a least-squares problem.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& weights)>;

struct LmState {
  Eigen::VectorXd weights;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;  // d model / d weights at `weights`
  double mu = 1e-3;
};

struct LmStep {
  Eigen::VectorXd delta;
  double mu = 0.0;  // damping after the step
  bool accepted = false;
  double relative_residual = 0.0;
  double error_before = 0.0;
  double error_after = 0.0;
};

// One damped Gauss-Newton trial. On acceptance the state's weights and
// residual advance (the Jacobian is left for the caller to refresh) and mu
// shrinks; otherwise the state is untouched apart from a larger mu. Throws
// Diverged once mu would exceed mu_max and SolveFailure on a non-finite step.
LmStep lm_step(LmState& state, const LmParams& params, const ResidualFn& residual_at);

// ---------------------------------------------------------------------------
// Trainers

enum class Algorithm { Lm, Gd, Cg, Rprop, Bayes };

std::string_view algorithm_name(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

struct RpropParams {
  double increase = 1.2;
  double decrease = 0.5;
  double initial_step = 0.1;
  double min_step = 1e-6;
  double max_step = 50.0;
};

struct CgParams {
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  std::size_t max_backtracks = 60;
};

struct TrainerConfig {
  Algorithm algorithm = Algorithm::Lm;
  std::size_t max_epochs = 100;
  double goal = 1e-5;
  double min_gradient = 1e-10;
  std::uint64_t seed = 1;
  LmParams lm;
  double learning_rate = 0.01;
  RpropParams rprop;
  double gamma = 0.9;  // Bayesian regularization: F = gamma E_D + (1 - gamma) E_w
  CgParams cg;

  void validate() const;
};

enum class StopReason { Goal, MaxEpochs, Diverged, MinGradient, Stalled };

std::string_view stop_reason_name(StopReason r);

struct TrainResult {
  Network network;
  std::vector<double> error_trace;      // E_D before training and after each epoch
  std::vector<double> objective_trace;  // minimized objective (F for bayes, else E_D)
  StopReason stop = StopReason::MaxEpochs;
  std::size_t epochs = 0;
  std::vector<LmStep> lm_steps;  // lm and bayes only; deltas are dropped
  double min_rprop_step = 0.0;   // over all weights and epochs, rprop only
  double max_rprop_step = 0.0;
};

TrainResult train(Network net, const Batch& batch, const TrainerConfig& cfg);

// Objective minimized by the Bayesian-regularized trainer.
double regularized_objective(const Network& net, const Batch& batch, double gamma);

inline const std::vector<std::size_t> kDefaultHidden = {10};

// One user's network: builds targets, initializes from cfg.seed, trains.
// Throws SingleClassDataset unless both labels are present.
TrainResult train_sample(const Dataset& ds, const TrainerConfig& cfg,
                         const std::vector<std::size_t>& hidden = kDefaultHidden);

// ---------------------------------------------------------------------------
// Ensembles

struct GlobalModel {
  std::vector<Network> locals;

  bool operator==(const GlobalModel&) const = default;
};

// Samples of each (user, label) sequence are dealt round-robin to `partitions`
// stratified partitions; partition p trains with seed cfg.seed + p.
std::vector<Dataset> stratified_partitions(const Dataset& ds, std::size_t partitions);

GlobalModel dist_train_sample(const Dataset& ds, const TrainerConfig& cfg, std::size_t partitions,
                              const std::vector<std::size_t>& hidden = kDefaultHidden, std::size_t workers = 1);

// Mean of member scores. Throws EmptyEnsemble.
double ensemble_score(const GlobalModel& model, const Eigen::VectorXd& x);

using Model = std::variant<Network, GlobalModel>;

double model_score(const Model& model, const Eigen::VectorXd& x);
std::size_t model_input_size(const Model& model);

}  // namespace sigcloud::nnet
