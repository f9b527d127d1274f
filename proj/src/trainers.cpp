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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sigcloud/error.hpp"
#include "sigcloud/nnet.hpp"

namespace sigcloud::nnet {

namespace {

constexpr double kRefineTarget = 1e-13;
constexpr int kMaxRefinements = 3;

template <typename Matrix>
struct SpdSolver {
  explicit SpdSolver(const Matrix& a) : llt(a) {
    if (llt.info() != Eigen::Success) {
      ldlt.compute(a);
      use_ldlt = true;
    }
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    if (use_ldlt) return ldlt.solve(b);
    return llt.solve(b);
  }

  Eigen::LLT<Matrix> llt;
  Eigen::LDLT<Matrix> ldlt;
  bool use_ldlt = false;
};

// (J^T J + diag(ridge) + mu I) x - rhs, evaluated without forming J^T J.
Eigen::VectorXd system_residual(const Eigen::MatrixXd& jac, const Eigen::VectorXd& ridge, double mu,
                                const Eigen::VectorXd& x, const Eigen::VectorXd& rhs) {
  Eigen::VectorXd out = jac.transpose() * (jac * x) + mu * x - rhs;
  if (ridge.size() > 0) out += ridge.cwiseProduct(x);
  return out;
}

double relative(const Eigen::VectorXd& residual, double rhs_norm) {
  return rhs_norm > 0.0 ? residual.norm() / rhs_norm : residual.norm();
}

// Solves (J^T J + diag(ridge) + mu I) x = rhs. Without a ridge and with fewer
// residuals than parameters, rhs = J^T r is solved through the m x m system
// (J J^T + mu I) y = r, x = J^T y.
DampedSolution solve_system(const Eigen::MatrixXd& jac, const Eigen::VectorXd& r, const Eigen::VectorXd& ridge,
                            double mu, const Eigen::VectorXd& rhs) {
  const Eigen::Index m = jac.rows();
  const Eigen::Index n = jac.cols();
  const double rhs_norm = rhs.norm();
  DampedSolution out;
  if (rhs_norm == 0.0) {
    out.delta = Eigen::VectorXd::Zero(n);
    return out;
  }

  if (ridge.size() == 0 && m < n) {
    Eigen::MatrixXd inner = jac * jac.transpose();
    inner.diagonal().array() += mu;
    const SpdSolver<Eigen::MatrixXd> solver(inner);
    Eigen::VectorXd y = solver.solve(r);
    for (int it = 0;; ++it) {
      out.delta = jac.transpose() * y;
      out.relative_residual = relative(system_residual(jac, ridge, mu, out.delta, rhs), rhs_norm);
      if (out.relative_residual <= kRefineTarget || it == kMaxRefinements) break;
      y += solver.solve(r - (jac * (jac.transpose() * y) + mu * y));
    }
    return out;
  }

  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(n, n);
  normal.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
  normal.triangularView<Eigen::StrictlyUpper>() = normal.transpose();
  normal.diagonal().array() += mu;
  if (ridge.size() > 0) normal.diagonal() += ridge;
  const SpdSolver<Eigen::MatrixXd> solver(normal);
  out.delta = solver.solve(rhs);
  for (int it = 0;; ++it) {
    const Eigen::VectorXd res = system_residual(jac, ridge, mu, out.delta, rhs);
    out.relative_residual = relative(res, rhs_norm);
    if (out.relative_residual <= kRefineTarget || it == kMaxRefinements) break;
    out.delta -= solver.solve(res);
  }
  return out;
}

double penalty(const Eigen::VectorXd& ridge, const Eigen::VectorXd& w) {
  return ridge.size() > 0 ? ridge.dot(w.cwiseProduct(w)) : 0.0;
}

}  // namespace

DampedSolution solve_damped(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& residual, double mu) {
  if (jacobian.rows() != residual.size()) raise(Errc::DimensionMismatch, "Jacobian and residual disagree");
  return solve_system(jacobian, residual, Eigen::VectorXd(), mu, jacobian.transpose() * residual);
}

namespace {

// Shared by lm_step and the regularized trainer. `ridge` holds per-parameter
// penalty coefficients c (objective ||r||^2 + sum c_i w_i^2); empty means none.
LmStep lm_step_impl(LmState& state, const LmParams& params, const ResidualFn& residual_at,
                    const Eigen::VectorXd& ridge) {
  LmStep step;
  step.error_before = state.residual.squaredNorm() + penalty(ridge, state.weights);

  Eigen::VectorXd rhs = state.jacobian.transpose() * state.residual;
  if (ridge.size() > 0) rhs -= ridge.cwiseProduct(state.weights);
  DampedSolution sol = solve_system(state.jacobian, state.residual, ridge, state.mu, rhs);
  if (!sol.delta.allFinite()) raise(Errc::SolveFailure, "damped system produced a non-finite step");
  step.relative_residual = sol.relative_residual;
  step.delta = std::move(sol.delta);

  const Eigen::VectorXd candidate = state.weights + step.delta;
  Eigen::VectorXd candidate_residual = residual_at(candidate);
  const double after = candidate_residual.squaredNorm() + penalty(ridge, candidate);
  step.error_after = after;

  if (std::isfinite(after) && after < step.error_before) {
    step.accepted = true;
    state.weights = candidate;
    state.residual = std::move(candidate_residual);
    state.mu = std::max(state.mu / params.mu_decrease, params.mu_min);
  } else {
    step.accepted = false;
    step.error_after = step.error_before;
    const double next = state.mu * params.mu_increase;
    if (next > params.mu_max) {
      raise(Errc::Diverged, "damping exceeded " + std::to_string(params.mu_max));
    }
    state.mu = next;
  }
  step.mu = state.mu;
  return step;
}

}  // namespace

LmStep lm_step(LmState& state, const LmParams& params, const ResidualFn& residual_at) {
  if (state.jacobian.rows() != state.residual.size() || state.jacobian.cols() != state.weights.size()) {
    raise(Errc::DimensionMismatch, "LM state shapes are inconsistent");
  }
  return lm_step_impl(state, params, residual_at, Eigen::VectorXd());
}

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Lm: return "lm";
    case Algorithm::Gd: return "gd";
    case Algorithm::Cg: return "cg";
    case Algorithm::Rprop: return "rprop";
    case Algorithm::Bayes: return "bayes";
  }
  return "lm";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::Lm, Algorithm::Gd, Algorithm::Cg, Algorithm::Rprop, Algorithm::Bayes}) {
    if (algorithm_name(a) == name) return a;
  }
  raise(Errc::InvalidArgument, "unknown training algorithm '" + std::string(name) + "'");
}

std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::Goal: return "goal";
    case StopReason::MaxEpochs: return "max_epochs";
    case StopReason::Diverged: return "diverged";
    case StopReason::MinGradient: return "min_gradient";
    case StopReason::Stalled: return "stalled";
  }
  return "max_epochs";
}

void TrainerConfig::validate() const {
  const LmParams& p = lm;
  const bool ok = goal >= 0.0 && min_gradient >= 0.0 && p.mu_initial > 0.0 && p.mu_increase > 1.0 &&
                  p.mu_decrease > 1.0 && p.mu_max > p.mu_initial && p.mu_min > 0.0 && learning_rate > 0.0 &&
                  rprop.increase > 1.0 && rprop.decrease > 0.0 && rprop.decrease < 1.0 && rprop.min_step > 0.0 &&
                  rprop.max_step >= rprop.initial_step && rprop.initial_step >= rprop.min_step && gamma > 0.0 &&
                  gamma <= 1.0 && cg.shrink > 0.0 && cg.shrink < 1.0 && cg.sufficient_decrease > 0.0;
  if (!ok) raise(Errc::InvalidArgument, "trainer configuration out of range");
}

double regularized_objective(const Network& net, const Batch& batch, double gamma) {
  const Eigen::VectorXd w = net.parameters();
  const double e_w = w.cwiseProduct(net.weight_mask()).squaredNorm();
  return gamma * sum_squared_error(net, batch) + (1.0 - gamma) * e_w;
}

namespace {

class Trainer {
 public:
  Trainer(Network net, const Batch& batch, const TrainerConfig& cfg)
      : net_(std::move(net)), batch_(batch), cfg_(cfg) {
    result_.network = net_;
  }

  TrainResult run() {
    record();
    switch (cfg_.algorithm) {
      case Algorithm::Lm: run_lm(1.0); break;
      case Algorithm::Bayes: run_lm(cfg_.gamma); break;
      case Algorithm::Gd: run_gd(); break;
      case Algorithm::Cg: run_cg(); break;
      case Algorithm::Rprop: run_rprop(); break;
    }
    result_.network = net_;
    return std::move(result_);
  }

 private:
  double error_at(const Eigen::VectorXd& w) {
    scratch_ = net_;
    scratch_.set_parameters(w);
    return sum_squared_error(scratch_, batch_);
  }

  void record() {
    const double e = sum_squared_error(net_, batch_);
    result_.error_trace.push_back(e);
    result_.objective_trace.push_back(cfg_.algorithm == Algorithm::Bayes ? regularized_objective(net_, batch_, cfg_.gamma)
                                                                         : e);
  }

  bool reached_goal() const { return result_.objective_trace.back() <= cfg_.goal; }

  void finish_epoch() {
    ++result_.epochs;
    record();
  }

  // gamma = 1 is plain Levenberg-Marquardt; otherwise the residual and
  // Jacobian are scaled by sqrt(gamma) and a (1 - gamma) ridge on the
  // connection weights is added.
  void run_lm(double gamma) {
    const bool regularized = gamma < 1.0;
    const double root = std::sqrt(gamma);
    const Eigen::VectorXd ridge = regularized ? Eigen::VectorXd((1.0 - gamma) * net_.weight_mask()) : Eigen::VectorXd();

    LmState state;
    state.weights = net_.parameters();
    state.mu = cfg_.lm.mu_initial;
    const ResidualFn residual_at = [&](const Eigen::VectorXd& w) {
      scratch_ = net_;
      scratch_.set_parameters(w);
      Eigen::VectorXd r = residuals(scratch_, batch_);
      if (regularized) r *= root;
      return r;
    };

    while (result_.epochs < cfg_.max_epochs) {
      if (reached_goal()) {
        result_.stop = StopReason::Goal;
        return;
      }
      Linearization lin = linearize(net_, batch_);
      state.residual = std::move(lin.residual);
      state.jacobian = std::move(lin.jacobian);
      if (regularized) {
        state.residual *= root;
        state.jacobian *= root;
      }
      Eigen::VectorXd g = state.jacobian.transpose() * state.residual;
      if (regularized) g -= ridge.cwiseProduct(state.weights);
      if (g.norm() < cfg_.min_gradient) {
        result_.stop = StopReason::MinGradient;
        return;
      }
      for (;;) {
        LmStep step;
        try {
          step = lm_step_impl(state, cfg_.lm, residual_at, ridge);
        } catch (const Error& e) {
          if (e.code() != Errc::Diverged) throw;
          result_.stop = StopReason::Diverged;
          return;
        }
        step.delta = Eigen::VectorXd();
        const bool accepted = step.accepted;
        result_.lm_steps.push_back(std::move(step));
        if (accepted) break;
      }
      net_.set_parameters(state.weights);
      finish_epoch();
    }
    result_.stop = reached_goal() ? StopReason::Goal : StopReason::MaxEpochs;
  }

  void run_gd() {
    while (result_.epochs < cfg_.max_epochs) {
      if (reached_goal()) {
        result_.stop = StopReason::Goal;
        return;
      }
      const Eigen::VectorXd g = gradient(net_, batch_);
      if (g.norm() < cfg_.min_gradient) {
        result_.stop = StopReason::MinGradient;
        return;
      }
      const Eigen::VectorXd next = net_.parameters() - cfg_.learning_rate * g;
      if (!next.allFinite() || !std::isfinite(error_at(next))) {
        result_.stop = StopReason::Diverged;
        return;
      }
      net_.set_parameters(next);
      finish_epoch();
    }
    result_.stop = reached_goal() ? StopReason::Goal : StopReason::MaxEpochs;
  }

  // Fletcher-Reeves with Armijo backtracking; restarts along the steepest
  // descent direction every n_params iterations or when the conjugate
  // direction stops being a descent direction.
  void run_cg() {
    const std::size_t n_params = net_.parameter_count();
    Eigen::VectorXd w = net_.parameters();
    Eigen::VectorXd g = gradient(net_, batch_);
    Eigen::VectorXd d = -g;
    double error = result_.error_trace.back();
    double alpha = 1.0;
    std::size_t since_restart = 0;

    while (result_.epochs < cfg_.max_epochs) {
      if (reached_goal()) {
        result_.stop = StopReason::Goal;
        return;
      }
      if (g.norm() < cfg_.min_gradient) {
        result_.stop = StopReason::MinGradient;
        return;
      }
      double slope = g.dot(d);
      if (slope >= 0.0 || since_restart >= n_params) {
        d = -g;
        slope = g.dot(d);
        since_restart = 0;
      }

      bool found = false;
      double trial = std::min(2.0 * alpha, 1e3);
      for (std::size_t k = 0; k < cfg_.cg.max_backtracks; ++k, trial *= cfg_.cg.shrink) {
        const double candidate = error_at(w + trial * d);
        if (std::isfinite(candidate) && candidate <= error + cfg_.cg.sufficient_decrease * trial * slope) {
          found = true;
          error = candidate;
          break;
        }
      }
      if (!found) {
        if (since_restart == 0) {
          result_.stop = StopReason::Stalled;
          return;
        }
        d = -g;
        since_restart = 0;
        continue;
      }

      alpha = trial;
      w += alpha * d;
      net_.set_parameters(w);
      const Eigen::VectorXd g_next = gradient(net_, batch_);
      const double beta = g_next.squaredNorm() / g.squaredNorm();
      d = -g_next + beta * d;
      g = g_next;
      ++since_restart;
      finish_epoch();
    }
    result_.stop = reached_goal() ? StopReason::Goal : StopReason::MaxEpochs;
  }

  void run_rprop() {
    const RpropParams& p = cfg_.rprop;
    const auto n = static_cast<Eigen::Index>(net_.parameter_count());
    Eigen::VectorXd steps = Eigen::VectorXd::Constant(n, p.initial_step);
    Eigen::VectorXd previous = Eigen::VectorXd::Zero(n);
    result_.min_rprop_step = p.initial_step;
    result_.max_rprop_step = p.initial_step;

    while (result_.epochs < cfg_.max_epochs) {
      if (reached_goal()) {
        result_.stop = StopReason::Goal;
        return;
      }
      Eigen::VectorXd g = gradient(net_, batch_);
      if (g.norm() < cfg_.min_gradient) {
        result_.stop = StopReason::MinGradient;
        return;
      }
      Eigen::VectorXd w = net_.parameters();
      for (Eigen::Index i = 0; i < n; ++i) {
        const double agreement = g(i) * previous(i);
        if (agreement > 0.0) {
          steps(i) = std::min(steps(i) * p.increase, p.max_step);
        } else if (agreement < 0.0) {
          steps(i) = std::max(steps(i) * p.decrease, p.min_step);
          g(i) = 0.0;
        }
        if (g(i) > 0.0) {
          w(i) -= steps(i);
        } else if (g(i) < 0.0) {
          w(i) += steps(i);
        }
      }
      previous = g;
      result_.min_rprop_step = std::min(result_.min_rprop_step, steps.minCoeff());
      result_.max_rprop_step = std::max(result_.max_rprop_step, steps.maxCoeff());
      if (!std::isfinite(error_at(w))) {
        result_.stop = StopReason::Diverged;
        return;
      }
      net_.set_parameters(w);
      finish_epoch();
    }
    result_.stop = reached_goal() ? StopReason::Goal : StopReason::MaxEpochs;
  }

  Network net_;
  Network scratch_;
  const Batch& batch_;
  const TrainerConfig& cfg_;
  TrainResult result_;
};

}  // namespace

TrainResult train(Network net, const Batch& batch, const TrainerConfig& cfg) {
  cfg.validate();
  if (batch.size() == 0) raise(Errc::EmptyDataset, "nothing to train on");
  if (static_cast<std::size_t>(batch.inputs.cols()) != net.input_size()) {
    raise(Errc::DimensionMismatch, "batch has dimension " + std::to_string(batch.inputs.cols()) +
                                       ", network expects " + std::to_string(net.input_size()));
  }
  return Trainer(std::move(net), batch, cfg).run();
}

TrainResult train_sample(const Dataset& ds, const TrainerConfig& cfg, const std::vector<std::size_t>& hidden) {
  bool has_genuine = false;
  bool has_forged = false;
  for (const auto& r : ds.records) (r.label == Label::Genuine ? has_genuine : has_forged) = true;
  if (!has_genuine || !has_forged) raise(Errc::SingleClassDataset, "training needs genuine and forged samples");

  std::vector<std::size_t> sizes{ds.dimension()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(2);
  return train(init_network(std::move(sizes), cfg.seed), make_batch(ds), cfg);
}

}  // namespace sigcloud::nnet
