#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "sfmsemval/error.h"

namespace sfmsemval {

struct LmOptions {
  double lambda0 = 1e-3;
  int max_iters = 100;
  // Stop when (previous - current) / previous falls below this.
  double cost_tol = 1e-12;
  // Stop when max |J^T r| falls below this.
  double gradient_tol = 1e-12;
  // Damping ceiling; reaching it without a decrease ends the run.
  double lambda_max = 1e12;
};

enum class LmTermination {
  kZeroCost,
  kSmallGradient,
  kSmallCostChange,
  kMaxIterations,
  kNoDecrease,
};

template <typename State>
struct LmProblem {
  std::function<Eigen::VectorXd(const State&)> residuals;
  std::function<Eigen::MatrixXd(const State&)> jacobian;
  // state (+) delta on the parameter manifold.
  std::function<State(const State&, const Eigen::VectorXd&)> plus;
};

template <typename State>
struct LmResult {
  State state;
  // Squared residual norm, starting with the initial cost; one entry per
  // accepted step.
  std::vector<double> cost_trace;
  int iterations = 0;
  double final_lambda = 0.0;
  LmTermination termination = LmTermination::kMaxIterations;
};

// Damped Gauss-Newton: solve (J^T J + lambda I) delta = -J^T r, accept the
// step and shrink lambda by 10 when the cost drops, otherwise grow lambda by
// 10 and retry from the same linearization. Throws SolverError when the
// initial cost is not finite or when the damped system cannot be solved at
// any lambda up to lambda_max.
template <typename State>
LmResult<State> LevenbergMarquardt(State initial, const LmProblem<State>& problem,
                                   const LmOptions& options) {
  LmResult<State> result{std::move(initial), {}, 0, options.lambda0,
                         LmTermination::kMaxIterations};
  Eigen::VectorXd r = problem.residuals(result.state);
  double cost = r.squaredNorm();
  if (!std::isfinite(cost)) {
    throw SolverError("Levenberg-Marquardt: initial cost is not finite");
  }
  result.cost_trace.push_back(cost);
  double lambda = options.lambda0;

  for (int iter = 0; iter < options.max_iters; ++iter) {
    result.iterations = iter + 1;
    if (cost == 0.0) {
      result.termination = LmTermination::kZeroCost;
      break;
    }
    const Eigen::MatrixXd J = problem.jacobian(result.state);
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.size() == 0 || g.cwiseAbs().maxCoeff() < options.gradient_tol) {
      result.termination = LmTermination::kSmallGradient;
      break;
    }
    const Eigen::MatrixXd H = J.transpose() * J;

    bool accepted = false;
    bool any_solve = false;
    while (lambda <= options.lambda_max) {
      Eigen::MatrixXd damped = H;
      damped.diagonal().array() += lambda;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      Eigen::VectorXd delta;
      if (ldlt.info() == Eigen::Success) {
        delta = ldlt.solve(-g);
      }
      if (delta.size() != g.size() || !delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      any_solve = true;
      State candidate = problem.plus(result.state, delta);
      Eigen::VectorXd candidate_r = problem.residuals(candidate);
      const double candidate_cost = candidate_r.squaredNorm();
      if (std::isfinite(candidate_cost) && candidate_cost < cost) {
        const double relative = (cost - candidate_cost) / cost;
        result.state = std::move(candidate);
        r = std::move(candidate_r);
        cost = candidate_cost;
        result.cost_trace.push_back(cost);
        lambda *= 0.1;
        accepted = true;
        if (relative < options.cost_tol) {
          result.termination = LmTermination::kSmallCostChange;
        }
        break;
      }
      lambda *= 10.0;
    }
    result.final_lambda = lambda;
    if (!accepted) {
      if (!any_solve) {
        throw SolverError(
            "Levenberg-Marquardt: damped normal equations unsolvable up to "
            "lambda ceiling");
      }
      result.termination = LmTermination::kNoDecrease;
      break;
    }
    if (result.termination == LmTermination::kSmallCostChange) break;
  }
  result.final_lambda = lambda;
  return result;
}

}  // namespace sfmsemval
