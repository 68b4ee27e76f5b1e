// Copyright 2026 The ncollapse Authors.
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

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ncollapse/embedding.hpp"
#include "ncollapse/losses.hpp"
#include "ncollapse/metrics.hpp"

namespace ncollapse {

/// Thrown when beta + 2 sqrt((N-1) lambda_W lambda_H) >= 1, or when the
/// nontrivial stationary point does not exist.
class ConditionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Norms of the nontrivial minimizer of the regularized layer-peeled problem.
struct ClosedForm {
  int N = 0;
  int K = 0;
  double beta = 0.0;
  double t0 = 0.0;            // -inf when beta == 0
  double w_norm = 0.0;
  double h_norm = 0.0;
  double objective_at_min = 0.0;
  bool condition_ok = false;  // beta + 2 sqrt((N-1) lambda_W lambda_H) < 1
  double c = 0.0;             // 1 / sqrt(K N (N-1)), so P = -c ||W|| ||H|| at collapse
  double delta = 0.0;         // beta + 2 sqrt(lambda_W lambda_H / K) / c
  double log_argument = 0.0;  // (N-1)(1-delta)/delta
};

/// Checks only the hypothesis, without evaluating the norms.
bool closed_form_condition(int N, const LossParams& lp);

/// Throws ConditionError if the hypothesis fails or no nontrivial minimizer
/// exists (log_argument <= 1).
ClosedForm closed_form_minimizer(int N, int K, const LossParams& lp);

/// Value of the objective on any NC configuration with ||W|| = w, ||H|| = h.
double collapsed_objective(int N, int K, const LossParams& lp, double w, double h);

/// Axis-aligned NC configuration: h_n on the n-th coordinate axis, K equal
/// copies per class, w_n proportional to h_n minus the global mean. The result
/// has ||W|| = w_norm and ||H|| = h_norm.
ModelParams construct_nc_config(int N, int K, int M, double w_norm, double h_norm);

struct SolverOptions {
  int restarts = 5;
  double tol = 1e-8;              // projected-gradient norm
  double rel_obj_tol = 1e-12;     // relative change between iterates
  int max_iter = 200000;          // per restart
  std::uint64_t seed = 0;
  double init_scale = 1.0;
  double initial_step = 1.0;
  double backtrack = 0.5;
  double armijo = 1e-4;
  bool parallel = true;
  bool record_history = false;
};

struct LpmSolution {
  ModelParams params;
  double objective = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  int restarts_used = 0;
  int best_restart = 0;
  std::vector<double> history;  // objective per iterate of the best restart
};

/// Norm of the projected gradient: the W part of the gradient plus, for H,
/// max(H - grad_H, 0) - H.
double projected_gradient_norm(const ModelParams& params, const ObjectiveGradient& grad);

/// Projected gradient descent with Armijo backtracking from one start point.
LpmSolution descend(ModelParams start, const LossParams& lp, const SolverOptions& opts);

/// Random start: W ~ N(0, scale^2), H entries scale (1 + |N(0, 1)|). Starting
/// H inside the positive orthant keeps descent away from the stationary points
/// where a whole class of features sits at zero.
ModelParams random_start(int N, int K, int M, double scale, std::uint64_t seed);

/// Best of `opts.restarts` runs of `descend`, ranked by objective then by
/// projected-gradient norm. Restarts are seeded from opts.seed and the
/// restart index, so the result does not depend on scheduling.
LpmSolution solve_lpm(int N, int K, int M, const LossParams& lp,
                      const SolverOptions& opts = {});

struct Theorem1Check {
  NcReport report;
  double w_rel_err = 0.0;
  double h_rel_err = 0.0;
  double objective_rel_err = 0.0;
  bool geometry_ok = false;
  bool norms_ok = false;
  bool objective_ok = false;
  bool ok() const { return geometry_ok && norms_ok && objective_ok; }
};

Theorem1Check verify_theorem1(const ModelParams& params, const ClosedForm& cf,
                              const LossParams& lp, double tol_geom, double tol_norm);
Theorem1Check verify_theorem1(const LpmSolution& sol, const ClosedForm& cf,
                              const LossParams& lp, double tol_geom, double tol_norm);

}  // namespace ncollapse
