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

#include "ncollapse/lpm_solver.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <random>

namespace ncollapse {

bool closed_form_condition(int N, const LossParams& lp) {
  return lp.beta(N) + 2.0 * std::sqrt((N - 1) * lp.lambda_w * lp.lambda_h) < 1.0;
}

double collapsed_objective(int N, int K, const LossParams& lp, double w, double h) {
  const double c = 1.0 / std::sqrt(static_cast<double>(K) * N * (N - 1));
  return jensen_lower_bound(-c * w * h, lp.beta(N), N) + lp.lambda_w * w * w +
         lp.lambda_h / K * h * h;
}

ClosedForm closed_form_minimizer(int N, int K, const LossParams& lp) {
  if (N < 2 || K < 1) throw std::invalid_argument("need N >= 2 and K >= 1");
  lp.validate();
  ClosedForm cf;
  cf.N = N;
  cf.K = K;
  cf.beta = lp.beta(N);
  cf.t0 = jensen_minimizer(cf.beta, N);
  cf.condition_ok = closed_form_condition(N, lp);
  if (!cf.condition_ok)
    throw ConditionError(
        "hypothesis (N-1) alpha / N + 2 sqrt((N-1) lambda_W lambda_H) < 1 violated");

  cf.c = 1.0 / std::sqrt(static_cast<double>(K) * N * (N - 1));
  cf.delta = cf.beta + 2.0 * std::sqrt(lp.lambda_w * lp.lambda_h / K) / cf.c;
  cf.log_argument = (N - 1) * (1.0 - cf.delta) / cf.delta;
  if (!(cf.delta < 1.0) || !(cf.log_argument > 1.0))
    throw ConditionError("no nontrivial minimizer: log argument " +
                         format_double(cf.log_argument) + " <= 1");

  // s = ||W|| ||H||, split by the balance lambda_W w^2 = (lambda_H/K) h^2
  const double s = std::log(cf.log_argument) / cf.c;
  cf.w_norm = std::sqrt(s * std::sqrt(lp.lambda_h / (K * lp.lambda_w)));
  cf.h_norm = std::sqrt(s * std::sqrt(K * lp.lambda_w / lp.lambda_h));
  cf.objective_at_min = collapsed_objective(N, K, lp, cf.w_norm, cf.h_norm);
  return cf;
}

ModelParams construct_nc_config(int N, int K, int M, double w_norm, double h_norm) {
  if (N < 2 || K < 1) throw std::invalid_argument("need N >= 2 and K >= 1");
  if (M < N) throw std::invalid_argument("construct_nc_config needs M >= N");
  if (w_norm < 0.0 || h_norm < 0.0) throw std::invalid_argument("norms must be >= 0");
  const double a = h_norm / std::sqrt(static_cast<double>(N) * K);
  const double b = w_norm / std::sqrt(static_cast<double>(N - 1));
  Matrix W = Matrix::Zero(N, M);
  Matrix H = Matrix::Zero(M, N * K);
  for (int n = 0; n < N; ++n) {
    for (int k = 0; k < K; ++k) H(n, n * K + k) = a;
    for (int m = 0; m < N; ++m) W(n, m) = b * ((m == n ? 1.0 : 0.0) - 1.0 / N);
  }
  return ModelParams(std::move(W), std::move(H), N, K);
}

double projected_gradient_norm(const ModelParams& params, const ObjectiveGradient& grad) {
  const double w_part = grad.W.squaredNorm();
  const double h_part =
      ((params.H - grad.H).cwiseMax(0.0) - params.H).squaredNorm();
  return std::sqrt(w_part + h_part);
}

ModelParams random_start(int N, int K, int M, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Matrix W(N, M);
  Matrix H(M, N * K);
  for (Eigen::Index j = 0; j < W.cols(); ++j)
    for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = normal(rng);
  for (Eigen::Index j = 0; j < H.cols(); ++j)
    for (Eigen::Index i = 0; i < H.rows(); ++i) H(i, j) = scale + std::abs(normal(rng));
  return ModelParams(std::move(W), std::move(H), N, K);
}

LpmSolution descend(ModelParams start, const LossParams& lp, const SolverOptions& opts) {
  LpmSolution sol;
  sol.params = std::move(start);
  sol.params.H = sol.params.H.cwiseMax(0.0);

  ObjectiveGradient grad;
  double f = objective_and_gradient(sol.params, lp, &grad);
  if (opts.record_history) sol.history.push_back(f);
  ModelParams trial = sol.params;
  ObjectiveGradient trial_grad;

  int it = 0;
  for (; it < opts.max_iter; ++it) {
    sol.grad_norm = projected_gradient_norm(sol.params, grad);
    if (sol.grad_norm <= opts.tol) {
      sol.converged = true;
      break;
    }
    double step = opts.initial_step;
    double f_trial = f;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      trial.W = sol.params.W - step * grad.W;
      trial.H = (sol.params.H - step * grad.H).cwiseMax(0.0);
      f_trial = objective_and_gradient(trial, lp, nullptr);
      // sufficient decrease along the projection arc
      const double slope = (grad.W.cwiseProduct(trial.W - sol.params.W)).sum() +
                           (grad.H.cwiseProduct(trial.H - sol.params.H)).sum();
      if (f_trial <= f + opts.armijo * slope) {
        accepted = true;
        break;
      }
      step *= opts.backtrack;
    }
    if (!accepted) break;  // step underflow: no further progress possible

    std::swap(sol.params, trial);
    const double f_prev = f;
    f = objective_and_gradient(sol.params, lp, &grad);
    if (opts.record_history) sol.history.push_back(f);
    if (std::abs(f_prev - f) <= opts.rel_obj_tol * std::abs(f_prev)) {
      ++it;
      sol.grad_norm = projected_gradient_norm(sol.params, grad);
      sol.converged = true;
      break;
    }
  }
  sol.objective = f;
  sol.iterations = it;
  if (!sol.converged) sol.grad_norm = projected_gradient_norm(sol.params, grad);
  return sol;
}

LpmSolution solve_lpm(int N, int K, int M, const LossParams& lp, const SolverOptions& opts) {
  if (N < 2 || K < 1) throw std::invalid_argument("need N >= 2 and K >= 1");
  if (M < N) throw std::invalid_argument("solve_lpm needs M >= N");
  if (opts.restarts < 1) throw std::invalid_argument("need at least one restart");
  lp.validate();

  std::seed_seq base{static_cast<std::uint32_t>(opts.seed),
                     static_cast<std::uint32_t>(opts.seed >> 32)};
  std::vector<std::uint32_t> seeds(static_cast<std::size_t>(opts.restarts) * 2);
  base.generate(seeds.begin(), seeds.end());

  auto run = [&](int r) {
    const std::uint64_t s = (static_cast<std::uint64_t>(seeds[2 * r]) << 32) | seeds[2 * r + 1];
    return descend(random_start(N, K, M, opts.init_scale, s), lp, opts);
  };

  std::vector<LpmSolution> runs;
  if (opts.parallel && opts.restarts > 1) {
    std::vector<std::future<LpmSolution>> pending;
    for (int r = 0; r < opts.restarts; ++r)
      pending.push_back(std::async(std::launch::async, run, r));
    for (auto& p : pending) runs.push_back(p.get());
  } else {
    for (int r = 0; r < opts.restarts; ++r) runs.push_back(run(r));
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    const auto& a = runs[r];
    const auto& b = runs[best];
    if (a.objective < b.objective ||
        (a.objective == b.objective && a.grad_norm < b.grad_norm))
      best = r;
  }
  LpmSolution out = std::move(runs[best]);
  out.restarts_used = opts.restarts;
  out.best_restart = static_cast<int>(best);
  return out;
}

Theorem1Check verify_theorem1(const ModelParams& params, const ClosedForm& cf,
                              const LossParams& lp, double tol_geom, double tol_norm) {
  Theorem1Check check;
  check.report = nc_config_report(params);
  check.geometry_ok = check.report.accepts(tol_geom);
  check.w_rel_err = std::abs(params.W.norm() - cf.w_norm) / cf.w_norm;
  check.h_rel_err = std::abs(params.H.norm() - cf.h_norm) / cf.h_norm;
  check.norms_ok = check.w_rel_err <= tol_norm && check.h_rel_err <= tol_norm;
  const double f = regularized_objective(params, lp);
  check.objective_rel_err =
      std::abs(f - cf.objective_at_min) / std::max(1.0, std::abs(cf.objective_at_min));
  check.objective_ok = check.objective_rel_err <= tol_norm;
  return check;
}

Theorem1Check verify_theorem1(const LpmSolution& sol, const ClosedForm& cf,
                              const LossParams& lp, double tol_geom, double tol_norm) {
  return verify_theorem1(sol.params, cf, lp, tol_geom, tol_norm);
}

}  // namespace ncollapse
