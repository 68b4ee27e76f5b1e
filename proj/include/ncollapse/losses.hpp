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

#include "ncollapse/embedding.hpp"

namespace ncollapse {

/// Label-smoothing parameter and weight-decay strengths. alpha = 0 is plain
/// cross-entropy.
struct LossParams {
  double alpha = 0.0;
  double lambda_w = 5e-3;
  double lambda_h = 5e-3;

  /// Effective smoothing weight on the wrong classes, (N-1) alpha / N.
  double beta(int num_classes) const {
    return (num_classes - 1) * alpha / num_classes;
  }
  /// Throws std::domain_error unless 0 <= alpha < 1 and both lambdas > 0.
  void validate() const;
};

/// (1 - alpha) e_n + (alpha / N) 1_N.
Vector smoothed_label(int n, double alpha, int num_classes);

/// softmax(W z), evaluated with max-subtraction.
Vector softmax_scores(const Matrix& W, const Eigen::Ref<const Vector>& z);

/// <-y_n, log softmax(W z)>.
double ls_loss(const Matrix& W, const Eigen::Ref<const Vector>& z, int n,
               double alpha);

/// Mean label-smoothed loss over all N*K feature columns.
double empirical_risk(const ModelParams& params, const LossParams& lp);

/// The same risk written with logit differences: a cross-entropy term minus
/// (alpha/N) times the bilinear sum of <w_m - w_n, h_n^(k)>.
double reformulated_risk(const ModelParams& params, const LossParams& lp);

/// empirical_risk + lambda_w ||W||^2 + (lambda_h / K) ||H||^2.
double regularized_objective(const ModelParams& params, const LossParams& lp);

/// P(W,H) = 1/(K N (N-1)) sum_k sum_n sum_{m != n} <w_m - w_n, h_n^(k)>.
double bilinear_term(const ModelParams& params);

/// Lower bound on P for H >= 0 with the constant -1/sqrt(K (N-1)). Valid but
/// never attained: see `bilinear_tight_bound`.
double bilinear_loose_bound(double w_norm, double h_norm, int N, int K);

/// -||W|| ||H|| / sqrt(K N (N-1)). Valid for H >= 0 and attained exactly at
/// NC configurations.
double bilinear_tight_bound(double w_norm, double h_norm, int N, int K);

/// log(1 + (N-1) e^P) - beta P.
double jensen_lower_bound(double P, double beta, int N);

/// Minimizer of t -> log(1 + (N-1) e^t) - beta t, or -inf when beta == 0.
double jensen_minimizer(double beta, int N);

struct ObjectiveGradient {
  Matrix W;  // N x M
  Matrix H;  // M x (N*K)
};

/// Exact gradient of regularized_objective, ignoring the H >= 0 constraint.
ObjectiveGradient objective_gradient(const ModelParams& params,
                                     const LossParams& lp);

/// Objective and gradient in a single pass over the columns.
double objective_and_gradient(const ModelParams& params, const LossParams& lp,
                              ObjectiveGradient* grad);

}  // namespace ncollapse
