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

#include "ncollapse/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ncollapse {

namespace {

// log sum_i exp(x_i)
double log_sum_exp(const Eigen::Ref<const Vector>& x) {
  const double top = x.maxCoeff();
  return top + std::log((x.array() - top).exp().sum());
}

// log(1 + sum_i exp(x_i)), the implicit 1 being a zero logit difference.
double log1p_sum_exp(const Eigen::Ref<const Vector>& x) {
  const double top = std::max(0.0, x.size() ? x.maxCoeff() : 0.0);
  return top + std::log(std::exp(-top) + (x.array() - top).exp().sum());
}

}  // namespace

void LossParams::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::domain_error("alpha must lie in [0,1)");
  if (!(lambda_w > 0.0) || !(lambda_h > 0.0))
    throw std::domain_error("weight decay parameters must be positive");
}

Vector smoothed_label(int n, double alpha, int num_classes) {
  if (n < 0 || n >= num_classes) throw std::out_of_range("class index out of range");
  Vector y = Vector::Constant(num_classes, alpha / num_classes);
  y(n) += 1.0 - alpha;
  return y;
}

Vector softmax_scores(const Matrix& W, const Eigen::Ref<const Vector>& z) {
  const Vector logits = W * z;
  const Vector shifted = (logits.array() - logits.maxCoeff()).exp();
  return shifted / shifted.sum();
}

double ls_loss(const Matrix& W, const Eigen::Ref<const Vector>& z, int n,
               double alpha) {
  const Vector logits = W * z;
  const double lse = log_sum_exp(logits);
  const Vector y = smoothed_label(n, alpha, static_cast<int>(W.rows()));
  // -<y, logits - lse> with sum(y) = 1
  return lse - y.dot(logits);
}

double empirical_risk(const ModelParams& params, const LossParams& lp) {
  double total = 0.0;
  for (int n = 0; n < params.N; ++n)
    for (int k = 0; k < params.K; ++k)
      total += ls_loss(params.W, params.feature(n, k), n, lp.alpha);
  return total / (params.N * params.K);
}

double reformulated_risk(const ModelParams& params, const LossParams& lp) {
  const int N = params.N;
  double total = 0.0;
  Vector diffs(N - 1);
  for (int n = 0; n < N; ++n) {
    for (int k = 0; k < params.K; ++k) {
      const auto h = params.feature(n, k);
      const double own = params.W.row(n).dot(h);
      for (int m = 0, j = 0; m < N; ++m)
        if (m != n) diffs(j++) = params.W.row(m).dot(h) - own;
      total += log1p_sum_exp(diffs) - lp.alpha / N * diffs.sum();
    }
  }
  return total / (N * params.K);
}

double regularized_objective(const ModelParams& params, const LossParams& lp) {
  return empirical_risk(params, lp) + lp.lambda_w * params.W.squaredNorm() +
         lp.lambda_h / params.K * params.H.squaredNorm();
}

double bilinear_term(const ModelParams& params) {
  const int N = params.N;
  if (N < 2) return 0.0;
  // sum_{m != n} <w_m - w_n, h> = <sum_m w_m - N w_n, h>
  const Vector w_sum = params.W.colwise().sum().transpose();
  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    const Vector dir = w_sum - N * params.W.row(n).transpose();
    for (int k = 0; k < params.K; ++k) total += dir.dot(params.feature(n, k));
  }
  return total / (static_cast<double>(params.K) * N * (N - 1));
}

double bilinear_loose_bound(double w_norm, double h_norm, int N, int K) {
  return -w_norm * h_norm / std::sqrt(static_cast<double>(K) * (N - 1));
}

double bilinear_tight_bound(double w_norm, double h_norm, int N, int K) {
  return -w_norm * h_norm / std::sqrt(static_cast<double>(K) * N * (N - 1));
}

double jensen_lower_bound(double P, double beta, int N) {
  // log(1 + (N-1) e^P) computed as a stable softplus
  const double x = P + std::log(static_cast<double>(N - 1));
  const double softplus = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  return softplus - beta * P;
}

double jensen_minimizer(double beta, int N) {
  if (beta <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(beta / ((N - 1) * (1.0 - beta)));
}

double objective_and_gradient(const ModelParams& params, const LossParams& lp,
                              ObjectiveGradient* grad) {
  const int N = params.N;
  const int K = params.K;
  const double scale = 1.0 / (N * K);
  if (grad) {
    grad->W = 2.0 * lp.lambda_w * params.W;
    grad->H = (2.0 * lp.lambda_h / K) * params.H;
  }
  double risk = 0.0;
  for (int n = 0; n < N; ++n) {
    const Vector y = smoothed_label(n, lp.alpha, N);
    for (int k = 0; k < K; ++k) {
      const auto h = params.feature(n, k);
      const Vector logits = params.W * h;
      const double lse = log_sum_exp(logits);
      risk += lse - y.dot(logits);
      if (grad) {
        // d loss / d logits = softmax - y
        const Vector residual = (logits.array() - lse).exp().matrix() - y;
        grad->W.noalias() += scale * residual * h.transpose();
        grad->H.col(n * K + k).noalias() += scale * params.W.transpose() * residual;
      }
    }
  }
  return risk * scale + lp.lambda_w * params.W.squaredNorm() +
         lp.lambda_h / K * params.H.squaredNorm();
}

ObjectiveGradient objective_gradient(const ModelParams& params,
                                     const LossParams& lp) {
  ObjectiveGradient grad;
  objective_and_gradient(params, lp, &grad);
  return grad;
}

}  // namespace ncollapse
