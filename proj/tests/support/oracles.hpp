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

// Reference computations used by the unit and acceptance tests. None of them
// call into the code paths they check.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "ncollapse/embedding.hpp"
#include "ncollapse/losses.hpp"
#include "ncollapse/md_solver.hpp"

namespace ncollapse::testing {

using mp = boost::multiprecision::cpp_bin_float_50;

/// -<y, log softmax(W z)> in 50 digits.
inline double mp_ls_loss(const Matrix& W, const Vector& z, int n, double alpha) {
  const int N = static_cast<int>(W.rows());
  std::vector<mp> logits(static_cast<std::size_t>(N));
  for (int m = 0; m < N; ++m) {
    mp acc = 0;
    for (Eigen::Index j = 0; j < W.cols(); ++j) acc += mp(W(m, j)) * mp(z(j));
    logits[static_cast<std::size_t>(m)] = acc;
  }
  mp denom = 0;
  for (const auto& l : logits) denom += exp(l);
  const mp log_denom = log(denom);
  mp loss = 0;
  for (int m = 0; m < N; ++m) {
    const mp y = (m == n ? mp(1) - mp(alpha) : mp(0)) + mp(alpha) / N;
    loss -= y * (logits[static_cast<std::size_t>(m)] - log_denom);
  }
  return static_cast<double>(loss);
}

struct MpClosedForm {
  double w_norm;
  double h_norm;
  double objective;
};

/// Minimizes s -> log(1 + (N-1) e^{-c s}) + beta c s + 2 s sqrt(lambda_W lambda_H / K)
/// over s = ||W|| ||H|| > 0 by bisection on the derivative in 50 digits, with
/// c = 1/sqrt(K N (N-1)) (the value of -P / (||W|| ||H||) at a collapsed
/// pair), then splits s by the balance lambda_W w^2 = (lambda_H/K) h^2.
inline MpClosedForm mp_closed_form(int N, int K, double alpha, double lw, double lh,
                                   double c_override = 0.0) {
  const mp c = c_override > 0.0 ? mp(c_override)
                                 : mp(1) / sqrt(mp(K) * mp(N) * mp(N - 1));
  const mp beta = mp(N - 1) * mp(alpha) / mp(N);
  const mp reg = 2 * sqrt(mp(lw) * mp(lh) / mp(K));
  auto dfds = [&](const mp& s) {
    const mp e = mp(N - 1) * exp(-c * s);
    return -c * e / (1 + e) + beta * c + reg;
  };
  mp lo = 0, hi = 1;
  while (dfds(hi) < 0) hi *= 2;
  for (int i = 0; i < 400; ++i) {
    const mp mid = (lo + hi) / 2;
    (dfds(mid) < 0 ? lo : hi) = mid;
  }
  const mp s = (lo + hi) / 2;
  const mp w2 = s * sqrt(mp(lh) / (mp(K) * mp(lw)));
  const mp h2 = s * sqrt(mp(K) * mp(lw) / mp(lh));
  const mp f = log(1 + mp(N - 1) * exp(-c * s)) + beta * c * s + mp(lw) * w2 +
               mp(lh) / mp(K) * h2;
  return {static_cast<double>(sqrt(w2)), static_cast<double>(sqrt(h2)),
          static_cast<double>(f)};
}

struct GridMinimum {
  double value = std::numeric_limits<double>::infinity();
  Vector u;
  double resolution = 0.0;  // Lipschitz bound times one cell diagonal
  int feasible = 0;
};

/// Exhaustive search for the class-c corrupted-sample subproblem on an
/// n x n grid covering {u >= 0, ||u - h_{1-c}|| <= R} inside span{h_1, h_2}.
inline GridMinimum brute_force_half(const MdProblem& p, int c, double r, int n = 400) {
  const Vector own = p.h(c);
  const Vector other = p.h(1 - c);
  const double a = own.norm();
  const Vector e_own = own / a;
  const Vector e_other = other / other.norm();
  const double R = p.c_md * r / (p.eta * (p.h(0) - p.h(1)).norm());
  const double x0 = 0.0, x1 = R;
  const double y0 = std::max(0.0, a - R), y1 = a + R;
  const double hx = (x1 - x0) / (n - 1), hy = (y1 - y0) / (n - 1);
  GridMinimum out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = x0 + i * hx, y = y0 + j * hy;
      if (x * x + (y - a) * (y - a) > R * R) continue;
      const Vector u = x * e_own + y * e_other;
      const double v = ls_loss(p.nc.W, u, c, p.alpha) + p.lambda * u.squaredNorm();
      ++out.feasible;
      if (v < out.value) {
        out.value = v;
        out.u = u;
      }
    }
  }
  const double d = (p.w(1) - p.w(0)).norm();
  const double lipschitz = d * (1.0 + p.alpha / 2.0) + 2.0 * p.lambda * (a + R);
  out.resolution = lipschitz * std::hypot(hx, hy);
  return out;
}

/// Smallest sample of f on n equally spaced points of [lo, hi].
inline std::pair<double, double> dense_grid_min(const std::function<double(double)>& f,
                                                double lo, double hi, int n) {
  double best_x = lo, best = f(lo);
  for (int i = 1; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return {best_x, best};
}

/// Central differences of f at x, one coordinate at a time.
inline Vector central_difference(const std::function<double(const Vector&)>& f, Vector x,
                                 double step) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x(i);
    x(i) = keep + step;
    const double up = f(x);
    x(i) = keep - step;
    const double down = f(x);
    x(i) = keep;
    g(i) = (up - down) / (2.0 * step);
  }
  return g;
}

/// Random pair with Gaussian W and |Gaussian| H, entries scaled by `scale`.
inline ModelParams random_params(std::mt19937_64& rng, int N, int K, int M, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix W(N, M), H(M, N * K);
  for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < H.size(); ++i) H.data()[i] = std::abs(g(rng));
  return ModelParams(std::move(W), std::move(H), N, K);
}

/// Random orthogonal matrix from the QR factor of a Gaussian matrix.
inline Matrix random_rotation(std::mt19937_64& rng, int M) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix A(M, M);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = g(rng);
  Eigen::HouseholderQR<Matrix> qr(A);
  return qr.householderQ() * Matrix::Identity(M, M);
}

}  // namespace ncollapse::testing
