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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ncollapse/embedding.hpp"
#include "ncollapse/losses.hpp"

namespace ncollapse {

// Two-class memorization-dilation model. Class c (0 or 1) has clean features
// h_c + v with v ~ mu_r, and a corrupted sample u_c that carries label c but
// whose true class is 1 - c. Memorization of u_c is measured by its distance
// to h_{1-c}, which the dilation r bounds from above.

enum class NoiseKind { kTwoPoint, kUniformCircle };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& text);

/// Centered distribution of the clean-feature perturbation v, with
/// sqrt(E ||v||^2) = r.
struct NoiseDistribution {
  NoiseKind kind = NoiseKind::kTwoPoint;
  /// Two-point only: direction of +-r u. Empty means along w_2 - w_1.
  std::optional<Vector> direction;
  /// Circle only: number of equally spaced nodes.
  int nodes = 64;
};

struct MdProblem {
  ModelParams nc;  // N = 2, K = 1, frozen
  double eta = 0.1;
  double alpha = 0.0;
  double lambda = 5e-3;
  double c_md = 1.0;
  NoiseDistribution noise;
  int quad_points = 256;  // angle samples before golden-section refinement

  Vector h(int c) const { return nc.H.col(c); }
  Vector w(int c) const { return nc.W.row(c).transpose(); }
  double gap() const { return (nc.H.col(0) - nc.H.col(1)).norm(); }  // ||h_1 - h_2||
};

/// Two-class model at the norms of the minimizer of
/// l_1 + l_2 + lambda_W ||W||^2 + lambda_H ||H||^2, with lambda := lambda_H.
/// Throws std::domain_error on eta outside (0,1) or c_md <= 0.
MdProblem make_md_problem(const LossParams& lp, double eta, double c_md,
                          NoiseDistribution noise = {}, int M = 2);

/// Wraps an arbitrary frozen pair. Requires N = 2, K = 1, H >= 0 and
/// orthogonal equinorm feature columns.
MdProblem make_md_problem(ModelParams nc, double alpha, double lambda, double eta,
                          double c_md, NoiseDistribution noise = {});

/// eta ||h_1 - h_2||^2 / c_md.
double r_max(const MdProblem& p);

/// Radius of the constraint ball around h_{1-c}: c_md r / (eta ||h_1 - h_2||).
double constraint_radius(const MdProblem& p, double r);

/// l_alpha(W, u, y_c) + lambda ||u||^2.
double half_objective(const MdProblem& p, int c, const Eigen::Ref<const Vector>& u);

struct HalfSolution {
  Vector u;
  double value = 0.0;
  bool constraint_active = false;
  double theta = 0.0;  // angle on the constraint circle, when active
};

/// Minimizes half_objective for class c over u >= 0 with
/// ||u - h_{1-c}|| <= constraint_radius(r).
HalfSolution solve_half(const MdProblem& p, int c, double r);
inline HalfSolution solve_u1(const MdProblem& p, double r) { return solve_half(p, 0, r); }
inline HalfSolution solve_u2(const MdProblem& p, double r) { return solve_half(p, 1, r); }

/// Angle interval searched by solve_half: the part of the constraint circle in
/// the nonnegative quadrant, cut to the lower arc once r >= r_max / sqrt(2).
std::pair<double, double> search_arc(const MdProblem& p, double r);

double g_eval(const MdProblem& p, double r);
double f_eval(const MdProblem& p, double r);
double md_risk(const MdProblem& p, double r);

/// Support points (radius 1) and weights of mu_1 for class c.
std::vector<std::pair<Vector, double>> noise_support(const MdProblem& p);

struct MdSolution {
  Vector u1;
  Vector u2;
  double r_star = 0.0;
  double risk = 0.0;
  std::pair<bool, bool> constraint_active{false, false};
  double normalized_dilation = 0.0;  // r_star / ||h_1 - h_2||
  double memorization = 0.0;         // eta ||h_2 - u_1|| + eta ||h_1 - u_2||
  double r_max = 0.0;
  double gap = 0.0;
};

/// Minimizes md_risk over [0, r_max]: `grid` equally spaced points, then
/// golden-section refinement to rel_tol * r_max.
MdSolution solve_r(const MdProblem& p, int grid = 256, double rel_tol = 1e-9);

struct AssumptionReport {
  double gamma = 0.0;    // ||H^CE|| / ||H^LS||
  double c_tilde = 0.0;  // c_md / (sqrt(2) ||h_1^CE - h_2^CE||)
  double eta_bound = 0.0;  // (c_tilde (1 - 1/gamma))^2
  bool alpha_condition = false;  // alpha_0 > 4 sqrt(lambda_W lambda_H)
  bool eta_condition = false;    // sqrt(eta) < c_tilde (1 - 1/gamma)
  double c_prime = 0.0;     // sqrt(2) ||h_1 - h_2|| / c_md, CE instance
  double c_prime_ls = 0.0;  // same for the LS instance
  bool ok() const { return alpha_condition && eta_condition; }
};

AssumptionReport assumption_report(const LossParams& lp_ce, const LossParams& lp_ls,
                                   double eta, double c_md);

struct Comparison {
  AssumptionReport report;
  MdSolution ce;
  MdSolution ls;
  bool theorem2_holds = false;  // ce.normalized_dilation > ls.normalized_dilation
};

Comparison compare_ce_ls(const LossParams& lp_ce, const LossParams& lp_ls, double eta,
                         double c_md, const NoiseDistribution& noise = {});

// Constants appearing in the sharpness estimates, all with A = 1.

/// c_md^2 / ||h_1 - h_2||^2 times (e^s ||d||^2 / (2 (1 + e^s)^2) + 2 lambda),
/// s = <w_2 - w_1, h_1>, d = w_2 - w_1.
double growth_constant_g(const MdProblem& p);
/// e^s ||d||^2 / (2 (1 + e^s)^2) + lambda.
double growth_constant_f(const MdProblem& p);
/// sqrt(2) ||h_1 - h_2|| / c_md.
double c_prime(const MdProblem& p);
/// (c_md/||h_1-h_2||, 2 sqrt(2) c_md/||h_1-h_2||) * (r_max - r) / eta.
std::pair<double, double> displacement_band(const MdProblem& p, double r);
/// [r_max (1 - c_prime sqrt(eta)), r_max]. Vacuous when the lower end is <= 0.
std::pair<double, double> dilation_band(const MdProblem& p);

}  // namespace ncollapse
