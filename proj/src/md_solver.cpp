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

#include "ncollapse/md_solver.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "ncollapse/lpm_solver.hpp"

namespace ncollapse {

namespace {

constexpr double kPi = std::numbers::pi;

// Minimizes f on [lo, hi] to bracket width tol.
template <typename F>
double golden_section(F&& f, double lo, double hi, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = f(c), fd = f(d);
  while (hi - lo > tol) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = f(d);
    }
  }
  return fc <= fd ? c : d;
}

// Coarse scan followed by golden section on the cell pair around the best
// sample. Endpoints are kept as candidates so boundary minima survive.
template <typename F>
double scan_and_refine(F&& f, double lo, double hi, int samples, double tol) {
  if (!(hi > lo)) return lo;
  samples = std::max(samples, 3);
  const double step = (hi - lo) / (samples - 1);
  int best = 0;
  double best_val = f(lo);
  for (int i = 1; i < samples; ++i) {
    const double v = f(i == samples - 1 ? hi : lo + i * step);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + std::max(best - 1, 0) * step;
  const double b = best + 1 >= samples ? hi : lo + (best + 1) * step;
  const double x = golden_section(f, a, b, tol);
  const double at = best == samples - 1 ? hi : lo + best * step;
  return f(x) <= best_val ? x : at;
}

double softplus(double t) {
  return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

// Orthonormal frame (own, other) of span{h_c, h_{1-c}} and the logit
// difference direction d = w_{1-c} - w_c expressed in it.
struct HalfFrame {
  Vector e_own;
  Vector e_other;
  double a = 0.0;  // ||h_c|| = ||h_{1-c}||
  double dx = 0.0;
  double dy = 0.0;
};

HalfFrame frame(const MdProblem& p, int c) {
  HalfFrame fr;
  const Vector own = p.h(c);
  const Vector other = p.h(1 - c);
  fr.a = own.norm();
  fr.e_own = own / fr.a;
  fr.e_other = other / other.norm();
  const Vector d = p.w(1 - c) - p.w(c);
  fr.dx = d.dot(fr.e_own);
  fr.dy = d.dot(fr.e_other);
  return fr;
}

double frame_value(const MdProblem& p, const HalfFrame& fr, double x, double y) {
  const double t = fr.dx * x + fr.dy * y;
  return softplus(t) - 0.5 * p.alpha * t + p.lambda * (x * x + y * y);
}

void check_problem(const MdProblem& p) {
  if (p.nc.N != 2 || p.nc.K != 1)
    throw std::invalid_argument("memorization-dilation model needs N = 2, K = 1");
  if (!(p.eta > 0.0 && p.eta < 1.0)) throw std::domain_error("eta must lie in (0,1)");
  if (!(p.c_md > 0.0)) throw std::domain_error("c_md must be positive");
  if (!(p.lambda > 0.0)) throw std::domain_error("lambda must be positive");
  if (!(p.alpha >= 0.0 && p.alpha < 1.0)) throw std::domain_error("alpha must lie in [0,1)");
  if (p.quad_points < 3) throw std::invalid_argument("quad_points must be >= 3");
  if (!p.nc.is_feasible()) throw std::invalid_argument("H must be entrywise nonnegative");
  const double n1 = p.nc.H.col(0).norm();
  const double n2 = p.nc.H.col(1).norm();
  if (!(n1 > 0.0) || std::abs(n1 - n2) > 1e-9 * n1 ||
      std::abs(p.nc.H.col(0).dot(p.nc.H.col(1))) > 1e-9 * n1 * n2)
    throw std::invalid_argument("h_1, h_2 must be nonzero, orthogonal and equinorm");
}

}  // namespace

std::string to_string(NoiseKind kind) {
  return kind == NoiseKind::kTwoPoint ? "two-point" : "circle";
}

NoiseKind parse_noise_kind(const std::string& text) {
  if (text == "two-point") return NoiseKind::kTwoPoint;
  if (text == "circle") return NoiseKind::kUniformCircle;
  throw std::invalid_argument("unknown noise distribution '" + text + "'");
}

MdProblem make_md_problem(ModelParams nc, double alpha, double lambda, double eta,
                          double c_md, NoiseDistribution noise) {
  MdProblem p;
  p.nc = std::move(nc);
  p.alpha = alpha;
  p.lambda = lambda;
  p.eta = eta;
  p.c_md = c_md;
  p.noise = std::move(noise);
  check_problem(p);
  return p;
}

MdProblem make_md_problem(const LossParams& lp, double eta, double c_md,
                          NoiseDistribution noise, int M) {
  lp.validate();
  // l_1 + l_2 + lambda_W ||W||^2 + lambda_H ||H||^2 is twice the averaged
  // problem with halved weight decay.
  const LossParams half{lp.alpha, lp.lambda_w / 2.0, lp.lambda_h / 2.0};
  const ClosedForm cf = closed_form_minimizer(2, 1, half);
  return make_md_problem(construct_nc_config(2, 1, M, cf.w_norm, cf.h_norm), lp.alpha,
                         lp.lambda_h, eta, c_md, std::move(noise));
}

double r_max(const MdProblem& p) {
  const double g = p.gap();
  return p.eta * g * g / p.c_md;
}

double constraint_radius(const MdProblem& p, double r) {
  return p.c_md * r / (p.eta * p.gap());
}

double half_objective(const MdProblem& p, int c, const Eigen::Ref<const Vector>& u) {
  return ls_loss(p.nc.W, u, c, p.alpha) + p.lambda * u.squaredNorm();
}

std::pair<double, double> search_arc(const MdProblem& p, double r) {
  const double R = constraint_radius(p, r);
  const double a = p.h(0).norm();
  const double lo = R <= a ? -kPi / 2 : -std::asin(a / R);
  const double hi = r >= r_max(p) / std::numbers::sqrt2 ? -kPi / 4 : kPi / 2;
  return {lo, std::max(lo, hi)};
}

HalfSolution solve_half(const MdProblem& p, int c, double r) {
  if (c != 0 && c != 1) throw std::out_of_range("class must be 0 or 1");
  if (r < 0.0) throw std::domain_error("dilation must be nonnegative");
  HalfSolution out;
  const double rm = r_max(p);
  if (r >= rm) {
    out.u = p.h(c);
    out.value = half_objective(p, c, out.u);
    return out;
  }
  const HalfFrame fr = frame(p, c);
  const double R = constraint_radius(p, r);
  out.constraint_active = true;
  auto point = [&](double th) {
    return std::pair{std::max(0.0, R * std::cos(th)), std::max(0.0, fr.a + R * std::sin(th))};
  };
  auto value = [&](double th) {
    const auto [x, y] = point(th);
    return frame_value(p, fr, x, y);
  };
  if (R > 0.0) {
    const auto [lo, hi] = search_arc(p, r);
    out.theta = scan_and_refine(value, lo, hi, p.quad_points, 1e-13);
  } else {
    out.theta = 0.0;
  }
  const auto [x, y] = point(out.theta);
  out.u = x * fr.e_own + y * fr.e_other;
  out.value = half_objective(p, c, out.u);
  return out;
}

double g_eval(const MdProblem& p, double r) {
  return solve_half(p, 0, r).value + solve_half(p, 1, r).value;
}

std::vector<std::pair<Vector, double>> noise_support(const MdProblem& p) {
  std::vector<std::pair<Vector, double>> support;
  if (p.noise.kind == NoiseKind::kTwoPoint) {
    Vector u = p.noise.direction ? *p.noise.direction : Vector(p.w(1) - p.w(0));
    if (u.size() != p.nc.M) throw std::invalid_argument("noise direction has wrong dimension");
    const double n = u.norm();
    if (!(n > 0.0)) throw std::invalid_argument("noise direction must be nonzero");
    u /= n;
    support.emplace_back(u, 0.5);
    support.emplace_back(-u, 0.5);
  } else {
    if (p.noise.nodes < 3) throw std::invalid_argument("circle needs >= 3 nodes");
    const Vector e1 = p.h(0).normalized();
    const Vector e2 = p.h(1).normalized();
    const double wgt = 1.0 / p.noise.nodes;
    for (int j = 0; j < p.noise.nodes; ++j) {
      const double phi = 2.0 * kPi * j / p.noise.nodes;
      support.emplace_back(std::cos(phi) * e1 + std::sin(phi) * e2, wgt);
    }
  }
  return support;
}

double f_eval(const MdProblem& p, double r) {
  const auto support = noise_support(p);
  double total = 0.0;
  for (int c = 0; c < 2; ++c) {
    const Vector h = p.h(c);
    for (const auto& [v, wgt] : support) {
      const Vector z = h + r * v;
      total += wgt * (ls_loss(p.nc.W, z, c, p.alpha) + p.lambda * z.squaredNorm());
    }
  }
  return total;
}

double md_risk(const MdProblem& p, double r) {
  return f_eval(p, r) + p.eta * g_eval(p, r);
}

MdSolution solve_r(const MdProblem& p, int grid, double rel_tol) {
  MdSolution sol;
  sol.r_max = r_max(p);
  sol.gap = p.gap();
  auto risk = [&](double r) { return md_risk(p, r); };
  sol.r_star = scan_and_refine(risk, 0.0, sol.r_max, grid, rel_tol * sol.r_max);
  const HalfSolution u1 = solve_half(p, 0, sol.r_star);
  const HalfSolution u2 = solve_half(p, 1, sol.r_star);
  sol.u1 = u1.u;
  sol.u2 = u2.u;
  sol.constraint_active = {u1.constraint_active, u2.constraint_active};
  sol.risk = f_eval(p, sol.r_star) + p.eta * (u1.value + u2.value);
  sol.normalized_dilation = sol.r_star / sol.gap;
  sol.memorization = p.eta * ((p.h(1) - sol.u1).norm() + (p.h(0) - sol.u2).norm());
  return sol;
}

AssumptionReport assumption_report(const LossParams& lp_ce, const LossParams& lp_ls,
                                   double eta, double c_md) {
  const MdProblem ce = make_md_problem(lp_ce, eta, c_md);
  const MdProblem ls = make_md_problem(lp_ls, eta, c_md);
  AssumptionReport rep;
  rep.gamma = ce.nc.H.norm() / ls.nc.H.norm();
  rep.c_tilde = c_md / (std::numbers::sqrt2 * ce.gap());
  const double slack = rep.c_tilde * (1.0 - 1.0 / rep.gamma);
  rep.eta_bound = slack > 0.0 ? slack * slack : 0.0;
  rep.alpha_condition = lp_ls.alpha > 4.0 * std::sqrt(lp_ls.lambda_w * lp_ls.lambda_h);
  rep.eta_condition = std::sqrt(eta) < slack;
  rep.c_prime = c_prime(ce);
  rep.c_prime_ls = c_prime(ls);
  return rep;
}

Comparison compare_ce_ls(const LossParams& lp_ce, const LossParams& lp_ls, double eta,
                         double c_md, const NoiseDistribution& noise) {
  Comparison cmp;
  cmp.report = assumption_report(lp_ce, lp_ls, eta, c_md);
  cmp.ce = solve_r(make_md_problem(lp_ce, eta, c_md, noise));
  cmp.ls = solve_r(make_md_problem(lp_ls, eta, c_md, noise));
  cmp.theorem2_holds = cmp.ce.normalized_dilation > cmp.ls.normalized_dilation;
  return cmp;
}

namespace {

double curvature_term(const MdProblem& p) {
  const Vector d = p.w(1) - p.w(0);
  const double s = d.dot(p.h(0));
  const double es = std::exp(s);
  return es * d.squaredNorm() / (2.0 * (1.0 + es) * (1.0 + es));
}

}  // namespace

double growth_constant_g(const MdProblem& p) {
  const double g = p.gap();
  return (curvature_term(p) + 2.0 * p.lambda) * p.c_md * p.c_md / (g * g);
}

double growth_constant_f(const MdProblem& p) {
  return curvature_term(p) + p.lambda;
}

double c_prime(const MdProblem& p) {
  return std::numbers::sqrt2 * p.gap() / p.c_md;
}

std::pair<double, double> displacement_band(const MdProblem& p, double r) {
  const double scale = (r_max(p) - r) / p.eta;
  const double base = p.c_md / p.gap();
  return {base * scale, 2.0 * std::numbers::sqrt2 * base * scale};
}

std::pair<double, double> dilation_band(const MdProblem& p) {
  const double rm = r_max(p);
  return {rm * (1.0 - c_prime(p) * std::sqrt(p.eta)), rm};
}

}  // namespace ncollapse
