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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ncollapse/lpm_solver.hpp"
#include "oracles.hpp"

namespace ncollapse {
namespace {

using testing::mp_closed_form;

TEST(ClosedForm, MatchesHighPrecisionOracle) {
  for (int N : {2, 3, 4, 10}) {
    for (int K : {1, 2, 5}) {
      for (double alpha : {0.0, 0.1, 0.3}) {
        for (double lw : {2.5e-4, 2.5e-3}) {
          const double lh = 2.0 * lw;
          const LossParams lp{alpha, lw, lh};
          const ClosedForm cf = closed_form_minimizer(N, K, lp);
          const auto mp = mp_closed_form(N, K, alpha, lw, lh);
          EXPECT_NEAR(cf.w_norm, mp.w_norm, 1e-12 * mp.w_norm);
          EXPECT_NEAR(cf.h_norm, mp.h_norm, 1e-12 * mp.h_norm);
          EXPECT_NEAR(cf.objective_at_min, mp.objective, 1e-12);
        }
      }
    }
  }
}

TEST(ClosedForm, TwoClassExamples) {
  const LossParams ce{0.0, 0.0025, 0.0025};
  const ClosedForm a = closed_form_minimizer(2, 1, ce);
  EXPECT_EQ(a.beta, 0.0);
  EXPECT_EQ(a.t0, -std::numeric_limits<double>::infinity());
  EXPECT_NEAR(a.w_norm, 2.6444, 5e-5);
  EXPECT_NEAR(a.h_norm, 2.6444, 5e-5);

  const LossParams ls{0.1, 0.0025, 0.0025};
  const ClosedForm b = closed_form_minimizer(2, 1, ls);
  EXPECT_NEAR(b.beta, 0.05, 1e-15);
  EXPECT_NEAR(b.w_norm, 1.9916, 5e-5);
  EXPECT_NEAR(b.h_norm, 1.9916, 5e-5);
}

TEST(ClosedForm, WeakerConstantNormsAreNotOptimal) {
  // Plugging 1/sqrt(K(N-1)) into the same stationarity condition reproduces
  // the norms 2.3007 and 1.6864, but collapsed pairs at those norms have a
  // strictly larger objective than the ones returned here.
  for (double alpha : {0.0, 0.1}) {
    const LossParams lp{alpha, 0.0025, 0.0025};
    const auto weak = mp_closed_form(2, 1, alpha, 0.0025, 0.0025, 1.0);
    EXPECT_NEAR(weak.w_norm, alpha == 0.0 ? std::sqrt(std::log(199.0)) : 1.6864, 5e-5);
    const ClosedForm cf = closed_form_minimizer(2, 1, lp);
    EXPECT_LT(cf.objective_at_min,
              collapsed_objective(2, 1, lp, weak.w_norm, weak.h_norm) - 1e-4);
  }
}

TEST(ClosedForm, BalanceAndRegion) {
  for (int N : {2, 5}) {
    for (int K : {1, 3}) {
      for (double alpha : {0.0, 0.2}) {
        const LossParams lp{alpha, 1e-3, 4e-3};
        const ClosedForm cf = closed_form_minimizer(N, K, lp);
        EXPECT_TRUE(cf.condition_ok);
        EXPECT_NEAR(lp.lambda_w * cf.w_norm * cf.w_norm,
                    lp.lambda_h / K * cf.h_norm * cf.h_norm, 1e-12);
        EXPECT_GT(-cf.c * cf.w_norm * cf.h_norm, cf.t0);
      }
    }
  }
}

TEST(ClosedForm, ScaleOfWeightDecays) {
  const LossParams lp{0.1, 1e-3, 3e-3};
  const ClosedForm base = closed_form_minimizer(3, 2, lp);
  for (double s : {0.1, 4.0}) {
    const ClosedForm moved = closed_form_minimizer(3, 2, {0.1, 1e-3 * s, 3e-3 / s});
    EXPECT_NEAR(moved.w_norm * moved.h_norm, base.w_norm * base.h_norm, 1e-12);
    EXPECT_NEAR(moved.log_argument, base.log_argument, 1e-12);
  }
}

TEST(ClosedForm, RejectsViolatedHypothesis) {
  EXPECT_FALSE(closed_form_condition(2, {0.9, 0.3, 0.3}));
  EXPECT_THROW(closed_form_minimizer(2, 1, {0.9, 0.3, 0.3}), ConditionError);
  try {
    closed_form_minimizer(3, 1, {0.5, 0.3, 0.3});
    FAIL();
  } catch (const ConditionError& e) {
    EXPECT_NE(std::string(e.what()).find("lambda_W lambda_H"), std::string::npos);
  }
  // hypothesis holds but no nontrivial stationary point exists
  EXPECT_TRUE(closed_form_condition(2, {0.98, 0.01, 0.01}));
  EXPECT_THROW(closed_form_minimizer(2, 1, {0.98, 0.01, 0.01}), ConditionError);
}

TEST(ConstructNc, AxisAlignedExample) {
  const ModelParams p = construct_nc_config(2, 1, 2, 1.0, std::sqrt(2.0));
  EXPECT_NEAR(p.H(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(p.H(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(p.H(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(p.H(1, 1), 1.0, 1e-15);
  const Vector d = (p.W.row(1) - p.W.row(0)).transpose();
  EXPECT_LT(d(0), 0.0);
  EXPECT_NEAR(d(0), -d(1), 1e-15);
}

TEST(ConstructNc, NormsAndCentering) {
  for (int N : {2, 4, 7}) {
    for (int K : {1, 3}) {
      const ModelParams p = construct_nc_config(N, K, N + 3, 1.3, 4.1);
      EXPECT_NEAR(p.W.norm(), 1.3, 1e-12);
      EXPECT_NEAR(p.H.norm(), 4.1, 1e-12);
      EXPECT_LE(p.W.colwise().sum().norm(), 1e-12);
      EXPECT_TRUE(p.is_feasible());
    }
  }
  EXPECT_THROW(construct_nc_config(3, 1, 2, 1.0, 1.0), std::invalid_argument);
}

TEST(ConstructNc, AttainsClosedFormObjective) {
  for (int N : {2, 3, 4}) {
    for (int K : {1, 2}) {
      const LossParams lp{0.1, 2.5e-3, 2.5e-3};
      const ClosedForm cf = closed_form_minimizer(N, K, lp);
      const ModelParams p = construct_nc_config(N, K, N, cf.w_norm, cf.h_norm);
      EXPECT_NEAR(regularized_objective(p, lp), cf.objective_at_min, 1e-9);
    }
  }
}

TEST(ConstructNc, NoRandomPairBeatsItAtMatchedNorms) {
  std::mt19937_64 rng(3);
  const int N = 3, K = 2, M = 3;
  const LossParams lp{0.1, 2.5e-3, 2.5e-3};
  const ClosedForm cf = closed_form_minimizer(N, K, lp);
  const double best = regularized_objective(construct_nc_config(N, K, M, cf.w_norm, cf.h_norm), lp);
  double lowest = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 10000; ++trial) {
    ModelParams p = testing::random_params(rng, N, K, M, 1.0);
    p.W *= cf.w_norm / p.W.norm();
    p.H *= cf.h_norm / p.H.norm();
    lowest = std::min(lowest, regularized_objective(p, lp));
  }
  EXPECT_GT(lowest, best);
}

TEST(SolveLpm, TwoClassExamples) {
  for (double alpha : {0.0, 0.1}) {
    const LossParams lp{alpha, 0.0025, 0.0025};
    const ClosedForm cf = closed_form_minimizer(2, 1, lp);
    const LpmSolution sol = solve_lpm(2, 1, 2, lp);
    EXPECT_TRUE(sol.converged);
    EXPECT_EQ(sol.restarts_used, 5);
    EXPECT_NEAR(sol.params.W.norm(), cf.w_norm, 1e-2 * cf.w_norm);
    EXPECT_NEAR(sol.params.H.norm(), cf.h_norm, 1e-2 * cf.h_norm);
    EXPECT_TRUE(verify_theorem1(sol, cf, lp, 1e-3, 1e-2).ok());
  }
}

TEST(SolveLpm, WideFeatures) {
  const LossParams lp{0.1, 2.5e-3, 2.5e-3};
  const ClosedForm cf = closed_form_minimizer(3, 2, lp);
  const LpmSolution sol = solve_lpm(3, 2, 5, lp);
  const Theorem1Check check = verify_theorem1(sol, cf, lp, 1e-3, 1e-2);
  EXPECT_TRUE(check.ok()) << "max dev " << check.report.max_deviation() << " w err "
                          << check.w_rel_err;
}

TEST(SolveLpm, MonotoneAndFeasible) {
  SolverOptions opts;
  opts.restarts = 2;
  opts.record_history = true;
  const LpmSolution sol = solve_lpm(4, 2, 4, {0.1, 1e-3, 1e-3}, opts);
  ASSERT_GT(sol.history.size(), 10u);
  for (std::size_t i = 1; i < sol.history.size(); ++i)
    EXPECT_LE(sol.history[i], sol.history[i - 1]) << "iterate " << i;
  EXPECT_TRUE(sol.params.is_feasible());
  EXPECT_DOUBLE_EQ(sol.history.back(), sol.objective);
}

TEST(SolveLpm, DeterministicAcrossScheduling) {
  SolverOptions a;
  a.seed = 17;
  SolverOptions b = a;
  b.parallel = false;
  const LpmSolution x = solve_lpm(3, 1, 3, {0.0, 2.5e-3, 2.5e-3}, a);
  const LpmSolution y = solve_lpm(3, 1, 3, {0.0, 2.5e-3, 2.5e-3}, b);
  EXPECT_EQ(x.best_restart, y.best_restart);
  EXPECT_EQ(x.objective, y.objective);
  EXPECT_TRUE(x.params.W == y.params.W);
  EXPECT_TRUE(x.params.H == y.params.H);
}

TEST(SolveLpm, BudgetExhaustion) {
  SolverOptions opts;
  opts.max_iter = 3;
  opts.restarts = 1;
  const LpmSolution sol = solve_lpm(2, 1, 2, {0.0, 2.5e-3, 2.5e-3}, opts);
  EXPECT_FALSE(sol.converged);
  EXPECT_EQ(sol.iterations, 3);
  EXPECT_GT(sol.grad_norm, opts.tol);
}

TEST(SolveLpm, RejectsBadShapes) {
  EXPECT_THROW(solve_lpm(3, 1, 2, {}), std::invalid_argument);
  SolverOptions opts;
  opts.restarts = 0;
  EXPECT_THROW(solve_lpm(2, 1, 2, {}, opts), std::invalid_argument);
}

TEST(VerifyTheorem1, ConstructedAndBroken) {
  const LossParams lp{0.1, 2.5e-3, 2.5e-3};
  const ClosedForm cf = closed_form_minimizer(3, 2, lp);
  ModelParams p = construct_nc_config(3, 2, 3, cf.w_norm, cf.h_norm);
  EXPECT_TRUE(verify_theorem1(p, cf, lp, 1e-6, 1e-6).ok());
  p.H(2, 0) = -1e-3;
  const Theorem1Check bad = verify_theorem1(p, cf, lp, 1e-6, 1e-6);
  EXPECT_FALSE(bad.ok());
  EXPECT_FALSE(bad.geometry_ok);
  EXPECT_GT(bad.report.negativity_dev, 0.0);
}

}  // namespace
}  // namespace ncollapse
