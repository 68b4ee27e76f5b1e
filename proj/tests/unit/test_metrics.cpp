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
#include "ncollapse/metrics.hpp"
#include "oracles.hpp"

namespace ncollapse {
namespace {

using testing::random_rotation;

EmbeddingSet make_set(const Matrix& features, std::vector<int> labels, int N,
                      Split split = Split::kTrain) {
  EmbeddingSet set;
  set.features = features;
  set.true_label = labels;
  set.observed_label = std::move(labels);
  set.corrupted.assign(static_cast<std::size_t>(features.rows()), false);
  set.split.assign(static_cast<std::size_t>(features.rows()), split);
  set.num_classes = N;
  return set;
}

TEST(PseudoInverse, PenroseConditions) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int rank : {1, 2, 4}) {
    Matrix B(5, rank);
    for (Eigen::Index i = 0; i < B.size(); ++i) B.data()[i] = g(rng);
    const Matrix A = B * B.transpose();
    const Matrix P = psd_pseudo_inverse(A);
    EXPECT_TRUE((A * P * A).isApprox(A, 1e-10));
    EXPECT_TRUE((P * A * P).isApprox(P, 1e-10));
    EXPECT_TRUE((A * P).transpose().isApprox(A * P, 1e-10));
    EXPECT_TRUE((P * A).transpose().isApprox(P * A, 1e-10));
  }
  EXPECT_TRUE(psd_pseudo_inverse(Matrix::Zero(3, 3)).isZero());
}

TEST(PseudoInverse, CutoffDropsTinyDirections) {
  Matrix A = Matrix::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = 1e-12;
  const Matrix P = psd_pseudo_inverse(A);
  EXPECT_NEAR(P(0, 0), 1.0, 1e-14);
  EXPECT_EQ(P(1, 1), 0.0);
  EXPECT_NEAR(psd_pseudo_inverse(A, 1e-14)(1, 1), 1e12, 1e-2);
}

TEST(Nc1, RankOneClosedForm) {
  // Means at +-e1, every within-class offset is +-(eps, delta). Sigma_B is
  // diag(1, 0), so only eps survives the pseudo-inverse.
  for (double eps : {0.1, 0.5}) {
    for (double delta : {0.0, 0.3, 2.0}) {
      Matrix f(4, 2);
      f << 1 + eps, delta, 1 - eps, -delta, -1 + eps, delta, -1 - eps, -delta;
      const EmbeddingSet set = make_set(f, {0, 0, 1, 1}, 2);
      EXPECT_NEAR(nc1_metric(set, Split::kTrain, LabelSource::kTrue), eps * eps / 2, 1e-14);
    }
  }
}

TEST(Nc1, Sentinels) {
  Matrix collapsed(4, 2);
  collapsed << 1, 0, 1, 0, 0, 1, 0, 1;
  EXPECT_EQ(nc1_metric(make_set(collapsed, {0, 0, 1, 1}, 2), Split::kTrain, LabelSource::kTrue),
            0.0);
  Matrix same_means(4, 2);
  same_means << 1, 0, -1, 0, 1, 0, -1, 0;
  EXPECT_TRUE(std::isinf(
      nc1_metric(make_set(same_means, {0, 0, 1, 1}, 2), Split::kTrain, LabelSource::kTrue)));
}

TEST(Nc1, RotationAndScaleInvariant) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    const int N = 3, M = 5, per = 6;
    Matrix f(N * per, M);
    std::vector<int> labels;
    for (int i = 0; i < N * per; ++i) {
      labels.push_back(i / per);
      for (int j = 0; j < M; ++j) f(i, j) = g(rng) + 3.0 * (j == i / per);
    }
    const double base = nc1_metric(make_set(f, labels, N), Split::kTrain, LabelSource::kTrue);
    const Matrix Q = random_rotation(rng, M);
    const double scale = 0.01 + 10.0 * trial;
    const double moved =
        nc1_metric(make_set(scale * f * Q.transpose(), labels, N), Split::kTrain, LabelSource::kTrue);
    EXPECT_NEAR(moved, base, 1e-8 * base);
  }
}

TEST(Variability, HandComputed) {
  Matrix f(5, 1);
  f << 0, 2, 10, 11, 12;
  const EmbeddingSet set = make_set(f, {0, 0, 1, 1, 1}, 2);
  // class 0: mean 1, mean sq dev 1; class 1: mean 11, mean sq dev 2/3
  EXPECT_NEAR(variability_collapse(set, Split::kTrain, LabelSource::kTrue),
              (1.0 + 2.0 / 3.0) / 2.0, 1e-14);
}

TEST(Memorization, DistanceToTrueTestMean) {
  Matrix f(6, 2);
  f << 3, 4,    // corrupted train, true class 0
      1, 0,     // clean train
      0, 0,     // corrupted train, true class 1
      9, 9,     // corrupted test: ignored
      0, 0,     // test class 0
      0, 2;     // test class 1
  EmbeddingSet set = make_set(f, {0, 0, 1, 0, 0, 1}, 2);
  set.corrupted = {true, false, true, true, false, false};
  set.split = {Split::kTrain, Split::kTrain, Split::kTrain, Split::kTest, Split::kTest,
               Split::kTest};
  set.observed_label = {1, 0, 0, 1, 0, 1};
  const ClassStats test = class_stats(set, Split::kTest, LabelSource::kTrue);
  const Memorization mem = memorization(set, test);
  // test means: class 0 = ((9,9)+(0,0))/2 = (4.5,4.5), class 1 = (0,2)
  const double expect = std::hypot(3 - 4.5, 4 - 4.5) + 2.0;
  EXPECT_NEAR(mem.total, expect, 1e-14);
  EXPECT_EQ(mem.corrupted_count, 2);
  EXPECT_NEAR(mem.per_sample(), expect / 2, 1e-14);
  EXPECT_THROW(memorization(set, Matrix::Zero(1, 2)), std::invalid_argument);
}

TEST(Memorization, ZeroWithoutCorruption) {
  Matrix f(4, 2);
  f << 1, 0, 0, 1, 1, 0, 0, 1;
  EmbeddingSet set = make_set(f, {0, 1, 0, 1}, 2);
  set.split = {Split::kTrain, Split::kTrain, Split::kTest, Split::kTest};
  const Memorization mem = memorization(set, class_stats(set, Split::kTest, LabelSource::kTrue));
  EXPECT_EQ(mem.total, 0.0);
  EXPECT_EQ(mem.per_sample(), 0.0);
}

TEST(NcReport, ConstructedConfigurationIsExact) {
  for (int N : {2, 3, 6}) {
    for (int K : {1, 4}) {
      const NcReport r = nc_config_report(construct_nc_config(N, K, N + 2, 2.0, 3.0));
      EXPECT_LE(r.max_deviation(), 1e-9) << "N=" << N << " K=" << K;
      EXPECT_TRUE(r.accepts(1e-9));
      EXPECT_GT(r.duality_constant, 0.0);
    }
  }
}

TEST(NcReport, DetectsViolations) {
  const ModelParams base = construct_nc_config(3, 2, 3, 2.0, 3.0);

  ModelParams neg = base;
  neg.H(1, 0) = -0.1;
  EXPECT_NEAR(nc_config_report(neg).negativity_dev, 0.1, 1e-15);
  EXPECT_FALSE(nc_config_report(neg).accepts(1e-3));

  ModelParams spread = base;
  spread.H(2, 0) += 0.2;
  spread.H(2, 1) -= 0.2;
  const NcReport rs = nc_config_report(spread);
  EXPECT_GT(rs.variability_collapse, 0.0);
  EXPECT_GT(rs.nc1, 0.0);

  ModelParams tilted = base;
  tilted.W(0, 2) += 0.3;
  EXPECT_GT(nc_config_report(tilted).duality_dev, 1e-2);

  ModelParams unequal = base;
  unequal.H.col(0) *= 2.0;
  unequal.H.col(1) *= 2.0;
  const NcReport ru = nc_config_report(unequal);
  EXPECT_NEAR(ru.equinorm_dev, 0.5, 1e-12);
}

TEST(MeanGeometry, SimplexAngles) {
  const Matrix means = Matrix::Identity(4, 4);
  const MeanGeometry g = mean_geometry(means);
  EXPECT_NEAR(g.etf_angle_dev, 0.0, 1e-15);
  EXPECT_NEAR(g.orthogonality_dev, 0.0, 1e-15);
  Matrix skew = means;
  skew(0, 1) = 0.5;
  EXPECT_GT(mean_geometry(skew).orthogonality_dev, 0.1);
}

TEST(ProjectOrthogonal, RemovesComponent) {
  Vector v(3), d(3);
  v << 1, 2, 3;
  d << 0, 0, 2;
  EXPECT_TRUE(project_orthogonal(v, d).isApprox(Vector((Vector(3) << 1, 2, 0).finished())));
  EXPECT_TRUE(project_orthogonal(v, Vector::Zero(3)).isApprox(v));
}

}  // namespace
}  // namespace ncollapse
