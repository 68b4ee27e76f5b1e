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

#include "ncollapse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/SVD>

namespace ncollapse {

namespace {

// Rows of `samples` grouped by `labels` into `means` (N x M).
Covariances scatter(const Matrix& samples, const std::vector<int>& labels,
                    const Matrix& means) {
  const Eigen::Index m = means.cols();
  Covariances cov;
  cov.within = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const Vector d = (samples.row(i) - means.row(labels[static_cast<std::size_t>(i)])).transpose();
    cov.within.noalias() += d * d.transpose();
  }
  if (samples.rows() > 0) cov.within /= static_cast<double>(samples.rows());

  const Vector global = means.colwise().mean().transpose();
  cov.between = Matrix::Zero(m, m);
  for (Eigen::Index n = 0; n < means.rows(); ++n) {
    const Vector d = means.row(n).transpose() - global;
    cov.between.noalias() += d * d.transpose();
  }
  cov.between /= static_cast<double>(means.rows());
  return cov;
}

struct SplitView {
  Matrix samples;
  std::vector<int> labels;
};

SplitView select(const EmbeddingSet& set, Split split, LabelSource source) {
  const auto& labels =
      source == LabelSource::kTrue ? set.true_label : set.observed_label;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < set.size(); ++i)
    if (set.split[static_cast<std::size_t>(i)] == split) rows.push_back(i);
  SplitView view;
  view.samples.resize(static_cast<Eigen::Index>(rows.size()), set.dim());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    view.samples.row(static_cast<Eigen::Index>(r)) = set.features.row(rows[r]);
    view.labels.push_back(labels[static_cast<std::size_t>(rows[r])]);
  }
  return view;
}

double safe_cos(const Vector& a, const Vector& b) {
  const double denom = a.norm() * b.norm();
  return denom > 0.0 ? a.dot(b) / denom : 0.0;
}

Vector unit_or_zero(const Vector& v) {
  const double n = v.norm();
  return n > 0.0 ? Vector(v / n) : Vector::Zero(v.size());
}

}  // namespace

Covariances covariances(const EmbeddingSet& set, Split split, LabelSource source) {
  const ClassStats stats = class_stats(set, split, source);
  const SplitView view = select(set, split, source);
  return scatter(view.samples, view.labels, stats.class_means);
}

Matrix psd_pseudo_inverse(const Matrix& sym, double rel_cutoff) {
  Eigen::JacobiSVD<Matrix> svd(sym, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  if (sigma.size() == 0 || sigma(0) == 0.0) return Matrix::Zero(sym.cols(), sym.rows());
  const double cutoff = rel_cutoff * sigma(0);
  Vector inv = Vector::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > cutoff) inv(i) = 1.0 / sigma(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double nc1_metric(const Covariances& cov, int num_classes) {
  const bool within_zero = cov.within.cwiseAbs().maxCoeff() == 0.0;
  const bool between_zero = cov.between.cwiseAbs().maxCoeff() == 0.0;
  if (within_zero) return 0.0;
  if (between_zero) return std::numeric_limits<double>::infinity();
  const Matrix pinv = psd_pseudo_inverse(cov.between);
  return (cov.within * pinv).trace() / num_classes;
}

double nc1_metric(const EmbeddingSet& set, Split split, LabelSource source) {
  return nc1_metric(covariances(set, split, source), set.num_classes);
}

double variability_collapse(const EmbeddingSet& set, Split split, LabelSource source) {
  const ClassStats stats = class_stats(set, split, source);
  const SplitView view = select(set, split, source);
  Vector per_class = Vector::Zero(set.num_classes);
  for (Eigen::Index i = 0; i < view.samples.rows(); ++i) {
    const int n = view.labels[static_cast<std::size_t>(i)];
    per_class(n) += (view.samples.row(i) - stats.class_means.row(n)).squaredNorm();
  }
  for (int n = 0; n < set.num_classes; ++n)
    per_class(n) /= static_cast<double>(stats.counts[static_cast<std::size_t>(n)]);
  return per_class.mean();
}

Memorization memorization(const EmbeddingSet& set, const Matrix& test_means) {
  Memorization mem;
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (set.split[u] != Split::kTrain || !set.corrupted[u]) continue;
    const int n = set.true_label[u];
    if (n >= test_means.rows())
      throw std::invalid_argument("no test mean for class " + std::to_string(n + 1));
    mem.total += (set.features.row(i) - test_means.row(n)).norm();
    ++mem.corrupted_count;
  }
  return mem;
}

Memorization memorization(const EmbeddingSet& set, const ClassStats& test_stats) {
  return memorization(set, test_stats.class_means);
}

double NcReport::max_deviation() const {
  return std::max({nc1, variability_collapse, equinorm_dev, orthogonality_dev,
                   negativity_dev, duality_dev, etf_angle_dev, self_duality_dev,
                   1.0 - ncc_agreement});
}

Vector project_orthogonal(const Vector& v, const Vector& direction) {
  const double dd = direction.squaredNorm();
  if (dd == 0.0) return v;
  return v - (v.dot(direction) / dd) * direction;
}

MeanGeometry mean_geometry(const Matrix& class_means) {
  const Eigen::Index n_classes = class_means.rows();
  MeanGeometry g;
  const Vector norms = class_means.rowwise().norm();
  const double top = norms.maxCoeff();
  g.equinorm_dev = top > 0.0 ? (top - norms.minCoeff()) / top : 0.0;
  g.negativity_dev = std::max(0.0, -class_means.minCoeff());
  const Vector global = class_means.colwise().mean().transpose();
  const double etf_target = -1.0 / static_cast<double>(n_classes - 1);
  for (Eigen::Index m = 0; m < n_classes; ++m) {
    for (Eigen::Index n = m + 1; n < n_classes; ++n) {
      const Vector hm = class_means.row(m).transpose();
      const Vector hn = class_means.row(n).transpose();
      g.orthogonality_dev = std::max(g.orthogonality_dev, std::abs(safe_cos(hm, hn)));
      g.etf_angle_dev = std::max(
          g.etf_angle_dev, std::abs(safe_cos(hm - global, hn - global) - etf_target));
    }
  }
  return g;
}

NcReport nc_config_report(const ModelParams& params) {
  const int N = params.N;
  const int K = params.K;
  NcReport report;

  const Matrix means = params.class_means();
  const Vector global = means.colwise().mean().transpose();

  Matrix samples(N * K, params.M);
  std::vector<int> labels(static_cast<std::size_t>(N * K));
  double variability = 0.0;
  for (int n = 0; n < N; ++n) {
    double within = 0.0;
    for (int k = 0; k < K; ++k) {
      samples.row(n * K + k) = params.feature(n, k).transpose();
      labels[static_cast<std::size_t>(n * K + k)] = n;
      within += (params.feature(n, k) - means.row(n).transpose()).squaredNorm();
    }
    variability += within / K;
  }
  report.variability_collapse = variability / N;
  report.nc1 = nc1_metric(scatter(samples, labels, means), N);

  const MeanGeometry geometry = mean_geometry(means);
  report.equinorm_dev = geometry.equinorm_dev;
  report.orthogonality_dev = geometry.orthogonality_dev;
  report.etf_angle_dev = geometry.etf_angle_dev;
  report.negativity_dev = params.H.size() ? std::max(0.0, -params.H.minCoeff()) : 0.0;

  // w_n = C P_{h-perp} h_n with one C shared by all classes
  std::vector<Vector> projected;
  double num = 0.0, den = 0.0;
  for (int n = 0; n < N; ++n) {
    projected.push_back(project_orthogonal(means.row(n).transpose(), global));
    num += params.W.row(n).dot(projected.back());
    den += projected.back().squaredNorm();
  }
  const double c = den > 0.0 ? num / den : 0.0;
  report.duality_constant = c;
  for (int n = 0; n < N; ++n) {
    const Vector w = params.W.row(n).transpose();
    const double resid = (w - c * projected[static_cast<std::size_t>(n)]).norm();
    const double wn = w.norm();
    report.duality_dev = std::max(report.duality_dev, wn > 0.0 ? resid / wn : resid);
    const Vector centered = means.row(n).transpose() - global;
    report.self_duality_dev = std::max(
        report.self_duality_dev, (unit_or_zero(centered) - unit_or_zero(w)).norm());
  }

  int agree = 0;
  for (int col = 0; col < N * K; ++col) {
    const Vector u = params.H.col(col);
    Eigen::Index by_classifier = 0, by_center = 0;
    (params.W * u).maxCoeff(&by_classifier);
    (means.rowwise() - u.transpose()).rowwise().squaredNorm().minCoeff(&by_center);
    if (by_classifier == by_center) ++agree;
  }
  report.ncc_agreement = N * K > 0 ? static_cast<double>(agree) / (N * K) : 1.0;
  return report;
}

}  // namespace ncollapse
