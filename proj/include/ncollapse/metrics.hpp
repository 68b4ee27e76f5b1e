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

struct Covariances {
  Matrix within;   // Sigma_W, M x M
  Matrix between;  // Sigma_B, M x M
};

/// Within-class scatter averaged over all samples of the split and
/// between-class scatter of the class means around their mean.
Covariances covariances(const EmbeddingSet& set, Split split, LabelSource source);

/// Moore-Penrose inverse of a symmetric PSD matrix. Eigenvalues below
/// `rel_cutoff` times the largest are treated as zero.
Matrix psd_pseudo_inverse(const Matrix& sym, double rel_cutoff = 1e-10);

/// (1/N) trace(Sigma_W Sigma_B^+). Returns +inf when Sigma_B vanishes but
/// Sigma_W does not, and 0 when both vanish.
double nc1_metric(const Covariances& cov, int num_classes);
double nc1_metric(const EmbeddingSet& set, Split split, LabelSource source);

/// Mean over classes of (1/K_n) sum_k ||h_n^(k) - h_n||^2.
double variability_collapse(const EmbeddingSet& set, Split split, LabelSource source);

struct Memorization {
  double total = 0.0;  // sum of distances
  Eigen::Index corrupted_count = 0;
  double per_sample() const {
    return corrupted_count ? total / static_cast<double>(corrupted_count) : 0.0;
  }
};

/// Sum over corrupted training samples of ||h - h*_n||, n being the sample's
/// true class and h*_n that class's test mean (rows of `test_means`).
Memorization memorization(const EmbeddingSet& set, const Matrix& test_means);
Memorization memorization(const EmbeddingSet& set, const ClassStats& test_stats);

/// Distances of a (W,H) pair from an NC configuration. Every deviation is
/// nonnegative and vanishes on an exact configuration.
struct NcReport {
  double nc1 = 0.0;
  double variability_collapse = 0.0;
  double equinorm_dev = 0.0;
  double orthogonality_dev = 0.0;
  double negativity_dev = 0.0;
  double duality_dev = 0.0;
  double duality_constant = 0.0;  // least-squares C in w_n ~ C P h_n
  double etf_angle_dev = 0.0;
  double self_duality_dev = 0.0;
  double ncc_agreement = 1.0;

  /// Largest deviation among the geometric fields (ncc enters as 1 - agreement).
  double max_deviation() const;
  bool accepts(double tol) const { return max_deviation() <= tol; }
};

/// Class-mean geometry only: equinorm, orthogonality, nonnegativity and
/// centered-ETF angles. Used when no classifier is available.
struct MeanGeometry {
  double equinorm_dev = 0.0;
  double orthogonality_dev = 0.0;
  double negativity_dev = 0.0;
  double etf_angle_dev = 0.0;
};
MeanGeometry mean_geometry(const Matrix& class_means);

/// Component of `v` orthogonal to `direction` (v itself if direction == 0).
Vector project_orthogonal(const Vector& v, const Vector& direction);

NcReport nc_config_report(const ModelParams& params);

}  // namespace ncollapse
