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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ncollapse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a feature CSV cannot be parsed. `line()` is 1-based and
/// counts the header as line 1.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class Split { kTrain, kTest };
enum class LabelSource { kTrue, kObserved };

std::string to_string(Split split);
Split parse_split(const std::string& text);
std::string to_string(LabelSource source);
LabelSource parse_label_source(const std::string& text);

/// Labeled feature vectors. Labels are 0-based in memory and 1-based on disk.
struct EmbeddingSet {
  Matrix features;  // S x M, one sample per row
  std::vector<int> true_label;
  std::vector<int> observed_label;
  std::vector<bool> corrupted;
  std::vector<Split> split;
  int num_classes = 0;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  /// Throws std::invalid_argument if column lengths disagree, a label is out
  /// of [0, num_classes), num_classes < 2 or the feature dimension is 0.
  void validate() const;
};

/// Layer-peeled variables. Columns of H are grouped class-major: class 0's
/// K samples, then class 1's, and so on.
struct ModelParams {
  Matrix W;  // N x M
  Matrix H;  // M x (N*K)
  int N = 0;
  int K = 0;
  int M = 0;

  ModelParams() = default;
  ModelParams(Matrix w, Matrix h, int n, int k);

  auto feature(int n, int k) const { return H.col(n * K + k); }
  auto feature(int n, int k) { return H.col(n * K + k); }
  auto weight(int n) const { return W.row(n); }

  /// Mean of the K feature columns of class n.
  Vector class_mean(int n) const;
  Matrix class_means() const;  // N x M

  bool is_feasible() const { return H.size() == 0 || H.minCoeff() >= 0.0; }
};

struct ClassStats {
  Matrix class_means;  // N x M
  Vector global_mean;  // M, unweighted mean of class means
  std::vector<Eigen::Index> counts;
};

/// Reads the feature CSV
/// `true_label,observed_label,corrupted,split,f0,...,f{M-1}`.
/// If `num_classes` is empty the class count is the largest label seen.
EmbeddingSet load_embeddings(const std::filesystem::path& path,
                             std::optional<int> num_classes = std::nullopt);
EmbeddingSet parse_embeddings(std::istream& in,
                              std::optional<int> num_classes = std::nullopt);

/// Writes the same schema with shortest round-trip float formatting, so a
/// save/load cycle reproduces every feature bit for bit.
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);
void write_embeddings(const EmbeddingSet& set, std::ostream& out);

struct Corruption {
  std::vector<int> observed;
  std::vector<bool> corrupted;
};

/// Flags each entry independently with probability eta and redraws flagged
/// labels uniformly from [0, num_classes). The redraw may return the true
/// label; the flag records the redraw event either way.
Corruption corrupt_labels(const std::vector<int>& labels, int num_classes,
                          double eta, std::uint64_t seed);

/// Per-class means over the samples in `split`, grouped by `source` labels.
/// Throws std::invalid_argument naming the first empty class.
ClassStats class_stats(const EmbeddingSet& set, Split split,
                       LabelSource source);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

}  // namespace ncollapse
