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

#include "ncollapse/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>
#include <string_view>

namespace ncollapse {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

}  // namespace

std::string to_string(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + text + "'");
}

std::string to_string(LabelSource source) {
  return source == LabelSource::kTrue ? "true" : "observed";
}

LabelSource parse_label_source(const std::string& text) {
  if (text == "true") return LabelSource::kTrue;
  if (text == "observed") return LabelSource::kObserved;
  throw std::invalid_argument("unknown label source '" + text + "'");
}

void EmbeddingSet::validate() const {
  const auto s = static_cast<std::size_t>(features.rows());
  if (true_label.size() != s || observed_label.size() != s ||
      corrupted.size() != s || split.size() != s)
    throw std::invalid_argument("embedding set columns have different lengths");
  if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (features.cols() < 1) throw std::invalid_argument("feature dimension is 0");
  for (std::size_t i = 0; i < s; ++i) {
    if (true_label[i] < 0 || true_label[i] >= num_classes ||
        observed_label[i] < 0 || observed_label[i] >= num_classes)
      throw std::invalid_argument("label out of range at sample " +
                                  std::to_string(i));
  }
}

ModelParams::ModelParams(Matrix w, Matrix h, int n, int k)
    : W(std::move(w)), H(std::move(h)), N(n), K(k),
      M(static_cast<int>(W.cols())) {
  if (W.rows() != N || H.rows() != M || H.cols() != N * K)
    throw std::invalid_argument("ModelParams: inconsistent shapes");
}

Vector ModelParams::class_mean(int n) const {
  return H.middleCols(n * K, K).rowwise().mean();
}

Matrix ModelParams::class_means() const {
  Matrix means(N, M);
  for (int n = 0; n < N; ++n) means.row(n) = class_mean(n).transpose();
  return means;
}

EmbeddingSet parse_embeddings(std::istream& in, std::optional<int> num_classes) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  ++line_no;
  const auto header = split_fields(trim(line));
  static constexpr std::string_view kFixed[] = {"true_label", "observed_label",
                                                "corrupted", "split"};
  if (header.size() < 5) throw ParseError(line_no, "header has no feature columns");
  for (std::size_t i = 0; i < 4; ++i) {
    if (trim(header[i]) != kFixed[i])
      throw ParseError(line_no, "expected column '" + std::string(kFixed[i]) + "'");
  }
  for (std::size_t j = 4; j < header.size(); ++j) {
    if (trim(header[j]) != "f" + std::to_string(j - 4))
      throw ParseError(line_no, "expected column 'f" + std::to_string(j - 4) + "'");
  }
  const std::size_t m = header.size() - 4;

  std::vector<double> values;
  EmbeddingSet set;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_fields(body);
    if (fields.size() != m + 4)
      throw ParseError(line_no, "expected " + std::to_string(m + 4) +
                                    " fields, got " + std::to_string(fields.size()));
    int t = 0, o = 0, c = 0;
    if (!parse_number(fields[0], t) || t < 1)
      throw ParseError(line_no, "bad true_label '" + std::string(fields[0]) + "'");
    if (!parse_number(fields[1], o) || o < 1)
      throw ParseError(line_no, "bad observed_label '" + std::string(fields[1]) + "'");
    if (!parse_number(fields[2], c) || (c != 0 && c != 1))
      throw ParseError(line_no, "corrupted must be 0 or 1");
    Split sp;
    const auto tag = trim(fields[3]);
    if (tag == "train") {
      sp = Split::kTrain;
    } else if (tag == "test") {
      sp = Split::kTest;
    } else {
      throw ParseError(line_no, "unknown split tag '" + std::string(tag) + "'");
    }
    for (std::size_t j = 0; j < m; ++j) {
      double v = 0.0;
      if (!parse_number(fields[4 + j], v))
        throw ParseError(line_no, "bad feature value '" + std::string(fields[4 + j]) + "'");
      values.push_back(v);
    }
    set.true_label.push_back(t - 1);
    set.observed_label.push_back(o - 1);
    set.corrupted.push_back(c == 1);
    set.split.push_back(sp);
    if (num_classes && (t > *num_classes || o > *num_classes))
      throw ParseError(line_no, "label exceeds class count " +
                                    std::to_string(*num_classes));
  }

  const auto s = static_cast<Eigen::Index>(set.true_label.size());
  set.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>(
      values.data(), s, static_cast<Eigen::Index>(m));
  if (num_classes) {
    set.num_classes = *num_classes;
  } else {
    int max_label = -1;
    for (Eigen::Index i = 0; i < s; ++i)
      max_label = std::max({max_label, set.true_label[i], set.observed_label[i]});
    set.num_classes = max_label + 1;
  }
  if (set.num_classes < 2) throw ParseError(line_no, "fewer than 2 classes");
  return set;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path,
                             std::optional<int> num_classes) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_embeddings(in, num_classes);
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_embeddings(const EmbeddingSet& set, std::ostream& out) {
  out << "true_label,observed_label,corrupted,split";
  for (Eigen::Index j = 0; j < set.dim(); ++j) out << ",f" << j;
  out << '\n';
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    out << set.true_label[u] + 1 << ',' << set.observed_label[u] + 1 << ','
        << (set.corrupted[u] ? 1 : 0) << ',' << to_string(set.split[u]);
    for (Eigen::Index j = 0; j < set.dim(); ++j)
      out << ',' << format_double(set.features(i, j));
    out << '\n';
  }
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_embeddings(set, out);
}

Corruption corrupt_labels(const std::vector<int>& labels, int num_classes,
                          double eta, std::uint64_t seed) {
  if (!(eta > 0.0 && eta < 1.0))
    throw std::domain_error("corruption probability must lie in (0,1)");
  if (num_classes < 2) throw std::domain_error("need at least 2 classes");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(eta);
  std::uniform_int_distribution<int> draw(0, num_classes - 1);
  Corruption out;
  out.observed.reserve(labels.size());
  out.corrupted.reserve(labels.size());
  for (int label : labels) {
    if (flip(rng)) {
      out.observed.push_back(draw(rng));
      out.corrupted.push_back(true);
    } else {
      out.observed.push_back(label);
      out.corrupted.push_back(false);
    }
  }
  return out;
}

ClassStats class_stats(const EmbeddingSet& set, Split split, LabelSource source) {
  const auto& labels =
      source == LabelSource::kTrue ? set.true_label : set.observed_label;
  const int n_classes = set.num_classes;
  ClassStats stats;
  stats.class_means = Matrix::Zero(n_classes, set.dim());
  stats.counts.assign(static_cast<std::size_t>(n_classes), 0);
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (set.split[u] != split) continue;
    stats.class_means.row(labels[u]) += set.features.row(i);
    ++stats.counts[static_cast<std::size_t>(labels[u])];
  }
  for (int n = 0; n < n_classes; ++n) {
    const auto count = stats.counts[static_cast<std::size_t>(n)];
    if (count == 0)
      throw std::invalid_argument("class " + std::to_string(n + 1) +
                                  " has no " + to_string(split) + " samples");
    stats.class_means.row(n) /= static_cast<double>(count);
  }
  stats.global_mean = stats.class_means.colwise().mean().transpose();
  return stats;
}

}  // namespace ncollapse
