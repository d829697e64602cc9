// Copyright 2026 The sslstm Authors.
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

#include "sslstm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace sslstm {

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  ConfusionMatrix cm(static_cast<int>(rows.size()));
  for (int i = 0; i < cm.classes; ++i) {
    if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != cm.classes)
      throw ShapeError("ConfusionMatrix::from_rows: matrix is not square");
    for (int j = 0; j < cm.classes; ++j) cm.at(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return cm;
}

std::int64_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

std::int64_t ConfusionMatrix::truth_count(int c) const {
  std::int64_t n = 0;
  for (int j = 0; j < classes; ++j) n += at(c, j);
  return n;
}

std::int64_t ConfusionMatrix::predicted_count(int c) const {
  std::int64_t n = 0;
  for (int i = 0; i < classes; ++i) n += at(i, c);
  return n;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes != classes) throw ShapeError("ConfusionMatrix::merge: class counts differ");
  for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += other.counts[k];
}

ConfusionMatrix confusion(const std::vector<int>& pred, const std::vector<int>& truth,
                          const std::vector<std::uint8_t>& valid, int classes) {
  if (pred.size() != truth.size() || (!valid.empty() && valid.size() != truth.size()))
    throw ShapeError("confusion: lengths differ (pred " + std::to_string(pred.size()) + ", truth " +
                     std::to_string(truth.size()) + ", valid " + std::to_string(valid.size()) + ")");
  ConfusionMatrix cm(classes);
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (!valid.empty() && !valid[k]) continue;
    if (truth[k] < 0 || truth[k] >= classes || pred[k] < 0 || pred[k] >= classes)
      throw ArgumentError("confusion: label outside [0, " + std::to_string(classes) + ") at position " +
                          std::to_string(k));
    ++cm.at(truth[k], pred[k]);
  }
  return cm;
}

namespace {

/// 2TP / (2TP + FP + FN) in long double; 0 when the denominator is.
long double f1_exact(const ConfusionMatrix& cm, int c) {
  const std::int64_t tp = cm.at(c, c);
  const std::int64_t denom = cm.truth_count(c) + cm.predicted_count(c);
  return denom > 0 ? static_cast<long double>(2 * tp) / static_cast<long double>(denom) : 0.0L;
}

}  // namespace

ClassScore class_score(const ConfusionMatrix& cm, int c) {
  ClassScore s;
  const auto tp = static_cast<double>(cm.at(c, c));
  const auto in_truth = cm.truth_count(c);
  const auto in_pred = cm.predicted_count(c);
  s.present = in_truth > 0 || in_pred > 0;
  s.precision = in_pred > 0 ? tp / static_cast<double>(in_pred) : 0.0;
  s.recall = in_truth > 0 ? tp / static_cast<double>(in_truth) : 0.0;
  s.f1 = static_cast<double>(f1_exact(cm, c));
  return s;
}

double mean_f1(const ConfusionMatrix& cm, bool exclude_null, std::optional<int> null_class) {
  if (exclude_null && !null_class) throw ArgumentError("mean_f1: exclude_null needs a null class");
  long double sum = 0.0L;
  int n = 0;
  for (int c = 0; c < cm.classes; ++c) {
    if (exclude_null && c == *null_class) continue;
    if (cm.truth_count(c) == 0 && cm.predicted_count(c) == 0) continue;
    sum += f1_exact(cm, c);
    ++n;
  }
  if (n == 0) throw EvaluationError("mean_f1: no class present in truth or prediction");
  return static_cast<double>(sum / n);
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw EvaluationError("accuracy: empty confusion matrix");
  std::int64_t diag = 0;
  for (int c = 0; c < cm.classes; ++c) diag += cm.at(c, c);
  return static_cast<double>(diag) / static_cast<double>(total);
}

SensitivityResult sensitivity_at_specificity(const std::vector<double>& scores, const std::vector<std::uint8_t>& positive,
                                             double target_specificity) {
  if (scores.size() != positive.size()) throw ShapeError("sensitivity_at_specificity: lengths differ");
  std::int64_t P = 0, N = 0;
  for (auto p : positive) (p ? P : N) += 1;
  if (P == 0 || N == 0) throw EvaluationError("sensitivity_at_specificity: labels must contain both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Threshold +inf: nothing positive.
  SensitivityResult best{0.0, 1.0, std::numeric_limits<double>::infinity()};
  std::int64_t tp = 0, fp = 0;
  std::size_t k = 0;
  while (k < order.size()) {
    const double thr = scores[order[k]];
    while (k < order.size() && scores[order[k]] == thr) {
      (positive[order[k]] ? tp : fp) += 1;
      ++k;
    }
    const double spec = static_cast<double>(N - fp) / static_cast<double>(N);
    const double sens = static_cast<double>(tp) / static_cast<double>(P);
    if (spec >= target_specificity && sens > best.sensitivity) best = {sens, spec, thr};
  }
  return best;
}

double MetricsReport::primary(MetricMode mode) const {
  if (mode == MetricMode::binary) {
    if (!binary) throw EvaluationError("binary metric requested for a report without one");
    return binary->sensitivity;
  }
  return mean_f1_with_null;
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["evaluated"] = evaluated;
  j["accuracy"] = accuracy;
  j["mean_f1"] = {{"with_null", mean_f1_with_null},
                  {"without_null", mean_f1_without_null ? nlohmann::ordered_json(*mean_f1_without_null) : nullptr}};
  j["per_class"] = nlohmann::ordered_json::array();
  for (int c = 0; c < cm.classes; ++c) {
    const auto& s = per_class[static_cast<std::size_t>(c)];
    j["per_class"].push_back({{"class", class_names[static_cast<std::size_t>(c)]},
                              {"precision", s.precision},
                              {"recall", s.recall},
                              {"f1", s.f1},
                              {"support", cm.truth_count(c)}});
  }
  if (binary)
    j["binary"] = {{"sensitivity", binary->sensitivity},
                   {"specificity", binary->specificity},
                   {"threshold", std::isinf(binary->threshold) ? nlohmann::ordered_json("inf")
                                                                : nlohmann::ordered_json(binary->threshold)}};
  j["confusion"] = nlohmann::ordered_json::array();
  for (int i = 0; i < cm.classes; ++i) {
    auto row = nlohmann::ordered_json::array();
    for (int k = 0; k < cm.classes; ++k) row.push_back(cm.at(i, k));
    j["confusion"].push_back(row);
  }
  return j;
}

std::string MetricsReport::table() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %9s %9s %9s %9s\n", "class", "precision", "recall", "f1", "support");
  os << line;
  for (int c = 0; c < cm.classes; ++c) {
    const auto& s = per_class[static_cast<std::size_t>(c)];
    std::snprintf(line, sizeof line, "%-16s %9.4f %9.4f %9.4f %9lld\n", class_names[static_cast<std::size_t>(c)].c_str(),
                  s.precision, s.recall, s.f1, static_cast<long long>(cm.truth_count(c)));
    os << line;
  }
  std::snprintf(line, sizeof line, "mean F1 (with null)     %.4f\n", mean_f1_with_null);
  os << line;
  if (mean_f1_without_null) {
    std::snprintf(line, sizeof line, "mean F1 (without null)  %.4f\n", *mean_f1_without_null);
    os << line;
  }
  std::snprintf(line, sizeof line, "accuracy                %.4f\n", accuracy);
  os << line;
  if (binary) {
    std::snprintf(line, sizeof line, "sensitivity %.4f at specificity %.4f (threshold %g)\n", binary->sensitivity,
                  binary->specificity, binary->threshold);
    os << line;
  }
  return os.str();
}

MetricsReport evaluate_series(const std::vector<ProbSeries>& series, const std::vector<const std::vector<int>*>& labels,
                              const std::vector<std::string>& class_names, std::optional<int> null_class,
                              MetricMode mode, double target_specificity) {
  if (series.size() != labels.size()) throw ShapeError("evaluate_series: one label vector per series required");
  const int C = static_cast<int>(class_names.size());
  MetricsReport r;
  r.class_names = class_names;
  r.null_class = null_class;
  r.cm = ConfusionMatrix(C);
  std::vector<double> scores;
  std::vector<std::uint8_t> positive;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const ProbSeries& s = series[k];
    if (s.classes() != C) throw ShapeError("evaluate_series: series has " + std::to_string(s.classes()) + " classes, catalog has " + std::to_string(C));
    r.cm.merge(confusion(argmax_labels(s), *labels[k], s.valid, C));
    if (mode == MetricMode::binary) {
      for (Index t = 0; t < s.length(); ++t) {
        if (!s.valid[static_cast<std::size_t>(t)]) continue;
        scores.push_back(s.probs(t, 1));
        positive.push_back((*labels[k])[static_cast<std::size_t>(t)] == 1);
      }
    }
  }
  r.evaluated = r.cm.total();
  if (r.evaluated == 0) throw EvaluationError("evaluate_series: no valid timestamps");
  for (int c = 0; c < C; ++c) r.per_class.push_back(class_score(r.cm, c));
  r.mean_f1_with_null = mean_f1(r.cm);
  if (null_class) {
    try {
      r.mean_f1_without_null = mean_f1(r.cm, true, null_class);
    } catch (const EvaluationError&) {
      r.mean_f1_without_null = 0.0;
    }
  }
  r.accuracy = accuracy(r.cm);
  if (mode == MetricMode::binary) {
    if (C != 2) throw EvaluationError("binary metrics need exactly two classes, got " + std::to_string(C));
    r.binary = sensitivity_at_specificity(scores, positive, target_specificity);
  }
  return r;
}

}  // namespace sslstm
