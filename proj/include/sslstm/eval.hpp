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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslstm/variants.hpp"

namespace sslstm {

/// Rows are true classes, columns predictions.
struct ConfusionMatrix {
  int classes = 0;
  std::vector<std::int64_t> counts;  // row-major C x C

  explicit ConfusionMatrix(int c = 0) : classes(c), counts(static_cast<std::size_t>(c) * c, 0) {}
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

  std::int64_t& at(int truth, int pred) { return counts[static_cast<std::size_t>(truth * classes + pred)]; }
  std::int64_t at(int truth, int pred) const { return counts[static_cast<std::size_t>(truth * classes + pred)]; }
  std::int64_t total() const;
  std::int64_t truth_count(int c) const;
  std::int64_t predicted_count(int c) const;

  void merge(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Counts (truth, pred) pairs at valid positions. An empty mask counts all.
ConfusionMatrix confusion(const std::vector<int>& pred, const std::vector<int>& truth,
                          const std::vector<std::uint8_t>& valid, int classes);

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool present = false;  // appears in truth or prediction
};

/// Zero denominators give 0.
ClassScore class_score(const ConfusionMatrix& cm, int c);

/// Macro F1 over classes present in truth or prediction, with per-class
/// F1 = 2TP / (2TP + FP + FN) summed in long double. With exclude_null
/// the null class is dropped from the average. Throws EvaluationError when
/// no class is left to average.
double mean_f1(const ConfusionMatrix& cm, bool exclude_null = false, std::optional<int> null_class = std::nullopt);

double accuracy(const ConfusionMatrix& cm);

struct SensitivityResult {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double threshold = 0.0;  // +inf when nothing may be called positive
};

/// Sweeps thresholds over the distinct scores plus +inf (positive when
/// score >= threshold) and keeps the best sensitivity among thresholds
/// whose specificity reaches the target; ties go to the higher threshold.
SensitivityResult sensitivity_at_specificity(const std::vector<double>& scores, const std::vector<std::uint8_t>& positive,
                                             double target_specificity = 0.9);

enum class MetricMode { multiclass, binary };

struct MetricsReport {
  std::vector<std::string> class_names;
  std::optional<int> null_class;
  ConfusionMatrix cm;
  std::vector<ClassScore> per_class;
  double mean_f1_with_null = 0.0;
  std::optional<double> mean_f1_without_null;
  double accuracy = 0.0;
  std::optional<SensitivityResult> binary;
  std::int64_t evaluated = 0;

  /// The score that ranks snapshots: mean F1 (null included) for multiclass
  /// runs, sensitivity for binary runs.
  double primary(MetricMode mode) const;

  nlohmann::ordered_json to_json() const;
  std::string table() const;
};

/// Metrics over every valid timestamp of every recording. Binary mode uses
/// column 1 of the probabilities as the positive score.
MetricsReport evaluate_series(const std::vector<ProbSeries>& series, const std::vector<const std::vector<int>*>& labels,
                              const std::vector<std::string>& class_names, std::optional<int> null_class,
                              MetricMode mode = MetricMode::multiclass, double target_specificity = 0.9);

}  // namespace sslstm
