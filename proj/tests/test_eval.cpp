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

#include <algorithm>

#include "doctest.h"
#include "oracles.hpp"
#include "sslstm/eval.hpp"
#include "test_util.hpp"

using namespace sslstm;
using namespace sslstm::testing;

TEST_CASE("confusion counts valid pairs") {
  const std::vector<int> truth{0, 1, 2, 2, 1};
  const ConfusionMatrix perfect = confusion(truth, truth, {}, 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) CHECK(perfect.at(a, b) == (a == b ? (a == 0 ? 1 : 2) : 0));

  const ConfusionMatrix none = confusion(truth, truth, std::vector<std::uint8_t>(5, 0), 3);
  CHECK(none.total() == 0);

  const ConfusionMatrix cm = confusion({0, 2, 2, 2, 1}, truth, {1, 1, 0, 1, 1}, 3);
  CHECK(cm.at(1, 2) == 1);
  CHECK(cm.at(2, 2) == 1);
  CHECK(cm.total() == 4);
  CHECK(cm.truth_count(1) == 2);
  CHECK(cm.predicted_count(2) == 2);

  CHECK_THROWS_AS(confusion({0, 1}, truth, {}, 3), ShapeError);
  CHECK_THROWS_AS(confusion(truth, truth, {1, 1}, 3), ShapeError);
}

TEST_CASE("mean_f1 hand-computed binary example") {
  const ConfusionMatrix cm = ConfusionMatrix::from_rows({{5, 5}, {0, 10}});
  const ClassScore c0 = class_score(cm, 0), c1 = class_score(cm, 1);
  CHECK(c0.precision == 1.0);
  CHECK(c0.recall == 0.5);
  CHECK(c0.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(c1.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(c1.recall == 1.0);
  CHECK(c1.f1 == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(mean_f1(cm) == 11.0 / 15.0);
}

TEST_CASE("mean_f1 simple cases") {
  CHECK(mean_f1(confusion({0, 1, 2, 1}, {0, 1, 2, 1}, {}, 3)) == 1.0);
  // Class 2 in truth but never predicted contributes 0.
  const ConfusionMatrix cm = confusion({0, 1, 1}, {0, 1, 2}, {}, 3);
  CHECK(class_score(cm, 2).f1 == 0.0);
  CHECK(mean_f1(cm) < 1.0);
  CHECK(mean_f1(ConfusionMatrix::from_rows({{1, 0}, {0, 0}})) == 1.0);
  CHECK_THROWS_AS(mean_f1(ConfusionMatrix(3)), EvaluationError);
  CHECK_THROWS_AS(mean_f1(ConfusionMatrix::from_rows({{4, 0}, {0, 0}}), true, 0), EvaluationError);
  CHECK(mean_f1(ConfusionMatrix::from_rows({{4, 1}, {0, 3}}), true, 0) == doctest::Approx(6.0 / 7.0));
}

TEST_CASE("accuracy examples") {
  CHECK(accuracy(ConfusionMatrix::from_rows({{3, 0}, {0, 4}})) == 1.0);
  CHECK(accuracy(ConfusionMatrix::from_rows({{1, 1}, {1, 1}})) == 0.5);
  CHECK_THROWS_AS(accuracy(ConfusionMatrix(2)), EvaluationError);
}

TEST_CASE("mean_f1 matches a brute-force reference on random cases") {
  auto rng = test_rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int C = static_cast<int>(rng_int(rng, 2, 5));
    const auto n = static_cast<std::size_t>(rng_int(rng, 1, 40));
    std::vector<int> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng_int(rng, 0, C - 1));
      pred[i] = rng_unit(rng) < 0.5 ? truth[i] : static_cast<int>(rng_int(rng, 0, C - 1));
    }
    const ConfusionMatrix cm = confusion(pred, truth, {}, C);
    const double f = mean_f1(cm);
    CHECK(f == brute_mean_f1(pred, truth, C));
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    bool diagonal = true;
    for (int a = 0; a < C; ++a)
      for (int b = 0; b < C; ++b) diagonal = diagonal && (a == b || cm.at(a, b) == 0);
    CHECK((f == 1.0) == diagonal);

    // Order of the pairs does not matter.
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng_int(rng, 0, static_cast<std::int64_t>(i) - 1))]);
    std::vector<int> p2(n), t2(n);
    for (std::size_t i = 0; i < n; ++i) {
      p2[i] = pred[perm[i]];
      t2[i] = truth[perm[i]];
    }
    CHECK(confusion(p2, t2, {}, C) == cm);
  }
}

TEST_CASE("sensitivity_at_specificity examples") {
  const auto sep = sensitivity_at_specificity({0.9, 0.8, 0.7, 0.1, 0.2, 0.3}, {1, 1, 1, 0, 0, 0});
  CHECK(sep.sensitivity == 1.0);
  CHECK(sep.specificity == 1.0);
  CHECK(sep.threshold == 0.7);

  // Every positive is scored below every negative.
  const auto inv = sensitivity_at_specificity({0.1, 0.2, 0.9, 0.8, 0.7, 0.6, 0.5}, {1, 1, 0, 0, 0, 0, 0});
  CHECK(inv.sensitivity == 0.0);
  CHECK(inv.threshold == std::numeric_limits<double>::infinity());

  CHECK_THROWS_AS(sensitivity_at_specificity({0.1, 0.2}, {1, 1}), EvaluationError);
  CHECK_THROWS_AS(sensitivity_at_specificity({0.1, 0.2}, {1}), ShapeError);
}

TEST_CASE("sensitivity_at_specificity matches a brute-force sweep") {
  auto rng = test_rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(rng_int(rng, 2, 40));
    std::vector<double> scores(n);
    std::vector<std::uint8_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = rng_int(rng, 0, 1) ? 1 : 0;
      // Coarse grid so ties happen.
      scores[i] = static_cast<double>(rng_int(rng, 0, 10)) / 10.0 + (pos[i] ? 0.2 : 0.0);
    }
    pos[0] = 1;
    pos[1] = 0;
    const double target = trial % 3 == 0 ? 0.9 : rng_uniform(rng, 0.5, 1.0);
    const auto got = sensitivity_at_specificity(scores, pos, target);
    const auto ref = brute_sensitivity(scores, pos, target);
    CHECK(got.sensitivity == ref.sensitivity);
    CHECK(got.specificity == ref.specificity);
    CHECK(got.threshold == ref.threshold);

    // A positive scored above everything never lowers the result.
    auto s2 = scores;
    auto p2 = pos;
    s2.push_back(*std::max_element(scores.begin(), scores.end()) + 1.0);
    p2.push_back(1);
    CHECK(sensitivity_at_specificity(s2, p2, target).sensitivity >= got.sensitivity);

    // Neither does reordering the pairs change anything.
    std::reverse(s2.begin(), s2.end());
    std::reverse(p2.begin(), p2.end());
    const auto a = sensitivity_at_specificity(s2, p2, target);
    std::rotate(s2.begin(), s2.begin() + 1, s2.end());
    std::rotate(p2.begin(), p2.begin() + 1, p2.end());
    const auto b = sensitivity_at_specificity(s2, p2, target);
    CHECK(a.sensitivity == b.sensitivity);
    CHECK(a.threshold == b.threshold);
  }
}

TEST_CASE("evaluate_series builds both mean-F1 conventions and a JSON report") {
  ProbSeries s;
  s.probs.resize(4, 3);
  s.probs << 0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.8, 0.1;
  s.valid = {1, 1, 1, 0};
  const std::vector<int> labels{0, 1, 1, 2};
  const MetricsReport r = evaluate_series({s}, {&labels}, {"null", "a", "b"}, 0);
  CHECK(r.evaluated == 3);
  CHECK(r.cm.at(1, 2) == 1);
  CHECK(r.mean_f1_with_null == mean_f1(r.cm));
  REQUIRE(r.mean_f1_without_null);
  CHECK(*r.mean_f1_without_null == mean_f1(r.cm, true, 0));
  CHECK(r.primary(MetricMode::multiclass) == r.mean_f1_with_null);
  CHECK_THROWS_AS(r.primary(MetricMode::binary), EvaluationError);

  const auto j = r.to_json();
  CHECK(j["evaluated"] == 3);
  CHECK(j["per_class"].size() == 3);
  CHECK(r.table().find("mean F1") != std::string::npos);

  s.valid = {0, 0, 0, 0};
  CHECK_THROWS_AS(evaluate_series({s}, {&labels}, {"null", "a", "b"}, 0), EvaluationError);
}

TEST_CASE("binary reports carry sensitivity at the target specificity") {
  ProbSeries s;
  s.probs.resize(6, 2);
  s.probs << 0.9, 0.1, 0.8, 0.2, 0.7, 0.3, 0.4, 0.6, 0.2, 0.8, 0.6, 0.4;
  s.valid = std::vector<std::uint8_t>(6, 1);
  const std::vector<int> labels{0, 0, 0, 1, 1, 1};
  const MetricsReport r = evaluate_series({s}, {&labels}, {"normal", "event"}, 0, MetricMode::binary, 0.9);
  REQUIRE(r.binary);
  const auto ref = brute_sensitivity({0.1, 0.2, 0.3, 0.6, 0.8, 0.4}, {0, 0, 0, 1, 1, 1}, 0.9);
  CHECK(r.binary->sensitivity == ref.sensitivity);
  CHECK(r.primary(MetricMode::binary) == r.binary->sensitivity);
  CHECK(r.to_json().contains("binary"));
}
