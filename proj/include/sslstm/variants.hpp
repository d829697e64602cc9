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

// Delay and inverse training strategies.
//
// Both are pure data transforms around an unchanged network. The delay
// model is trained so that the output at input step s predicts the label of
// step s - delta; the inverse model sees every recording reversed in time.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sslstm/data.hpp"
#include "sslstm/numcore.hpp"

namespace sslstm {

/// Per-timestamp class probabilities for one recording.
struct ProbSeries {
  Matrix probs;                     // T x C
  std::vector<std::uint8_t> valid;  // length T

  Index length() const { return probs.rows(); }
  Index classes() const { return probs.cols(); }
  Index valid_count() const;

  friend bool operator==(const ProbSeries&, const ProbSeries&) = default;
};

/// Row-wise argmax, first maximum on ties.
std::vector<int> argmax_labels(const ProbSeries& p);

/// Rounds half away from zero.
Index delta_to_samples(double delta_seconds, double sample_rate);

struct DelaySpec {
  double delta_seconds = 0.0;
  double sample_rate = 0.0;

  Index delta_samples() const { return delta_to_samples(delta_seconds, sample_rate); }
};

enum class VariantKind { standard, delay, inverse };

struct Variant {
  VariantKind kind = VariantKind::standard;
  Index delta = 0;  // samples; delay only

  static Variant standard() { return {}; }
  static Variant delay(Index delta_samples) { return {VariantKind::delay, delta_samples}; }
  static Variant inverse() { return {VariantKind::inverse, 0}; }

  friend bool operator==(const Variant&, const Variant&) = default;
};

std::string variant_name(VariantKind kind);  // "standard", "delay", "inverse"
VariantKind parse_variant(const std::string& name);

struct DelayedTargets {
  std::vector<int> targets;
  std::vector<std::uint8_t> mask;
};

/// targets[s] = labels[s - delta] for s >= delta; the first delta steps are
/// masked. Throws ArgumentError unless 0 <= delta < T.
DelayedTargets delay_targets(const std::vector<int>& labels, Index delta);

/// Maps raw outputs (row s = input step s) onto timestamps t = s - delta.
/// The last delta timestamps have no prediction and come back invalid with
/// zero rows.
ProbSeries realign_delayed(const ProbSeries& raw, Index delta);

Recording invert_recording(const Recording& r);
ProbSeries uninvert_probs(const ProbSeries& p);

/// Training sequence for `rec` under a variant. Inverse variants expect the
/// caller to pass the already inverted recording.
TrainSequence variant_sequence(const Recording& rec, const Variant& v);

struct FusionAlignment {
  Matrix mean;                          // T x C, mean over valid members; zero where none
  std::vector<int> counts;              // valid members per timestamp
  std::vector<std::uint8_t> all_valid;  // every member valid
  std::vector<std::uint8_t> any_valid;
};

/// Throws ShapeError on differing T or C and ArgumentError on an empty list.
FusionAlignment align_for_fusion(const std::vector<ProbSeries>& series);

}  // namespace sslstm
