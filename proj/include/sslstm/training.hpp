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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslstm/data.hpp"
#include "sslstm/eval.hpp"
#include "sslstm/network.hpp"
#include "sslstm/variants.hpp"

namespace sslstm {

struct TrainConfig {
  VariantKind variant = VariantKind::standard;
  double delta_seconds = 0.0;  // delay only
  int epochs = 20;
  double learning_rate = 1e-3;
  double dropout_p = 0.5;
  double clip_norm = 10.0;
  HypavConfig hypav = HypavConfig::fixed(1.0, 128);
  std::uint64_t seed = 0;
  Index hidden = 256;
  Index layers = 2;
  MetricMode metric = MetricMode::multiclass;
  double target_specificity = 0.9;

  void validate() const;
  /// Resolves delta against the dataset's sample rate.
  Variant resolve_variant(double sample_rate) const;

  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  /// FNV-1a 64 of the compact JSON form.
  std::uint64_t hash() const;
};

HypavConfig hypav_from_json(const nlohmann::json& j, HypavConfig base = {});
nlohmann::ordered_json hypav_to_json(const HypavConfig& h);

struct AdamState {
  NetworkParams m;
  NetworkParams v;
  std::int64_t step = 0;

  static AdamState zeros(const NetworkDims& dims);
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

double global_norm(const NetworkParams& grads);

/// Rescales grads in place so the global norm is at most max_norm; returns
/// the norm before clipping.
double clip_global_norm(NetworkParams& grads, double max_norm);

/// One bias-corrected Adam update, in place.
void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state, double lr);

struct EpochSnapshot {
  int epoch = 0;  // 1-based
  NetworkParams params;
  double val_score = 0.0;
  double train_loss = 0.0;

  friend bool operator==(const EpochSnapshot&, const EpochSnapshot&) = default;
};

struct TrainResult {
  Variant variant;
  std::vector<EpochSnapshot> snapshots;
  std::size_t best = 0;  // index into snapshots

  const EpochSnapshot& best_snapshot() const { return snapshots.at(best); }
};

using EpochCallback = std::function<void(const EpochSnapshot&)>;

/// Trains on the resolved train split and scores every epoch on the
/// validation split. The dataset is used as given (normalize beforehand).
TrainResult train(const TrainConfig& config, const Dataset& dataset, const SplitSpec& split,
                  const EpochCallback& on_epoch = {});

/// Same, with explicit train and validation recordings.
TrainResult train(const TrainConfig& config, const std::vector<const Recording*>& train_set,
                  const std::vector<const Recording*>& validation_set, const Dataset& catalog,
                  const EpochCallback& on_epoch = {});

/// Inference over whole recordings from a fresh zero state, dropout off.
ProbSeries predict_recording(const NetworkParams& params, const Recording& rec, const Variant& variant);
std::vector<ProbSeries> evaluate_model(const NetworkParams& params, const std::vector<const Recording*>& recordings,
                                       const Variant& variant);

/// Scores a prediction set against its recordings' labels.
MetricsReport score_predictions(const std::vector<ProbSeries>& preds, const std::vector<const Recording*>& recordings,
                                const Dataset& catalog, MetricMode mode = MetricMode::multiclass,
                                double target_specificity = 0.9);

/// Writes `epoch_NNN.sslm` and `epoch_NNN.json` into dir.
void save_snapshot(const EpochSnapshot& snap, std::uint64_t config_hash, const std::string& dir);
EpochSnapshot load_snapshot(const std::string& checkpoint_path);
std::string snapshot_stem(int epoch);

}  // namespace sslstm
