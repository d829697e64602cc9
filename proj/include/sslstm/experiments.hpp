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

// End-to-end experiment pipelines behind `sslstm experiment`.
//
// Every experiment runs on a synthetic sporadic-event dataset by default.
// With `full_scale` set it reads a dataset manifest and split instead and
// switches to the full-size network recipe.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslstm/data.hpp"
#include "sslstm/ensemble.hpp"
#include "sslstm/training.hpp"

namespace sslstm {

struct ExperimentConfig {
  std::string name;
  bool full_scale = false;

  // Data: synthetic unless a manifest is given.
  SynthConfig synth;
  std::uint64_t data_seed = 1;
  int validation_recordings = 2;  // taken from the end of the synthetic set, before the test ones
  int test_recordings = 2;
  std::optional<std::string> manifest;
  std::optional<SplitSpec> split;
  bool normalize = false;
  int decimate = 1;

  TrainConfig train;                     // base recipe, no HYPAV
  HypavConfig hypav;                     // the randomized strategy
  bool use_hypav = false;                // whether `train` runs use `hypav`
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<double> deltas_seconds;    // delay-sweep rows
  double delta_seconds = 0.0;            // the delay source elsewhere
  int members = 20;
  std::vector<std::string> compositions;

  /// Defaults for a named experiment at desk or full scale.
  static ExperimentConfig defaults(const std::string& name, bool full_scale = false);
  /// Overlays keys present in `j` onto the defaults for `j["name"]` (or `name`).
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& name, bool full_scale);
  nlohmann::ordered_json to_json() const;
  void validate() const;
};

SynthConfig synth_from_json(const nlohmann::json& j, SynthConfig base = {});
nlohmann::ordered_json synth_to_json(const SynthConfig& c);
/// A preset name ("opp", "dg", "pamap2") or an object of selector lists.
SplitSpec split_from_json(const nlohmann::json& j);
nlohmann::ordered_json split_to_json(const SplitSpec& s);

/// Normalized dataset plus resolved split.
struct PreparedData {
  Dataset dataset;
  std::vector<const Recording*> train, validation, test;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

/// Rows of per-seed values, one vector per column.
struct ExperimentTable {
  std::string title;
  std::string row_header;
  std::vector<std::string> columns;
  struct Row {
    std::string label;
    std::vector<std::vector<double>> cells;
  };
  std::vector<Row> rows;

  const Row& row(const std::string& label) const;
  std::string render() const;  // mean +- std per cell
  nlohmann::ordered_json to_json() const;
};

double mean_of(const std::vector<double>& v);
double stddev_of(const std::vector<double>& v);  // population

using Logger = std::ostream*;

/// Trains the standard, delay and inverse sources for one seed.
std::map<std::string, TrainResult> train_sources(const ExperimentConfig& cfg, const PreparedData& data,
                                                 std::uint64_t seed, bool hypav, Logger log = nullptr,
                                                 const std::vector<std::string>& which = {"lstm", "dly", "inv"});

double test_mean_f1(const std::vector<ProbSeries>& preds, const PreparedData& data);

/// Test mean-F1 of the best LSTM snapshot, the best inverse snapshot and
/// their score-level fusion.
struct InverseFusionScores {
  double lstm = 0.0;
  double inverse = 0.0;
  double fused = 0.0;
};
InverseFusionScores inverse_fusion_scores(const std::map<std::string, TrainResult>& runs, const PreparedData& data);

/// Test mean-F1 of each ensemble composition (shorthand strings).
std::vector<double> composition_scores(const std::map<std::string, TrainResult>& runs, const PreparedData& data,
                                       const std::vector<std::string>& compositions);

ExperimentTable run_delay_sweep(const ExperimentConfig& cfg, Logger log = nullptr);
ExperimentTable run_inverse_fusion(const ExperimentConfig& cfg, Logger log = nullptr);
ExperimentTable run_hypav(const ExperimentConfig& cfg, Logger log = nullptr);
ExperimentTable run_multi_source(const ExperimentConfig& cfg, Logger log = nullptr);

ExperimentTable run_experiment(const ExperimentConfig& cfg, Logger log = nullptr);

/// The seven compositions compared by multi-source, single sources first.
const std::vector<std::string>& default_compositions();

}  // namespace sslstm
