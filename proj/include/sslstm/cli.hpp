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
#include <map>
#include <optional>
#include <ostream>
#include <string>

#include "sslstm/data.hpp"
#include "sslstm/eval.hpp"
#include "sslstm/training.hpp"

namespace sslstm::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kData = 3, kFailure = 4 };

struct Options {
  std::string command;     // synth | train | eval | gradcheck | experiment
  std::string experiment;  // experiment name
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<double> delta;  // seconds
  std::optional<std::string> variant;
  std::optional<std::string> out;
  bool full_scale = false;

  // eval
  std::optional<std::string> run;
  std::optional<std::string> snapshot;
  std::optional<std::string> ensemble;
  std::optional<std::string> subset;

  // gradcheck
  double corrupt_scale = 1.0;
  double threshold = 1e-4;
};

/// Runs one command, mapping failures onto the exit-code taxonomy and
/// printing their messages to `err`.
int run(const Options& opts, std::ostream& out, std::ostream& err);

// The commands themselves throw; run() translates.
int cmd_synth(const Options& opts, std::ostream& out);
int cmd_train(const Options& opts, std::ostream& out);
int cmd_eval(const Options& opts, std::ostream& out);
int cmd_gradcheck(const Options& opts, std::ostream& out);
int cmd_experiment(const Options& opts, std::ostream& out);

/// Training-run configuration as stored in `<out>/config.json`.
struct RunConfig {
  std::string manifest;
  SplitSpec split;
  bool normalize = true;
  int decimate = 1;
  TrainConfig train;
  std::string out;

  static RunConfig from_json(const nlohmann::json& j, const std::string& base_dir);
  nlohmann::ordered_json to_json() const;
};

/// A finished training directory read back from disk.
struct LoadedRun {
  std::string dir;
  RunConfig config;
  NormStats norm;
  bool has_norm = false;
  TrainResult result;
};

LoadedRun load_run(const std::string& dir);

/// Loads the run's dataset with its preprocessing applied.
Dataset load_run_dataset(const LoadedRun& run);

}  // namespace sslstm::cli
