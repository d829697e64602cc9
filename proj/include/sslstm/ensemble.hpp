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

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslstm/training.hpp"
#include "sslstm/variants.hpp"

namespace sslstm {

/// Per-timestamp mean over the members valid there. Throws ArgumentError on
/// an empty list.
ProbSeries fuse_scores(const std::vector<ProbSeries>& members);

struct FusedLoss {
  double fused = 0.0;
  std::vector<double> members;
  double member_mean = 0.0;
  Index timestamps = 0;
};

/// Mean cross-entropy of the fused probabilities and of every member over
/// the timestamps where all members are valid.
FusedLoss fused_ce(const std::vector<ProbSeries>& members, const std::vector<int>& targets);

enum class SelectionRule { top, last };

std::string rule_name(SelectionRule r);
SelectionRule parse_rule(const std::string& name);

/// Top: the M best validation scores, ties to the earlier epoch. Last: the
/// final M epochs. Either way the result is ordered by epoch.
std::vector<EpochSnapshot> select_bagged(const std::vector<EpochSnapshot>& snapshots, std::size_t M,
                                         SelectionRule rule = SelectionRule::top);

struct EnsembleSource {
  std::string run_id;
  VariantKind variant = VariantKind::standard;
  int count = 0;

  friend bool operator==(const EnsembleSource&, const EnsembleSource&) = default;
};

struct EnsembleSpec {
  std::vector<EnsembleSource> sources;
  SelectionRule rule = SelectionRule::top;

  int total() const;
  void validate() const;

  /// "LSTM(6)+DLY(7)+INV(7)"; run ids default to lstm, dly and inv.
  static EnsembleSpec parse(const std::string& shorthand);
  std::string shorthand() const;

  nlohmann::ordered_json to_json() const;
  static EnsembleSpec from_json(const nlohmann::json& j);

  friend bool operator==(const EnsembleSpec&, const EnsembleSpec&) = default;
};

struct EnsembleMember {
  std::string run_id;
  Variant variant;
  EpochSnapshot snapshot;
};

class FusedPredictor {
 public:
  explicit FusedPredictor(std::vector<EnsembleMember> members);

  const std::vector<EnsembleMember>& members() const { return members_; }
  ProbSeries predict(const Recording& rec) const;
  std::vector<ProbSeries> predict(const std::vector<const Recording*>& recordings) const;

 private:
  std::vector<EnsembleMember> members_;
};

/// Selects each source's members from its run and fuses them. Throws
/// ConfigError when a run is missing, has the wrong variant, or is short of
/// snapshots.
FusedPredictor build_multi_source(const EnsembleSpec& spec, const std::map<std::string, TrainResult>& runs);

}  // namespace sslstm
