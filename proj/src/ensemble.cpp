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

#include "sslstm/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <regex>

namespace sslstm {

ProbSeries fuse_scores(const std::vector<ProbSeries>& members) {
  FusionAlignment a = align_for_fusion(members);
  return {std::move(a.mean), std::move(a.any_valid)};
}

FusedLoss fused_ce(const std::vector<ProbSeries>& members, const std::vector<int>& targets) {
  const FusionAlignment a = align_for_fusion(members);
  if (static_cast<Index>(targets.size()) != members.front().length())
    throw ShapeError("fused_ce: targets length differs from the series");
  FusedLoss out;
  out.members.assign(members.size(), 0.0);
  for (Index t = 0; t < members.front().length(); ++t) {
    if (!a.all_valid[static_cast<std::size_t>(t)]) continue;
    const int y = targets[static_cast<std::size_t>(t)];
    Matrix fused = Matrix::Zero(1, members.front().classes());
    for (const auto& m : members) fused += m.probs.row(t);
    fused /= static_cast<double>(members.size());
    out.fused -= std::log(fused(0, y));
    for (std::size_t k = 0; k < members.size(); ++k) out.members[k] -= std::log(members[k].probs(t, y));
    ++out.timestamps;
  }
  if (out.timestamps == 0) throw EvaluationError("fused_ce: no timestamp where every member is valid");
  const double n = static_cast<double>(out.timestamps);
  out.fused /= n;
  for (auto& l : out.members) l /= n;
  out.member_mean = std::accumulate(out.members.begin(), out.members.end(), 0.0) / static_cast<double>(members.size());
  return out;
}

std::string rule_name(SelectionRule r) { return r == SelectionRule::last ? "last" : "top"; }

SelectionRule parse_rule(const std::string& name) {
  if (name == "top") return SelectionRule::top;
  if (name == "last") return SelectionRule::last;
  throw ConfigError("unknown selection rule '" + name + "' (expected top or last)");
}

std::vector<EpochSnapshot> select_bagged(const std::vector<EpochSnapshot>& snapshots, std::size_t M,
                                         SelectionRule rule) {
  if (M > snapshots.size())
    throw ArgumentError("select_bagged: asked for " + std::to_string(M) + " members, only " +
                        std::to_string(snapshots.size()) + " snapshots");
  std::vector<std::size_t> idx(snapshots.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto by_epoch = [&](std::size_t a, std::size_t b) { return snapshots[a].epoch < snapshots[b].epoch; };
  if (rule == SelectionRule::top) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (snapshots[a].val_score != snapshots[b].val_score) return snapshots[a].val_score > snapshots[b].val_score;
      return snapshots[a].epoch < snapshots[b].epoch;
    });
    idx.resize(M);
  } else {
    std::stable_sort(idx.begin(), idx.end(), by_epoch);
    idx.erase(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(M));
  }
  std::stable_sort(idx.begin(), idx.end(), by_epoch);
  std::vector<EpochSnapshot> out;
  for (auto i : idx) out.push_back(snapshots[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Specs

namespace {

struct Alias {
  const char* tag;
  const char* run_id;
  VariantKind kind;
};

constexpr Alias kAliases[] = {
    {"LSTM", "lstm", VariantKind::standard},
    {"DLY", "dly", VariantKind::delay},
    {"INV", "inv", VariantKind::inverse},
};

}  // namespace

int EnsembleSpec::total() const {
  int n = 0;
  for (const auto& s : sources) n += s.count;
  return n;
}

void EnsembleSpec::validate() const {
  if (sources.empty()) throw ConfigError("ensemble spec has no sources");
  for (const auto& s : sources)
    if (s.count < 0) throw ConfigError("ensemble source " + s.run_id + " has a negative member count");
  if (total() < 1) throw ConfigError("ensemble spec selects no members");
}

EnsembleSpec EnsembleSpec::parse(const std::string& shorthand) {
  static const std::regex term(R"(\s*([A-Za-z]+)\s*\(\s*(\d+)\s*\)\s*)");
  EnsembleSpec spec;
  std::size_t begin = 0;
  while (begin <= shorthand.size()) {
    const std::size_t plus = shorthand.find('+', begin);
    const std::string piece = shorthand.substr(begin, plus == std::string::npos ? std::string::npos : plus - begin);
    std::smatch m;
    if (!std::regex_match(piece, m, term))
      throw ConfigError("bad ensemble term '" + piece + "' in '" + shorthand + "' (expected e.g. LSTM(6)+DLY(7)+INV(7))");
    std::string tag = m[1].str();
    std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::toupper(c); });
    const auto* alias = std::find_if(std::begin(kAliases), std::end(kAliases), [&](const Alias& a) { return tag == a.tag; });
    if (alias == std::end(kAliases)) throw ConfigError("unknown ensemble source '" + m[1].str() + "'");
    spec.sources.push_back({alias->run_id, alias->kind, std::stoi(m[2].str())});
    if (plus == std::string::npos) break;
    begin = plus + 1;
  }
  spec.validate();
  return spec;
}

std::string EnsembleSpec::shorthand() const {
  std::string out;
  for (const auto& s : sources) {
    if (!out.empty()) out += "+";
    const char* tag = "LSTM";
    for (const auto& a : kAliases)
      if (a.kind == s.variant) tag = a.tag;
    out += std::string(tag) + "(" + std::to_string(s.count) + ")";
  }
  return out;
}

nlohmann::ordered_json EnsembleSpec::to_json() const {
  nlohmann::ordered_json j;
  j["rule"] = rule_name(rule);
  j["total"] = total();
  j["sources"] = nlohmann::ordered_json::array();
  for (const auto& s : sources)
    j["sources"].push_back({{"run_id", s.run_id}, {"variant", variant_name(s.variant)}, {"count", s.count}});
  return j;
}

EnsembleSpec EnsembleSpec::from_json(const nlohmann::json& j) {
  EnsembleSpec spec;
  try {
    if (j.contains("rule")) spec.rule = parse_rule(j["rule"].get<std::string>());
    for (const auto& s : j.at("sources"))
      spec.sources.push_back({s.at("run_id").get<std::string>(), parse_variant(s.value("variant", "standard")),
                              s.at("count").get<int>()});
    spec.validate();
    if (j.contains("total") && j["total"].get<int>() != spec.total())
      throw ConfigError("ensemble spec total " + std::to_string(j["total"].get<int>()) + " != sum of counts " +
                        std::to_string(spec.total()));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("ensemble spec: ") + e.what());
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Prediction

FusedPredictor::FusedPredictor(std::vector<EnsembleMember> members) : members_(std::move(members)) {
  if (members_.empty()) throw ArgumentError("FusedPredictor: no members");
}

ProbSeries FusedPredictor::predict(const Recording& rec) const {
  std::vector<ProbSeries> outs;
  outs.reserve(members_.size());
  for (const auto& m : members_) outs.push_back(predict_recording(m.snapshot.params, rec, m.variant));
  return fuse_scores(outs);
}

std::vector<ProbSeries> FusedPredictor::predict(const std::vector<const Recording*>& recordings) const {
  std::vector<ProbSeries> out;
  for (const Recording* r : recordings) out.push_back(predict(*r));
  return out;
}

FusedPredictor build_multi_source(const EnsembleSpec& spec, const std::map<std::string, TrainResult>& runs) {
  spec.validate();
  std::vector<EnsembleMember> members;
  for (const auto& src : spec.sources) {
    if (src.count == 0) continue;
    const auto it = runs.find(src.run_id);
    if (it == runs.end()) throw ConfigError("ensemble source run '" + src.run_id + "' not found");
    const TrainResult& run = it->second;
    if (run.variant.kind != src.variant)
      throw ConfigError("run '" + src.run_id + "' is a " + variant_name(run.variant.kind) + " run, spec says " +
                        variant_name(src.variant));
    if (static_cast<std::size_t>(src.count) > run.snapshots.size())
      throw ConfigError("run '" + src.run_id + "' has " + std::to_string(run.snapshots.size()) +
                        " snapshots, spec needs " + std::to_string(src.count));
    for (auto& s : select_bagged(run.snapshots, static_cast<std::size_t>(src.count), spec.rule))
      members.push_back({src.run_id, run.variant, std::move(s)});
  }
  return FusedPredictor(std::move(members));
}

}  // namespace sslstm
