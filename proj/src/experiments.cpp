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

#include "sslstm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace sslstm {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON helpers

namespace {

LabelMode parse_label_mode(const std::string& s) {
  if (s == "onset") return LabelMode::onset;
  if (s == "pre_onset") return LabelMode::pre_onset;
  if (s == "post_offset") return LabelMode::post_offset;
  throw ConfigError("unknown label mode '" + s + "' (expected onset, pre_onset or post_offset)");
}

const char* label_mode_name(LabelMode m) {
  switch (m) {
    case LabelMode::pre_onset: return "pre_onset";
    case LabelMode::post_offset: return "post_offset";
    case LabelMode::onset: break;
  }
  return "onset";
}

std::vector<Selector> selectors_from_json(const nlohmann::json& j) {
  std::vector<Selector> out;
  for (const auto& e : j) {
    Selector s;
    const auto subject = e.at("subject");
    s.subject = subject.is_string() ? subject.get<std::string>() : std::to_string(subject.get<long long>());
    if (e.contains("run")) {
      const auto run = e["run"];
      s.run = run.is_string() ? run.get<std::string>() : std::to_string(run.get<long long>());
    }
    out.push_back(s);
  }
  return out;
}

ojson selectors_to_json(const std::vector<Selector>& v) {
  ojson a = ojson::array();
  for (const auto& s : v) a.push_back({{"subject", s.subject}, {"run", s.run}});
  return a;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

SynthConfig synth_from_json(const nlohmann::json& j, SynthConfig c) {
  try {
    c.channels = j.value("channels", c.channels);
    c.classes = j.value("classes", c.classes);
    c.recordings = j.value("recordings", c.recordings);
    c.length = j.value("length", c.length);
    c.sample_rate = j.value("sample_rate", c.sample_rate);
    c.event_rate = j.value("event_rate", c.event_rate);
    c.event_min = j.value("event_min", c.event_min);
    c.event_max = j.value("event_max", c.event_max);
    c.noise_sd = j.value("noise_sd", c.noise_sd);
    c.amplitude = j.value("amplitude", c.amplitude);
    c.taper = j.value("taper", c.taper);
    c.min_gap = j.value("min_gap", c.min_gap);
    c.subjects = j.value("subjects", c.subjects);
    if (j.contains("cues")) {
      c.cues.clear();
      for (const auto& e : j["cues"])
        c.cues.push_back({parse_label_mode(e.value("mode", std::string("onset"))), e.value("k", 0)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic config: ") + e.what());
  }
  c.validate();
  return c;
}

ojson synth_to_json(const SynthConfig& c) {
  ojson j;
  j["channels"] = c.channels;
  j["classes"] = c.classes;
  j["recordings"] = c.recordings;
  j["length"] = c.length;
  j["sample_rate"] = c.sample_rate;
  j["event_rate"] = c.event_rate;
  j["event_min"] = c.event_min;
  j["event_max"] = c.event_max;
  j["noise_sd"] = c.noise_sd;
  j["amplitude"] = c.amplitude;
  j["taper"] = c.taper;
  j["min_gap"] = c.min_gap;
  j["subjects"] = c.subjects;
  j["cues"] = ojson::array();
  for (const auto& cue : c.cues) j["cues"].push_back({{"mode", label_mode_name(cue.mode)}, {"k", cue.offset}});
  return j;
}

SplitSpec split_from_json(const nlohmann::json& j) {
  if (j.is_string()) return SplitSpec::preset(j.get<std::string>());
  SplitSpec s;
  try {
    if (j.contains("train")) s.train = selectors_from_json(j["train"]);
    if (j.contains("validation")) s.validation = selectors_from_json(j["validation"]);
    if (j.contains("test")) s.test = selectors_from_json(j["test"]);
    if (j.contains("exclude")) s.exclude = selectors_from_json(j["exclude"]);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("split: ") + e.what());
  }
  s.validate();
  return s;
}

ojson split_to_json(const SplitSpec& s) {
  return {{"train", selectors_to_json(s.train)},
          {"validation", selectors_to_json(s.validation)},
          {"test", selectors_to_json(s.test)},
          {"exclude", selectors_to_json(s.exclude)}};
}

// ---------------------------------------------------------------------------
// Configs

const std::vector<std::string>& default_compositions() {
  static const std::vector<std::string> k{"LSTM(20)",         "DLY(20)",          "INV(20)",
                                          "LSTM(10)+DLY(10)", "LSTM(10)+INV(10)", "DLY(10)+INV(10)",
                                          "LSTM(6)+DLY(7)+INV(7)"};
  return k;
}

ExperimentConfig ExperimentConfig::defaults(const std::string& name, bool full_scale) {
  if (name != "delay-sweep" && name != "inverse-fusion" && name != "hypav" && name != "multi-source")
    throw ConfigError("unknown experiment '" + name + "' (expected delay-sweep, inverse-fusion, hypav or multi-source)");
  ExperimentConfig c;
  c.name = name;
  c.full_scale = full_scale;
  c.compositions = default_compositions();

  if (full_scale) {
    c.normalize = true;
    c.split = SplitSpec::preset("opp");
    c.train.hidden = 256;
    c.train.layers = 2;
    c.train.dropout_p = 0.5;
    c.train.learning_rate = 1e-3;
    c.train.epochs = 30;
    c.train.hypav = HypavConfig::fixed(1.0, 128);
    c.hypav.window_min_seconds = 0.5;
    c.hypav.window_max_seconds = 2.0;
    c.hypav.batch_size_choices = {64, 128, 256};
    c.seeds = {1};
    c.deltas_seconds = {0.0, 0.1, 0.3, 0.5, 0.7, 1.0, 1.5};
    c.delta_seconds = 0.5;
    if (name == "hypav") {
      c.seeds.clear();
      for (std::uint64_t s = 1; s <= 30; ++s) c.seeds.push_back(s);
    }
    c.use_hypav = name == "multi-source";
    return c;
  }

  // Desk scale. Sweep data: every class labeled k samples before its signal.
  c.train.hidden = 32;
  c.train.layers = 2;
  c.train.dropout_p = 0.5;
  c.train.hypav = HypavConfig::fixed(1.0, 16);
  c.hypav.window_min_seconds = 0.5;
  c.hypav.window_max_seconds = 2.0;
  c.hypav.batch_size_choices = {8, 16, 32};
  c.synth.channels = 3;
  c.synth.classes = 3;
  c.synth.noise_sd = 0.1;
  c.synth.sample_rate = 30.0;
  if (name == "delay-sweep") {
    c.synth.recordings = 20;
    c.synth.length = 3000;
    c.synth.cues = {ClassCue{LabelMode::pre_onset, 5}};
    c.train.epochs = 12;
    c.train.learning_rate = 1e-3;
    c.seeds = {1, 2, 3};
    for (int d : {0, 1, 2, 3, 5, 8}) c.deltas_seconds.push_back(d / 30.0);
  } else {
    // One class cued before its signal, one after.
    c.synth.recordings = 12;
    c.synth.length = 2000;
    c.synth.cues = {ClassCue{LabelMode::pre_onset, 8}, ClassCue{LabelMode::post_offset, 8}};
    c.train.epochs = 30;
    c.train.learning_rate = 3e-3;
    c.delta_seconds = 8 / 30.0;
    c.seeds = {1, 2, 3, 4, 5};
    if (name == "hypav") {
      c.train.epochs = 15;
      c.seeds.clear();
      for (std::uint64_t s = 1; s <= 30; ++s) c.seeds.push_back(s);
    }
    c.use_hypav = name == "multi-source";
  }
  c.synth.subjects = c.synth.recordings;
  return c;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::string& name, bool full_scale) {
  const std::string n = j.contains("name") ? j["name"].get<std::string>() : name;
  ExperimentConfig c = defaults(n, full_scale || j.value("full_scale", false));
  try {
    if (j.contains("synth")) {
      c.synth = synth_from_json(j["synth"], c.synth);
      if (!j["synth"].contains("subjects")) c.synth.subjects = c.synth.recordings;
    }
    c.data_seed = j.value("data_seed", c.data_seed);
    c.validation_recordings = j.value("validation_recordings", c.validation_recordings);
    c.test_recordings = j.value("test_recordings", c.test_recordings);
    if (j.contains("manifest")) c.manifest = j["manifest"].get<std::string>();
    if (j.contains("split")) c.split = split_from_json(j["split"]);
    c.normalize = j.value("normalize", c.normalize);
    c.decimate = j.value("decimate", c.decimate);
    if (j.contains("train")) {
      nlohmann::json merged = nlohmann::json::parse(c.train.to_json().dump());
      merged.merge_patch(j["train"]);
      c.train = TrainConfig::from_json(merged);
    }
    if (j.contains("hypav")) c.hypav = hypav_from_json(j["hypav"], c.hypav);
    c.use_hypav = j.value("use_hypav", c.use_hypav);
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("seed_count")) {
      c.seeds.clear();
      for (std::uint64_t s = 1; s <= j["seed_count"].get<std::uint64_t>(); ++s) c.seeds.push_back(s);
    }
    if (j.contains("deltas_seconds")) c.deltas_seconds = j["deltas_seconds"].get<std::vector<double>>();
    c.delta_seconds = j.value("delta_seconds", c.delta_seconds);
    c.members = j.value("members", c.members);
    if (j.contains("compositions")) c.compositions = j["compositions"].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

ojson ExperimentConfig::to_json() const {
  ojson j;
  j["name"] = name;
  j["full_scale"] = full_scale;
  if (manifest) {
    j["manifest"] = *manifest;
    j["split"] = split ? split_to_json(*split) : ojson(nullptr);
    j["decimate"] = decimate;
  } else {
    j["synth"] = synth_to_json(synth);
    j["data_seed"] = data_seed;
    j["validation_recordings"] = validation_recordings;
    j["test_recordings"] = test_recordings;
  }
  j["normalize"] = normalize;
  j["train"] = train.to_json();
  j["hypav"] = hypav_to_json(hypav);
  j["use_hypav"] = use_hypav;
  j["seeds"] = seeds;
  j["deltas_seconds"] = deltas_seconds;
  j["delta_seconds"] = delta_seconds;
  j["members"] = members;
  j["compositions"] = compositions;
  return j;
}

void ExperimentConfig::validate() const {
  train.validate();
  hypav.validate();
  if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
  if (members < 1) throw ConfigError("members must be >= 1");
  if (!(delta_seconds >= 0.0)) throw ConfigError("delta_seconds must be nonnegative");
  if (decimate < 1) throw ConfigError("decimate must be >= 1");
  if (name == "delay-sweep" && deltas_seconds.empty()) throw ConfigError("delay-sweep needs deltas_seconds");
  if (!manifest) {
    if (full_scale) throw DataError("full-scale experiments need a dataset manifest (set \"manifest\" in --config)");
    if (validation_recordings < 1 || test_recordings < 1 ||
        validation_recordings + test_recordings >= synth.recordings)
      throw ConfigError("synthetic split needs at least one train, validation and test recording");
  }
  if (name == "multi-source")
    for (const auto& c : compositions)
      for (const auto& src : EnsembleSpec::parse(c).sources)
        if (src.count > train.epochs)
          throw ConfigError("composition " + c + " needs " + std::to_string(src.count) + " snapshots per run, runs have " +
                            std::to_string(train.epochs) + " epochs");
}

// ---------------------------------------------------------------------------
// Data

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData p;
  if (cfg.manifest) {
    p.dataset = load_manifest(*cfg.manifest);
    if (cfg.decimate > 1) {
      for (auto& r : p.dataset.recordings) r = decimate(r, cfg.decimate);
      p.dataset.sample_rate /= cfg.decimate;
    }
    const SplitSpec split = cfg.split ? *cfg.split : SplitSpec::preset("opp");
    const auto res = split.resolve(p.dataset);
    if (res.train.empty() || res.validation.empty() || res.test.empty())
      throw DataError("split leaves the train, validation or test set empty");
    if (cfg.normalize) {
      std::vector<Recording> tr;
      for (auto i : res.train) tr.push_back(p.dataset.recordings[i]);
      const NormStats st = fit_normalizer(tr);
      for (auto& r : p.dataset.recordings) r = apply_normalizer(r, st);
    }
    for (auto i : res.train) p.train.push_back(&p.dataset.recordings[i]);
    for (auto i : res.validation) p.validation.push_back(&p.dataset.recordings[i]);
    for (auto i : res.test) p.test.push_back(&p.dataset.recordings[i]);
    return p;
  }
  p.dataset = make_synthetic(cfg.synth, cfg.data_seed);
  const int n = static_cast<int>(p.dataset.recordings.size());
  const int first_val = n - cfg.validation_recordings - cfg.test_recordings;
  if (cfg.normalize) {
    const std::vector<Recording> tr(p.dataset.recordings.begin(), p.dataset.recordings.begin() + first_val);
    const NormStats st = fit_normalizer(tr);
    for (auto& r : p.dataset.recordings) r = apply_normalizer(r, st);
  }
  for (int i = 0; i < n; ++i) {
    const Recording* r = &p.dataset.recordings[static_cast<std::size_t>(i)];
    if (i < first_val)
      p.train.push_back(r);
    else if (i < first_val + cfg.validation_recordings)
      p.validation.push_back(r);
    else
      p.test.push_back(r);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Tables

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

const ExperimentTable::Row& ExperimentTable::row(const std::string& label) const {
  for (const auto& r : rows)
    if (r.label == label) return r;
  throw ArgumentError("no row '" + label + "' in table " + title);
}

std::string ExperimentTable::render() const {
  std::size_t w0 = row_header.size();
  for (const auto& r : rows) w0 = std::max(w0, r.label.size());
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  auto cell_text = [](const std::vector<double>& cell) {
    const bool whole = std::all_of(cell.begin(), cell.end(), [&](double v) { return v == std::round(v) && v == cell.front(); });
    if (whole && !cell.empty()) return fmt("%.0f", cell.front());
    std::string v = fmt("%.4f", mean_of(cell));
    if (cell.size() > 1) v += " +- " + fmt("%.4f", stddev_of(cell));
    return v;
  };
  std::ostringstream os;
  os << title << "\n";
  std::string line = pad(row_header, w0);
  for (const auto& c : columns) line += "  " + pad(c, 17);
  auto flush = [&] {
    line.erase(line.find_last_not_of(' ') + 1);
    os << line << "\n";
  };
  flush();
  for (const auto& r : rows) {
    line = pad(r.label, w0);
    for (const auto& cell : r.cells) line += "  " + pad(cell_text(cell), 17);
    flush();
  }
  return os.str();
}

ojson ExperimentTable::to_json() const {
  ojson j;
  j["title"] = title;
  j["columns"] = columns;
  j["rows"] = ojson::array();
  for (const auto& r : rows) {
    ojson cells = ojson::array();
    for (const auto& c : r.cells) cells.push_back({{"mean", mean_of(c)}, {"std", stddev_of(c)}, {"values", c}});
    j["rows"].push_back({{"label", r.label}, {"cells", cells}});
  }
  return j;
}

// ---------------------------------------------------------------------------
// Pipelines

namespace {

TrainConfig source_config(const ExperimentConfig& cfg, VariantKind kind, std::uint64_t seed, bool hypav) {
  TrainConfig t = cfg.train;
  t.variant = kind;
  t.delta_seconds = kind == VariantKind::delay ? cfg.delta_seconds : 0.0;
  t.seed = seed;
  if (hypav) t.hypav = cfg.hypav;
  return t;
}

void log_line(Logger log, const std::string& s) {
  if (log) *log << s << std::endl;
}

}  // namespace

double test_mean_f1(const std::vector<ProbSeries>& preds, const PreparedData& data) {
  return score_predictions(preds, data.test, data.dataset).mean_f1_with_null;
}

std::map<std::string, TrainResult> train_sources(const ExperimentConfig& cfg, const PreparedData& data,
                                                 std::uint64_t seed, bool hypav, Logger log,
                                                 const std::vector<std::string>& which) {
  std::map<std::string, TrainResult> runs;
  for (const auto& id : which) {
    const VariantKind kind = id == "lstm"  ? VariantKind::standard
                             : id == "dly" ? VariantKind::delay
                             : id == "inv" ? VariantKind::inverse
                                           : throw ConfigError("unknown source '" + id + "'");
    const TrainConfig t = source_config(cfg, kind, seed, hypav);
    runs[id] = train(t, data.train, data.validation, data.dataset);
    const auto& best = runs[id].best_snapshot();
    log_line(log, "  seed " + std::to_string(seed) + " " + id + (hypav ? " (hypav)" : "") + ": best epoch " +
                      std::to_string(best.epoch) + ", val " + fmt("%.4f", best.val_score));
  }
  return runs;
}

InverseFusionScores inverse_fusion_scores(const std::map<std::string, TrainResult>& runs, const PreparedData& data) {
  const auto& lstm = runs.at("lstm");
  const auto& inv = runs.at("inv");
  const auto pl = evaluate_model(lstm.best_snapshot().params, data.test, lstm.variant);
  const auto pi = evaluate_model(inv.best_snapshot().params, data.test, inv.variant);
  std::vector<ProbSeries> pf;
  for (std::size_t r = 0; r < pl.size(); ++r) pf.push_back(fuse_scores({pl[r], pi[r]}));
  return {test_mean_f1(pl, data), test_mean_f1(pi, data), test_mean_f1(pf, data)};
}

std::vector<double> composition_scores(const std::map<std::string, TrainResult>& runs, const PreparedData& data,
                                       const std::vector<std::string>& compositions) {
  std::vector<double> out;
  for (const auto& c : compositions) out.push_back(test_mean_f1(build_multi_source(EnsembleSpec::parse(c), runs).predict(data.test), data));
  return out;
}

ExperimentTable run_delay_sweep(const ExperimentConfig& cfg, Logger log) {
  const PreparedData data = prepare_data(cfg);
  ExperimentTable t;
  t.title = "delay sweep (" + std::to_string(cfg.seeds.size()) + " seeds)";
  t.row_header = "delta";
  t.columns = {"samples", "val mean-F1", "test mean-F1"};
  for (double d : cfg.deltas_seconds) {
    const Index samples = delta_to_samples(d, data.dataset.sample_rate);
    ExperimentTable::Row row{fmt("%.3f s", d), {{}, {}, {}}};
    for (auto seed : cfg.seeds) {
      TrainConfig tc = cfg.train;
      tc.variant = d > 0.0 ? VariantKind::delay : VariantKind::standard;
      tc.delta_seconds = d;
      tc.seed = seed;
      if (cfg.use_hypav) tc.hypav = cfg.hypav;
      const TrainResult r = train(tc, data.train, data.validation, data.dataset);
      const auto& best = r.best_snapshot();
      const double test = test_mean_f1(evaluate_model(best.params, data.test, r.variant), data);
      row.cells[0].push_back(static_cast<double>(samples));
      row.cells[1].push_back(best.val_score);
      row.cells[2].push_back(test);
      log_line(log, "  delta " + fmt("%.3f", d) + " s = " + std::to_string(samples) + " samples, seed " +
                        std::to_string(seed) + ": val " + fmt("%.4f", best.val_score) + ", test " + fmt("%.4f", test));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

ExperimentTable run_inverse_fusion(const ExperimentConfig& cfg, Logger log) {
  const PreparedData data = prepare_data(cfg);
  ExperimentTable t;
  t.title = "LSTM & Inverse fusion (" + std::to_string(cfg.seeds.size()) + " seeds)";
  t.row_header = "model";
  t.columns = {"test mean-F1"};
  t.rows = {{"LSTM", {{}}}, {"Inverse", {{}}}, {"LSTM&Inverse", {{}}}};
  for (auto seed : cfg.seeds) {
    const auto runs = train_sources(cfg, data, seed, cfg.use_hypav, log, {"lstm", "inv"});
    const auto s = inverse_fusion_scores(runs, data);
    t.rows[0].cells[0].push_back(s.lstm);
    t.rows[1].cells[0].push_back(s.inverse);
    t.rows[2].cells[0].push_back(s.fused);
  }
  return t;
}

ExperimentTable run_hypav(const ExperimentConfig& cfg, Logger log) {
  const PreparedData data = prepare_data(cfg);
  ExperimentTable t;
  t.title = "HYPAV strategy (" + std::to_string(cfg.seeds.size()) + " seeds)";
  t.row_header = "strategy";
  t.columns = {"w/ HYPAV", "w/o"};
  t.rows = {{"LSTM", {{}, {}}}, {"Delay", {{}, {}}}, {"LSTM&Inverse", {{}, {}}}};
  for (auto seed : cfg.seeds) {
    for (int col = 0; col < 2; ++col) {
      const auto runs = train_sources(cfg, data, seed, col == 0, log);
      const auto s = inverse_fusion_scores(runs, data);
      const auto& dly = runs.at("dly");
      t.rows[0].cells[static_cast<std::size_t>(col)].push_back(s.lstm);
      t.rows[1].cells[static_cast<std::size_t>(col)].push_back(
          test_mean_f1(evaluate_model(dly.best_snapshot().params, data.test, dly.variant), data));
      t.rows[2].cells[static_cast<std::size_t>(col)].push_back(s.fused);
    }
  }
  return t;
}

ExperimentTable run_multi_source(const ExperimentConfig& cfg, Logger log) {
  const PreparedData data = prepare_data(cfg);
  ExperimentTable t;
  t.title = "multi-source ensembles, " + std::to_string(cfg.members) + " members (" + std::to_string(cfg.seeds.size()) +
            " seeds)";
  t.row_header = "ensemble";
  t.columns = {"test mean-F1"};
  for (const auto& c : cfg.compositions) {
    const auto spec = EnsembleSpec::parse(c);
    if (spec.total() != cfg.members)
      throw ConfigError("composition " + c + " has " + std::to_string(spec.total()) + " members, expected " +
                        std::to_string(cfg.members));
    t.rows.push_back({c, {{}}});
  }
  for (auto seed : cfg.seeds) {
    const auto runs = train_sources(cfg, data, seed, cfg.use_hypav, log);
    const auto scores = composition_scores(runs, data, cfg.compositions);
    for (std::size_t k = 0; k < scores.size(); ++k) t.rows[k].cells[0].push_back(scores[k]);
  }
  return t;
}

ExperimentTable run_experiment(const ExperimentConfig& cfg, Logger log) {
  cfg.validate();
  if (cfg.name == "delay-sweep") return run_delay_sweep(cfg, log);
  if (cfg.name == "inverse-fusion") return run_inverse_fusion(cfg, log);
  if (cfg.name == "hypav") return run_hypav(cfg, log);
  if (cfg.name == "multi-source") return run_multi_source(cfg, log);
  throw ConfigError("unknown experiment '" + cfg.name + "'");
}

}  // namespace sslstm
