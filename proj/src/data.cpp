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

#include "sslstm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sslstm {

namespace fs = std::filesystem;
using json = nlohmann::json;

void Dataset::validate() const {
  const int C = num_classes();
  if (C < 2) throw DataError("dataset needs at least two classes");
  if (null_class && (*null_class < 0 || *null_class >= C))
    throw DataError("null class " + std::to_string(*null_class) + " outside catalog");
  for (const auto& r : recordings) {
    if (r.length() < 1) throw DataError("recording " + r.id + " is empty");
    if (static_cast<Index>(r.labels.size()) != r.length())
      throw DataError("recording " + r.id + ": label count differs from sample count");
    if (r.channels() != channels()) throw DataError("recording " + r.id + ": channel count differs");
    if (r.sample_rate != sample_rate) throw DataError("recording " + r.id + ": sample rate differs from dataset");
    for (std::size_t t = 0; t < r.labels.size(); ++t)
      if (r.labels[t] < 0 || r.labels[t] >= C)
        throw DataError("recording " + r.id + ": label " + std::to_string(r.labels[t]) + " at t=" +
                        std::to_string(t) + " outside [0, " + std::to_string(C) + ")");
  }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

Recording load_csv(const std::string& path, const CsvSchema& schema, const std::vector<std::string>& class_names,
                   double sample_rate) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.find_first_not_of(" \t\r") == std::string::npos)
    throw DataError(path + ": empty file");
  const auto header = split_csv_line(line);

  auto column_of = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto label_col = column_of(schema.label_column);
  if (!label_col) throw DataError(path + ": no label column '" + schema.label_column + "'");

  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    std::vector<std::pair<int, std::size_t>> numbered;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto& h = header[c];
      int k = 0;
      if (h.size() > 1 && h[0] == 'f' &&
          std::from_chars(h.data() + 1, h.data() + h.size(), k).ptr == h.data() + h.size())
        numbered.emplace_back(k, c);
    }
    std::sort(numbered.begin(), numbered.end());
    for (auto& [k, c] : numbered) feature_cols.push_back(c);
  } else {
    for (const auto& name : schema.feature_columns) {
      auto c = column_of(name);
      if (!c) throw DataError(path + ": no feature column '" + name + "'");
      feature_cols.push_back(*c);
    }
  }
  if (feature_cols.empty()) throw DataError(path + ": no feature columns");
  if (schema.timestamp_column && !column_of(*schema.timestamp_column))
    throw DataError(path + ": no timestamp column '" + *schema.timestamp_column + "'");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError(path + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " fields, header has " + std::to_string(header.size()));
    for (std::size_t c : feature_cols) {
      const std::string& cell = cells[c];
      double v;
      if (cell.empty() || cell == "nan" || cell == "NaN" || cell == "NA") {
        v = std::numeric_limits<double>::quiet_NaN();
      } else if (!parse_double(cell, v)) {
        throw DataError(path + ": row " + std::to_string(row) + ": bad number '" + cell + "'");
      }
      values.push_back(v);
    }
    const std::string& tok = cells[*label_col];
    int id = -1;
    auto named = std::find(class_names.begin(), class_names.end(), tok);
    if (named != class_names.end()) {
      id = static_cast<int>(named - class_names.begin());
    } else {
      int parsed = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), parsed);
      if (ec == std::errc() && p == tok.data() + tok.size() && parsed >= 0 &&
          parsed < static_cast<int>(class_names.size()))
        id = parsed;
    }
    if (id < 0) throw DataError(path + ": row " + std::to_string(row) + ": unknown class '" + tok + "'");
    labels.push_back(id);
  }
  if (row == 0) throw DataError(path + ": empty file (header only)");

  Recording rec;
  rec.id = fs::path(path).stem().string();
  rec.sample_rate = sample_rate;
  const Index D = static_cast<Index>(feature_cols.size());
  rec.features = Eigen::Map<const Matrix>(values.data(), static_cast<Index>(row), D);
  rec.labels = std::move(labels);
  return rec;
}

void write_csv(const Recording& rec, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << "timestamp";
  for (Index k = 0; k < rec.channels(); ++k) out << ",f" << k;
  out << ",label\n";
  for (Index t = 0; t < rec.length(); ++t) {
    out << format_double(static_cast<double>(t) / rec.sample_rate);
    for (Index k = 0; k < rec.channels(); ++k) out << ',' << format_double(rec.features(t, k));
    out << ',' << rec.labels[static_cast<std::size_t>(t)] << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

Dataset load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("manifest " + path + ": " + e.what());
  }
  Dataset ds;
  try {
    ds.class_names = j.at("class_names").get<std::vector<std::string>>();
    if (j.contains("null_class") && !j["null_class"].is_null()) ds.null_class = j["null_class"].get<int>();
    ds.sample_rate = j.at("sample_rate").get<double>();
    CsvSchema schema;
    if (j.contains("label_column")) schema.label_column = j["label_column"].get<std::string>();
    if (j.contains("feature_columns")) schema.feature_columns = j["feature_columns"].get<std::vector<std::string>>();
    const fs::path base = fs::path(path).parent_path();
    for (const auto& e : j.at("recordings")) {
      fs::path p = e.at("path").get<std::string>();
      if (p.is_relative()) p = base / p;
      Recording r = load_csv(p.string(), schema, ds.class_names, ds.sample_rate);
      r.subject = e.value("subject", std::string());
      r.run = e.value("run", std::string());
      ds.recordings.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError("manifest " + path + ": " + e.what());
  }
  ds.validate();
  return ds;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  json j;
  j["class_names"] = ds.class_names;
  j["null_class"] = ds.null_class ? json(*ds.null_class) : json(nullptr);
  j["sample_rate"] = ds.sample_rate;
  j["recordings"] = json::array();
  for (const auto& r : ds.recordings) {
    const std::string name = "subject" + r.subject + "_run" + r.run + ".csv";
    write_csv(r, (fs::path(dir) / name).string());
    j["recordings"].push_back({{"path", name}, {"subject", r.subject}, {"run", r.run}});
  }
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("cannot write manifest in " + dir);
}

// ---------------------------------------------------------------------------
// Preprocessing

NormStats fit_normalizer(std::span<const Recording> train) {
  if (train.empty()) throw DataError("fit_normalizer: no training recordings");
  const Index D = train.front().channels();
  NormStats st;
  st.mean.assign(static_cast<std::size_t>(D), 0.0);
  st.sd.assign(static_cast<std::size_t>(D), 0.0);
  for (Index k = 0; k < D; ++k) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : train)
      for (Index t = 0; t < r.length(); ++t)
        if (!std::isnan(r.features(t, k))) {
          sum += r.features(t, k);
          ++n;
        }
    const double mean = n ? sum / static_cast<double>(n) : 0.0;
    double ss = 0.0;
    for (const auto& r : train)
      for (Index t = 0; t < r.length(); ++t)
        if (!std::isnan(r.features(t, k))) ss += (r.features(t, k) - mean) * (r.features(t, k) - mean);
    st.mean[static_cast<std::size_t>(k)] = mean;
    st.sd[static_cast<std::size_t>(k)] = n ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
  }
  return st;
}

Recording apply_normalizer(const Recording& rec, const NormStats& stats) {
  if (static_cast<Index>(stats.mean.size()) != rec.channels())
    throw ShapeError("apply_normalizer: stats for " + std::to_string(stats.mean.size()) + " channels, recording has " +
                     std::to_string(rec.channels()));
  Recording out = rec;
  for (Index k = 0; k < rec.channels(); ++k) {
    const double mean = stats.mean[static_cast<std::size_t>(k)];
    const double sd = stats.sd[static_cast<std::size_t>(k)];
    double last = mean;
    for (Index t = 0; t < rec.length(); ++t) {
      double v = out.features(t, k);
      if (std::isnan(v)) v = last;
      last = v;
      out.features(t, k) = sd < 1e-12 ? v - mean : (v - mean) / sd;
    }
  }
  return out;
}

Recording decimate(const Recording& rec, int factor) {
  if (factor < 1) throw ArgumentError("decimate: factor must be >= 1, got " + std::to_string(factor));
  Recording out = rec;
  const Index T = (rec.length() + factor - 1) / factor;
  out.features.resize(T, rec.channels());
  out.labels.resize(static_cast<std::size_t>(T));
  for (Index t = 0; t < T; ++t) {
    out.features.row(t) = rec.features.row(t * factor);
    out.labels[static_cast<std::size_t>(t)] = rec.labels[static_cast<std::size_t>(t * factor)];
  }
  out.sample_rate = rec.sample_rate / factor;
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

Index footprint_extra(const ClassCue& cue) {
  return cue.mode == LabelMode::onset ? 0 : cue.offset;
}

// Extra gap is uniform on [0, 2 * half_span] samples.
struct GapPlan {
  Index half_span2 = 0;  // 2 * mean extra gap, rounded
};

double mean_footprint(const SynthConfig& cfg) {
  double m = 0.0;
  for (int c = 1; c < cfg.classes; ++c)
    m += 0.5 * (cfg.event_min + cfg.event_max) + static_cast<double>(footprint_extra(cfg.cue_for(c)));
  return m / (cfg.classes - 1);
}

GapPlan gap_plan(const SynthConfig& cfg) {
  const double spacing = cfg.sample_rate / cfg.event_rate;
  const double extra = spacing - mean_footprint(cfg) - cfg.min_gap;
  if (extra < 0.0)
    throw ConfigError("synthetic: event rate " + std::to_string(cfg.event_rate) +
                      "/s cannot be packed; mean event footprint plus gap exceeds the spacing of " +
                      std::to_string(spacing) + " samples");
  return {static_cast<Index>(std::llround(2.0 * extra))};
}

}  // namespace

void SynthConfig::validate() const {
  if (channels < 1 || classes < 2 || recordings < 1 || length < 1 || sample_rate <= 0.0 || subjects < 1)
    throw ConfigError("synthetic: channels, classes >= 2, recordings, length, subjects and sample_rate must be positive");
  if (event_rate < 0.0 || noise_sd < 0.0 || min_gap < 0 || taper < 0)
    throw ConfigError("synthetic: event_rate, noise_sd, min_gap and taper must be nonnegative");
  if (event_min < 1 || event_max < event_min) throw ConfigError("synthetic: need 1 <= event_min <= event_max");
  if (2 * taper > event_min) throw ConfigError("synthetic: taper longer than half the shortest event");
  if (cues.empty() || (cues.size() != 1 && static_cast<int>(cues.size()) != classes - 1))
    throw ConfigError("synthetic: cues must hold one entry or one per non-null class");
  for (const auto& c : cues)
    if (c.offset < 0 || (c.mode != LabelMode::onset && c.offset < 1))
      throw ConfigError("synthetic: pre_onset/post_offset cues need k >= 1");
  if (event_rate > 0.0) {
    gap_plan(*this);
    Index longest = event_max;
    for (int c = 1; c < classes; ++c) longest = std::max<Index>(longest, event_max + footprint_extra(cue_for(c)));
    if (longest > length) throw ConfigError("synthetic: events do not fit in a recording of length " + std::to_string(length));
  }
}

const ClassCue& SynthConfig::cue_for(int cls) const {
  return cues.size() == 1 ? cues.front() : cues[static_cast<std::size_t>(cls - 1)];
}

std::vector<double> expected_class_priors(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<double> p(static_cast<std::size_t>(cfg.classes), 0.0);
  if (cfg.event_rate == 0.0) {
    p[0] = 1.0;
    return p;
  }
  const double cycle = mean_footprint(cfg) + cfg.min_gap + 0.5 * static_cast<double>(gap_plan(cfg).half_span2);
  double labeled = 0.0;
  for (int c = 1; c < cfg.classes; ++c) {
    const ClassCue& cue = cfg.cue_for(c);
    const double per_event = cue.mode == LabelMode::onset ? 0.5 * (cfg.event_min + cfg.event_max) : cue.offset;
    p[static_cast<std::size_t>(c)] = per_event / (cfg.classes - 1) / cycle;
    labeled += p[static_cast<std::size_t>(c)];
  }
  p[0] = 1.0 - labeled;
  return p;
}

Dataset make_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Dataset ds;
  ds.sample_rate = cfg.sample_rate;
  ds.null_class = 0;
  ds.class_names.push_back("null");
  for (int c = 1; c < cfg.classes; ++c) ds.class_names.push_back("event" + std::to_string(c));

  const Index T = cfg.length;
  const Index D = cfg.channels;
  for (int r = 0; r < cfg.recordings; ++r) {
    RngStream rng(seed, stream_id(StreamPurpose::synthetic, static_cast<std::uint64_t>(r)));
    Recording rec;
    rec.subject = std::to_string(r % cfg.subjects + 1);
    rec.run = std::to_string(r / cfg.subjects + 1);
    rec.id = "subject" + rec.subject + "_run" + rec.run;
    rec.sample_rate = cfg.sample_rate;
    rec.features.resize(T, D);
    for (Index t = 0; t < T; ++t)
      for (Index k = 0; k < D; ++k) rec.features(t, k) = rng_normal(rng, 0.0, cfg.noise_sd);
    rec.labels.assign(static_cast<std::size_t>(T), 0);

    if (cfg.event_rate > 0.0) {
      const GapPlan gaps = gap_plan(cfg);
      Index pos = rng_int(rng, 0, gaps.half_span2);
      for (;;) {
        const int cls = static_cast<int>(rng_int(rng, 1, cfg.classes - 1));
        const Index len = rng_int(rng, cfg.event_min, cfg.event_max);
        const ClassCue& cue = cfg.cue_for(cls);
        const Index extra = footprint_extra(cue);
        if (pos + len + extra > T) break;

        const Index signal = cue.mode == LabelMode::pre_onset ? pos + extra : pos;
        const double freq = 2.0 + cls;
        const Index ch_a = cls % D, ch_b = (cls + 1) % D;
        for (Index n = 0; n < len; ++n) {
          double env = 1.0;
          if (n < cfg.taper) env = 0.5 * (1.0 - std::cos(std::numbers::pi * (n + 1) / (cfg.taper + 1)));
          if (len - 1 - n < cfg.taper)
            env = 0.5 * (1.0 - std::cos(std::numbers::pi * (len - n) / (cfg.taper + 1)));
          const double v = cfg.amplitude * env * std::cos(2.0 * std::numbers::pi * freq * n / cfg.sample_rate);
          rec.features(signal + n, ch_a) += v;
          if (ch_b != ch_a) rec.features(signal + n, ch_b) += v;
        }
        Index lab_begin = signal, lab_end = signal + len;
        if (cue.mode == LabelMode::pre_onset) {
          lab_begin = signal - cue.offset;
          lab_end = signal;
        } else if (cue.mode == LabelMode::post_offset) {
          lab_begin = signal + len;
          lab_end = signal + len + cue.offset;
        }
        for (Index t = lab_begin; t < lab_end; ++t) rec.labels[static_cast<std::size_t>(t)] = cls;
        pos += len + extra + cfg.min_gap + rng_int(rng, 0, gaps.half_span2);
      }
    }
    ds.recordings.push_back(std::move(rec));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Splits

bool Selector::matches(const Recording& r) const {
  return r.subject == subject && (run == "*" || r.run == run);
}

namespace {

bool overlaps(const Selector& a, const Selector& b) {
  return a.subject == b.subject && (a.run == "*" || b.run == "*" || a.run == b.run);
}

bool any_match(const std::vector<Selector>& sel, const Recording& r) {
  return std::any_of(sel.begin(), sel.end(), [&](const Selector& s) { return s.matches(r); });
}

}  // namespace

void SplitSpec::validate() const {
  const std::vector<Selector>* sets[] = {&train, &validation, &test, &exclude};
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      for (const auto& x : *sets[a])
        for (const auto& y : *sets[b])
          if (overlaps(x, y))
            throw ConfigError("split selectors overlap: subject " + x.subject + " run " + x.run + " / run " + y.run);
}

SplitSpec::Resolved SplitSpec::resolve(const Dataset& ds) const {
  validate();
  Resolved out;
  for (std::size_t i = 0; i < ds.recordings.size(); ++i) {
    const auto& r = ds.recordings[i];
    if (any_match(exclude, r)) continue;
    if (any_match(validation, r))
      out.validation.push_back(i);
    else if (any_match(test, r))
      out.test.push_back(i);
    else if (train.empty() || any_match(train, r))
      out.train.push_back(i);
  }
  return out;
}

SplitSpec SplitSpec::preset(const std::string& name) {
  SplitSpec s;
  if (name == "opp") {
    s.validation = {{"1", "2"}};
    s.test = {{"2", "4"}, {"2", "5"}, {"3", "4"}, {"3", "5"}};
  } else if (name == "dg") {
    s.validation = {{"9", "1"}};
    s.test = {{"2", "1"}, {"2", "2"}};
    s.exclude = {{"4", "*"}, {"10", "*"}};
  } else if (name == "pamap2") {
    s.validation = {{"5", "1"}, {"5", "2"}};
    s.test = {{"6", "1"}, {"6", "2"}};
  } else {
    throw ConfigError("unknown split preset '" + name + "' (expected opp, dg or pamap2)");
  }
  return s;
}

// ---------------------------------------------------------------------------
// Batching

void HypavConfig::validate() const {
  if (!fixed_window_seconds && !(window_min_seconds > 0.0 && window_min_seconds <= window_max_seconds))
    throw ConfigError("hypav: need 0 < window_min_seconds <= window_max_seconds");
  if (fixed_window_seconds && !(*fixed_window_seconds > 0.0)) throw ConfigError("hypav: fixed window must be positive");
  if (!fixed_batch_size && batch_size_choices.empty()) throw ConfigError("hypav: batch_size_choices is empty");
  for (int b : batch_size_choices)
    if (b < 1) throw ConfigError("hypav: batch sizes must be >= 1");
  if (fixed_batch_size && *fixed_batch_size < 1) throw ConfigError("hypav: fixed batch size must be >= 1");
}

HypavConfig HypavConfig::fixed(double window_seconds, int batch_size) {
  HypavConfig h;
  h.fixed_window_seconds = window_seconds;
  h.fixed_batch_size = batch_size;
  h.batch_size_choices = {batch_size};
  h.resample_offsets = false;
  return h;
}

Index window_samples(double seconds, double sample_rate) {
  return std::max<Index>(1, static_cast<Index>(std::llround(seconds * sample_rate)));
}

TrainSequence plain_sequence(const Recording& rec) {
  return {&rec.features, rec.labels, std::vector<std::uint8_t>(rec.labels.size(), 1)};
}

std::vector<Batch> stateful_batches(std::span<const TrainSequence> sequences, const HypavConfig& hypav,
                                    double sample_rate, std::uint64_t epoch_seed, std::uint64_t epoch_index) {
  hypav.validate();
  if (sequences.empty()) throw ConfigError("stateful_batches: no training recordings");
  const Index D = sequences.front().features->cols();

  // Concatenated timeline: starts[i] is the first global index of sequence i.
  std::vector<Index> starts{0};
  Index shortest = std::numeric_limits<Index>::max();
  for (const auto& s : sequences) {
    if (s.features->cols() != D) throw ShapeError("stateful_batches: recordings differ in channel count");
    if (static_cast<Index>(s.targets.size()) != s.features->rows() || s.mask.size() != s.targets.size())
      throw ShapeError("stateful_batches: targets/mask length differs from recording length");
    starts.push_back(starts.back() + s.features->rows());
    shortest = std::min(shortest, s.features->rows());
  }
  const Index total = starts.back();

  const Index max_window = hypav.fixed_window_seconds ? window_samples(*hypav.fixed_window_seconds, sample_rate)
                                                      : window_samples(hypav.window_max_seconds, sample_rate);
  if (max_window > shortest)
    throw ConfigError("stateful_batches: window of " + std::to_string(max_window) +
                      " samples is longer than the shortest recording (" + std::to_string(shortest) + ")");

  RngStream rng(epoch_seed, stream_id(StreamPurpose::batching, epoch_index));
  const Index B = hypav.fixed_batch_size
                      ? *hypav.fixed_batch_size
                      : hypav.batch_size_choices[static_cast<std::size_t>(
                            rng_int(rng, 0, static_cast<std::int64_t>(hypav.batch_size_choices.size()) - 1))];
  if (B > total) throw ConfigError("stateful_batches: more lanes than samples");

  auto draw_window = [&]() -> Index {
    if (hypav.fixed_window_seconds) return max_window;
    return window_samples(rng_uniform(rng, hypav.window_min_seconds, hypav.window_max_seconds), sample_rate);
  };
  auto sequence_of = [&](Index g) {
    return static_cast<std::size_t>(std::upper_bound(starts.begin(), starts.end(), g) - starts.begin() - 1);
  };

  Index window = draw_window();
  std::vector<Index> pos(static_cast<std::size_t>(B)), lane_end(static_cast<std::size_t>(B));
  for (Index b = 0; b < B; ++b) {
    const Index begin = b * total / B;
    lane_end[static_cast<std::size_t>(b)] = (b + 1) * total / B;
    const Index offset = hypav.resample_offsets ? rng_int(rng, 0, window - 1) : 0;
    pos[static_cast<std::size_t>(b)] = std::min(begin + offset, lane_end[static_cast<std::size_t>(b)]);
  }

  std::vector<Batch> batches;
  bool first = true;
  for (;;) {
    if (!first) window = draw_window();
    bool exhausted = false;
    for (Index b = 0; b < B; ++b)
      if (pos[static_cast<std::size_t>(b)] >= lane_end[static_cast<std::size_t>(b)]) exhausted = true;
    if (exhausted) break;

    Batch batch;
    batch.x = SequenceBatch(B, window, D);
    batch.targets.assign(static_cast<std::size_t>(B * window), 0);
    batch.mask.assign(static_cast<std::size_t>(B * window), 0);
    batch.origin.assign(static_cast<std::size_t>(B * window), -1);
    batch.reset.assign(static_cast<std::size_t>(B), 0);
    for (Index b = 0; b < B; ++b) {
      Index& p = pos[static_cast<std::size_t>(b)];
      const std::size_t seq = sequence_of(p);
      const Index seq_begin = starts[seq];
      const Index stop = std::min({p + window, starts[seq + 1], lane_end[static_cast<std::size_t>(b)]});
      batch.reset[static_cast<std::size_t>(b)] = first || p == seq_begin;
      const TrainSequence& s = sequences[seq];
      for (Index t = 0; t < stop - p; ++t) {
        const Index local = p - seq_begin + t;
        const auto r = static_cast<std::size_t>(t * B + b);
        batch.x.at(b, t) = s.features->row(local);
        batch.targets[r] = s.targets[static_cast<std::size_t>(local)];
        batch.mask[r] = s.mask[static_cast<std::size_t>(local)];
        if (batch.mask[r]) batch.origin[r] = p + t;
      }
      p = stop;
    }
    batches.push_back(std::move(batch));
    first = false;
  }
  return batches;
}

std::vector<Batch> stateful_batches(std::span<const Recording> recordings, const HypavConfig& hypav,
                                    std::uint64_t epoch_seed, std::uint64_t epoch_index) {
  if (recordings.empty()) throw ConfigError("stateful_batches: no training recordings");
  std::vector<TrainSequence> seqs;
  for (const auto& r : recordings) seqs.push_back(plain_sequence(r));
  return stateful_batches(seqs, hypav, recordings.front().sample_rate, epoch_seed, epoch_index);
}

}  // namespace sslstm
