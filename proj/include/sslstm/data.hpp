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
#include <span>
#include <string>
#include <vector>

#include "sslstm/network.hpp"
#include "sslstm/numcore.hpp"

namespace sslstm {

/// One labeled multichannel session (a subject's run).
struct Recording {
  std::string id;
  std::string subject;
  std::string run;
  Matrix features;          // T x D
  std::vector<int> labels;  // length T, 0-based class ids
  double sample_rate = 0.0;

  Index length() const { return features.rows(); }
  Index channels() const { return features.cols(); }

  friend bool operator==(const Recording&, const Recording&) = default;
};

struct Dataset {
  std::vector<Recording> recordings;
  std::vector<std::string> class_names;
  std::optional<int> null_class;
  double sample_rate = 0.0;

  int num_classes() const { return static_cast<int>(class_names.size()); }
  Index channels() const { return recordings.empty() ? 0 : recordings.front().channels(); }

  /// Throws DataError when labels fall outside the class catalog, rates
  /// differ, or channel counts disagree.
  void validate() const;
};

// ---------------------------------------------------------------------------
// CSV and manifest I/O

struct CsvSchema {
  std::string label_column = "label";
  /// Empty means every column named f<k>, ordered by k.
  std::vector<std::string> feature_columns;
  std::optional<std::string> timestamp_column;
};

/// Parses one recording. Labels may be integer ids or class names; empty
/// or "nan" feature cells become NaN for later imputation.
Recording load_csv(const std::string& path, const CsvSchema& schema,
                   const std::vector<std::string>& class_names, double sample_rate);

/// Header `timestamp,f0..f{D-1},label`; timestamps are t / sample_rate.
void write_csv(const Recording& rec, const std::string& path);

/// Manifest JSON: {"class_names": [...], "null_class": k|null,
/// "sample_rate": hz, "recordings": [{"path", "subject", "run"}]}.
/// Relative paths resolve against the manifest's directory.
Dataset load_manifest(const std::string& path);

/// Writes one `subject<S>_run<R>.csv` per recording plus `manifest.json`.
void write_dataset(const Dataset& ds, const std::string& dir);

// ---------------------------------------------------------------------------
// Preprocessing

struct NormStats {
  std::vector<double> mean;
  std::vector<double> sd;
};

/// Per-channel mean and population sd over all non-NaN training samples.
NormStats fit_normalizer(std::span<const Recording> train);

/// Forward-fills NaNs (leading NaNs take the channel mean), then z-scores.
/// Channels with sd < 1e-12 are only centered.
Recording apply_normalizer(const Recording& rec, const NormStats& stats);

/// Keeps samples 0, factor, 2*factor, ...
Recording decimate(const Recording& rec, int factor);

// ---------------------------------------------------------------------------
// Synthetic sporadic-event data

enum class LabelMode { onset, pre_onset, post_offset };

struct ClassCue {
  LabelMode mode = LabelMode::onset;
  int offset = 0;  // k for pre_onset / post_offset
};

struct SynthConfig {
  int channels = 3;
  int classes = 3;  // class 0 is null
  int recordings = 4;
  int length = 1000;
  double sample_rate = 30.0;
  double event_rate = 0.5;  // events per second
  int event_min = 10;       // event signal length range, samples
  int event_max = 20;
  double noise_sd = 0.1;
  double amplitude = 1.0;
  /// Samples at each end of an event ramped by a raised-cosine (Hann) taper.
  int taper = 0;
  int min_gap = 10;  // minimum null samples between event footprints
  /// Cue per class 1..C-1; a single entry applies to every class.
  std::vector<ClassCue> cues{ClassCue{}};
  int subjects = 1;  // recordings are spread round-robin over subjects

  void validate() const;
  const ClassCue& cue_for(int cls) const;
};

/// Null background N(0, noise_sd) with non-overlapping class events. An
/// event of class c adds amplitude * envelope(n) * cos(2 pi (2 + c) n / fs)
/// onto channels c mod D and (c + 1) mod D; its labels follow the class cue.
Dataset make_synthetic(const SynthConfig& cfg, std::uint64_t seed);

/// Long-run fraction of samples labeled with each class under `cfg`.
std::vector<double> expected_class_priors(const SynthConfig& cfg);

// ---------------------------------------------------------------------------
// Splits

struct Selector {
  std::string subject;
  std::string run = "*";  // "*" matches every run

  bool matches(const Recording& r) const;
};

struct SplitSpec {
  std::vector<Selector> train;  // empty: every recording not otherwise selected
  std::vector<Selector> validation;
  std::vector<Selector> test;
  std::vector<Selector> exclude;

  void validate() const;  // pairwise disjoint selector sets

  struct Resolved {
    std::vector<std::size_t> train, validation, test;
  };
  Resolved resolve(const Dataset& ds) const;

  /// Hold-out protocols: "opp", "dg", "pamap2".
  static SplitSpec preset(const std::string& name);
};

// ---------------------------------------------------------------------------
// Stateful batching

struct HypavConfig {
  double window_min_seconds = 0.5;
  double window_max_seconds = 2.0;
  std::vector<int> batch_size_choices{8};
  bool resample_offsets = true;
  std::optional<double> fixed_window_seconds;
  std::optional<int> fixed_batch_size;

  void validate() const;
  /// The configuration used without the strategy: fixed window and batch.
  static HypavConfig fixed(double window_seconds, int batch_size);
};

struct Batch {
  SequenceBatch x;                    // B x L x D
  std::vector<int> targets;           // step-major, B * L
  std::vector<std::uint8_t> mask;     // step-major, B * L
  std::vector<std::uint8_t> reset;    // per lane: zero the state first
  /// Where each unmasked (lane, step) came from, step-major; -1 if masked.
  std::vector<std::int64_t> origin;

  Index lanes() const { return x.lanes(); }
  Index steps() const { return x.steps(); }
};

/// A training sequence: features with per-step targets and a loss mask.
struct TrainSequence {
  const Matrix* features = nullptr;
  std::vector<int> targets;
  std::vector<std::uint8_t> mask;
};

/// One epoch of stateful mini-batches over the concatenated timeline.
///
/// The batch size is drawn once per epoch, the timeline is cut into that
/// many contiguous near-equal lanes, and each lane may start at a random
/// offset below the first window length. Every batch draws its own window
/// length. A lane's window stops at a recording boundary (remaining steps
/// are masked) and the next window opens the new recording with a reset.
/// The epoch ends when any lane runs out of samples. Batch::origin indexes
/// the concatenated timeline.
std::vector<Batch> stateful_batches(std::span<const TrainSequence> sequences, const HypavConfig& hypav,
                                    double sample_rate, std::uint64_t epoch_seed, std::uint64_t epoch_index);

std::vector<Batch> stateful_batches(std::span<const Recording> recordings, const HypavConfig& hypav,
                                    std::uint64_t epoch_seed, std::uint64_t epoch_index);

/// Labels as targets with an all-true mask.
TrainSequence plain_sequence(const Recording& rec);

/// Window length in samples for a duration, never below one.
Index window_samples(double seconds, double sample_rate);

}  // namespace sslstm
