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

#include "sslstm/variants.hpp"

#include <algorithm>
#include <cmath>

namespace sslstm {

Index ProbSeries::valid_count() const {
  Index n = 0;
  for (auto v : valid) n += v ? 1 : 0;
  return n;
}

std::vector<int> argmax_labels(const ProbSeries& p) {
  std::vector<int> out(static_cast<std::size_t>(p.length()), 0);
  for (Index t = 0; t < p.length(); ++t) {
    Index best = 0;
    for (Index c = 1; c < p.classes(); ++c)
      if (p.probs(t, c) > p.probs(t, best)) best = c;
    out[static_cast<std::size_t>(t)] = static_cast<int>(best);
  }
  return out;
}

Index delta_to_samples(double delta_seconds, double sample_rate) {
  if (!(delta_seconds >= 0.0) || !(sample_rate >= 0.0))
    throw ArgumentError("delta_to_samples: delta and sample rate must be nonnegative");
  return static_cast<Index>(std::llround(delta_seconds * sample_rate));
}

std::string variant_name(VariantKind kind) {
  switch (kind) {
    case VariantKind::standard: return "standard";
    case VariantKind::delay: return "delay";
    case VariantKind::inverse: return "inverse";
  }
  return "standard";
}

VariantKind parse_variant(const std::string& name) {
  if (name == "standard") return VariantKind::standard;
  if (name == "delay") return VariantKind::delay;
  if (name == "inverse") return VariantKind::inverse;
  throw ConfigError("unknown variant '" + name + "' (expected standard, delay or inverse)");
}

DelayedTargets delay_targets(const std::vector<int>& labels, Index delta) {
  const Index T = static_cast<Index>(labels.size());
  if (delta < 0 || delta >= T)
    throw ArgumentError("delay_targets: delta " + std::to_string(delta) + " must lie in [0, " + std::to_string(T) + ")");
  DelayedTargets out{std::vector<int>(labels.size(), 0), std::vector<std::uint8_t>(labels.size(), 0)};
  for (Index s = delta; s < T; ++s) {
    out.targets[static_cast<std::size_t>(s)] = labels[static_cast<std::size_t>(s - delta)];
    out.mask[static_cast<std::size_t>(s)] = 1;
  }
  return out;
}

ProbSeries realign_delayed(const ProbSeries& raw, Index delta) {
  const Index T = raw.length();
  if (delta < 0 || (delta >= T && T > 0))
    throw ArgumentError("realign_delayed: delta " + std::to_string(delta) + " must lie in [0, " + std::to_string(T) + ")");
  ProbSeries out{Matrix::Zero(T, raw.classes()), std::vector<std::uint8_t>(static_cast<std::size_t>(T), 0)};
  for (Index t = 0; t + delta < T; ++t) {
    out.probs.row(t) = raw.probs.row(t + delta);
    out.valid[static_cast<std::size_t>(t)] = raw.valid[static_cast<std::size_t>(t + delta)];
  }
  return out;
}

Recording invert_recording(const Recording& r) {
  Recording out = r;
  out.features = r.features.colwise().reverse();
  std::reverse(out.labels.begin(), out.labels.end());
  return out;
}

ProbSeries uninvert_probs(const ProbSeries& p) {
  ProbSeries out;
  out.probs = p.probs.colwise().reverse();
  out.valid.assign(p.valid.rbegin(), p.valid.rend());
  return out;
}

TrainSequence variant_sequence(const Recording& rec, const Variant& v) {
  if (v.kind != VariantKind::delay) return plain_sequence(rec);
  auto d = delay_targets(rec.labels, v.delta);
  return {&rec.features, std::move(d.targets), std::move(d.mask)};
}

FusionAlignment align_for_fusion(const std::vector<ProbSeries>& series) {
  if (series.empty()) throw ArgumentError("align_for_fusion: no members");
  const Index T = series.front().length(), C = series.front().classes();
  for (const auto& s : series)
    if (s.length() != T || s.classes() != C || static_cast<Index>(s.valid.size()) != T)
      throw ShapeError("align_for_fusion: member is " + shape_string(s.probs) + ", expected " + std::to_string(T) +
                       "x" + std::to_string(C));
  FusionAlignment a;
  a.mean = Matrix::Zero(T, C);
  a.counts.assign(static_cast<std::size_t>(T), 0);
  a.all_valid.assign(static_cast<std::size_t>(T), 0);
  a.any_valid.assign(static_cast<std::size_t>(T), 0);
  const int M = static_cast<int>(series.size());
  for (Index t = 0; t < T; ++t) {
    int n = 0;
    for (const auto& s : series) {
      if (!s.valid[static_cast<std::size_t>(t)]) continue;
      a.mean.row(t) += s.probs.row(t);
      ++n;
    }
    if (n > 0) a.mean.row(t) /= static_cast<double>(n);
    a.counts[static_cast<std::size_t>(t)] = n;
    a.all_valid[static_cast<std::size_t>(t)] = n == M;
    a.any_valid[static_cast<std::size_t>(t)] = n > 0;
  }
  return a;
}

}  // namespace sslstm
