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

#include "sslstm/training.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace sslstm {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

HypavConfig hypav_from_json(const nlohmann::json& h, HypavConfig hv) {
  try {
    hv.window_min_seconds = h.value("window_min_seconds", hv.window_min_seconds);
    hv.window_max_seconds = h.value("window_max_seconds", hv.window_max_seconds);
    if (h.contains("batch_size_choices")) hv.batch_size_choices = h["batch_size_choices"].get<std::vector<int>>();
    hv.resample_offsets = h.value("resample_offsets", hv.resample_offsets);
    if (h.contains("fixed_window_seconds"))
      hv.fixed_window_seconds = h["fixed_window_seconds"].is_null() ? std::nullopt
                                                                    : std::optional(h["fixed_window_seconds"].get<double>());
    if (h.contains("fixed_batch_size"))
      hv.fixed_batch_size = h["fixed_batch_size"].is_null() ? std::nullopt
                                                            : std::optional(h["fixed_batch_size"].get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("hypav config: ") + e.what());
  }
  hv.validate();
  return hv;
}

nlohmann::ordered_json hypav_to_json(const HypavConfig& hypav) {
  nlohmann::ordered_json h;
  h["window_min_seconds"] = hypav.window_min_seconds;
  h["window_max_seconds"] = hypav.window_max_seconds;
  h["batch_size_choices"] = hypav.batch_size_choices;
  h["resample_offsets"] = hypav.resample_offsets;
  h["fixed_window_seconds"] = hypav.fixed_window_seconds ? nlohmann::ordered_json(*hypav.fixed_window_seconds) : nullptr;
  h["fixed_batch_size"] = hypav.fixed_batch_size ? nlohmann::ordered_json(*hypav.fixed_batch_size) : nullptr;
  return h;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout_p must lie in [0, 1)");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  if (!(delta_seconds >= 0.0)) throw ConfigError("delta must be nonnegative");
  if (hidden < 1 || layers < 1) throw ConfigError("hidden and layers must be >= 1");
  if (!(target_specificity > 0.0 && target_specificity <= 1.0))
    throw ConfigError("target_specificity must lie in (0, 1]");
  hypav.validate();
}

Variant TrainConfig::resolve_variant(double sample_rate) const {
  switch (variant) {
    case VariantKind::delay: return Variant::delay(delta_to_samples(delta_seconds, sample_rate));
    case VariantKind::inverse: return Variant::inverse();
    case VariantKind::standard: break;
  }
  return Variant::standard();
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["variant"] = variant_name(variant);
  j["delta_seconds"] = delta_seconds;
  j["epochs"] = epochs;
  j["learning_rate"] = learning_rate;
  j["dropout_p"] = dropout_p;
  j["clip_norm"] = clip_norm;
  j["hypav"] = hypav_to_json(hypav);
  j["seed"] = seed;
  j["hidden"] = hidden;
  j["layers"] = layers;
  j["metric"] = metric == MetricMode::binary ? "binary" : "multiclass";
  j["target_specificity"] = target_specificity;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    if (j.contains("variant")) c.variant = parse_variant(j["variant"].get<std::string>());
    c.delta_seconds = j.value("delta_seconds", c.delta_seconds);
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.dropout_p = j.value("dropout_p", c.dropout_p);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.seed = j.value("seed", c.seed);
    c.hidden = j.value("hidden", c.hidden);
    c.layers = j.value("layers", c.layers);
    c.target_specificity = j.value("target_specificity", c.target_specificity);
    if (j.contains("metric")) {
      const auto m = j["metric"].get<std::string>();
      if (m == "binary")
        c.metric = MetricMode::binary;
      else if (m == "multiclass")
        c.metric = MetricMode::multiclass;
      else
        throw ConfigError("unknown metric '" + m + "' (expected multiclass or binary)");
    }
    if (j.contains("hypav")) c.hypav = hypav_from_json(j["hypav"], c.hypav);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t TrainConfig::hash() const {
  const std::string s = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Optimizer

AdamState AdamState::zeros(const NetworkDims& dims) {
  return {NetworkParams::zeros(dims), NetworkParams::zeros(dims), 0};
}

double global_norm(const NetworkParams& grads) {
  double s = 0.0;
  grads.for_each([&](const Matrix& m) { s += squared_norm(m); });
  return std::sqrt(s);
}

double clip_global_norm(NetworkParams& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    grads.for_each([&](Matrix& m) { m *= scale; });
  }
  return norm;
}

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state, double lr) {
  if (!(params.dims == grads.dims) || !(params.dims == state.m.dims))
    throw ShapeError("adam_step: params, grads and optimizer state disagree on dims");
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  std::vector<Matrix*> p, m, v;
  std::vector<const Matrix*> g;
  params.for_each([&](Matrix& x) { p.push_back(&x); });
  state.m.for_each([&](Matrix& x) { m.push_back(&x); });
  state.v.for_each([&](Matrix& x) { v.push_back(&x); });
  grads.for_each([&](const Matrix& x) { g.push_back(&x); });
  for (std::size_t k = 0; k < p.size(); ++k) {
    double* pd = p[k]->data();
    double* md = m[k]->data();
    double* vd = v[k]->data();
    const double* gd = g[k]->data();
    for (Index e = 0; e < p[k]->size(); ++e) {
      md[e] = kAdamBeta1 * md[e] + (1.0 - kAdamBeta1) * gd[e];
      vd[e] = kAdamBeta2 * vd[e] + (1.0 - kAdamBeta2) * gd[e] * gd[e];
      const double m_hat = md[e] / c1;
      const double v_hat = vd[e] / c2;
      pd[e] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
    }
  }
}

// ---------------------------------------------------------------------------
// Inference

ProbSeries predict_recording(const NetworkParams& params, const Recording& rec, const Variant& variant) {
  if (rec.channels() != params.dims.input)
    throw ShapeError("recording " + rec.id + " has " + std::to_string(rec.channels()) + " channels, network expects " +
                     std::to_string(params.dims.input));
  const bool inverse = variant.kind == VariantKind::inverse;
  Matrix x = inverse ? Matrix(rec.features.colwise().reverse()) : rec.features;
  const auto fw = forward_window(params, SequenceBatch::single_lane(std::move(x)),
                                 zero_states<double>(params.dims, 1), Mode::infer, 0.0, nullptr, false);
  ProbSeries raw{fw.probs.matrix(), std::vector<std::uint8_t>(static_cast<std::size_t>(rec.length()), 1)};
  if (inverse) return uninvert_probs(raw);
  if (variant.kind == VariantKind::delay) return realign_delayed(raw, variant.delta);
  return raw;
}

std::vector<ProbSeries> evaluate_model(const NetworkParams& params, const std::vector<const Recording*>& recordings,
                                       const Variant& variant) {
  std::vector<ProbSeries> out;
  out.reserve(recordings.size());
  for (const Recording* r : recordings) out.push_back(predict_recording(params, *r, variant));
  return out;
}

MetricsReport score_predictions(const std::vector<ProbSeries>& preds, const std::vector<const Recording*>& recordings,
                                const Dataset& catalog, MetricMode mode, double target_specificity) {
  std::vector<const std::vector<int>*> labels;
  for (const Recording* r : recordings) labels.push_back(&r->labels);
  return evaluate_series(preds, labels, catalog.class_names, catalog.null_class, mode, target_specificity);
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(const TrainConfig& config, const Dataset& dataset, const SplitSpec& split,
                  const EpochCallback& on_epoch) {
  const auto resolved = split.resolve(dataset);
  std::vector<const Recording*> tr, va;
  for (auto i : resolved.train) tr.push_back(&dataset.recordings[i]);
  for (auto i : resolved.validation) va.push_back(&dataset.recordings[i]);
  return train(config, tr, va, dataset, on_epoch);
}

TrainResult train(const TrainConfig& config, const std::vector<const Recording*>& train_set,
                  const std::vector<const Recording*>& validation_set, const Dataset& catalog,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_set.empty()) throw ConfigError("train split is empty");
  if (validation_set.empty()) throw ConfigError("validation split is empty");
  const double rate = catalog.sample_rate;
  const Variant variant = config.resolve_variant(rate);

  // Inverse runs train on time-reversed copies.
  std::vector<Recording> inverted;
  if (variant.kind == VariantKind::inverse)
    for (const Recording* r : train_set) inverted.push_back(invert_recording(*r));
  std::vector<TrainSequence> seqs;
  for (std::size_t k = 0; k < train_set.size(); ++k) {
    const Recording& r = variant.kind == VariantKind::inverse ? inverted[k] : *train_set[k];
    try {
      seqs.push_back(variant_sequence(r, variant));
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("delay does not fit recording ") + r.id + ": " + e.what());
    }
  }

  const NetworkDims dims{train_set.front()->channels(), config.hidden, catalog.num_classes(), config.layers};
  NetworkParams params = init_params(dims, config.seed);
  AdamState adam = AdamState::zeros(dims);

  TrainResult result;
  result.variant = variant;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto batches = stateful_batches(seqs, config.hypav, rate, config.seed, static_cast<std::uint64_t>(epoch));
    RngStream dropout_rng(config.seed, stream_id(StreamPurpose::dropout, static_cast<std::uint64_t>(epoch)));
    const Index B = batches.empty() ? 1 : batches.front().lanes();
    auto state = zero_states<double>(dims, B);
    double loss_sum = 0.0;
    Index counted = 0;
    for (const Batch& batch : batches) {
      for (Index b = 0; b < B; ++b) {
        if (!batch.reset[static_cast<std::size_t>(b)]) continue;
        for (auto& s : state) {
          s.h.row(b).setZero();
          s.c.row(b).setZero();
        }
      }
      auto fw = forward_window(params, batch.x, state, Mode::train, config.dropout_p, &dropout_rng);
      state = std::move(fw.state);
      BackwardResult bw = backward_window(params, fw.cache, batch.targets, batch.mask);
      if (bw.counted == 0) continue;
      if (!std::isfinite(bw.loss))
        throw TrainingError("training diverged (non-finite loss) in epoch " + std::to_string(epoch + 1));
      loss_sum += bw.loss * static_cast<double>(bw.counted);
      counted += bw.counted;
      clip_global_norm(bw.grads, config.clip_norm);
      adam_step(params, bw.grads, adam, config.learning_rate);
    }
    if (!all_finite(params.layers.front().w_h))
      throw TrainingError("training diverged (non-finite weights) in epoch " + std::to_string(epoch + 1));

    EpochSnapshot snap;
    snap.epoch = epoch + 1;
    snap.params = params;
    snap.train_loss = counted ? loss_sum / static_cast<double>(counted) : 0.0;
    const auto preds = evaluate_model(params, validation_set, variant);
    snap.val_score = score_predictions(preds, validation_set, catalog, config.metric, config.target_specificity)
                         .primary(config.metric);
    if (on_epoch) on_epoch(snap);
    result.snapshots.push_back(std::move(snap));
    if (result.snapshots.back().val_score > result.snapshots[result.best].val_score)
      result.best = result.snapshots.size() - 1;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Snapshot files

std::string snapshot_stem(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03d", epoch);
  return buf;
}

void save_snapshot(const EpochSnapshot& snap, std::uint64_t config_hash, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path base = fs::path(dir) / snapshot_stem(snap.epoch);
  save_checkpoint(snap.params, base.string() + ".sslm");
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config_hash));
  nlohmann::ordered_json j;
  j["epoch"] = snap.epoch;
  j["val_score"] = snap.val_score;
  j["train_loss"] = snap.train_loss;
  j["config_hash"] = hex;
  std::ofstream out(base.string() + ".json", std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("cannot write snapshot sidecar in " + dir);
}

EpochSnapshot load_snapshot(const std::string& checkpoint_path) {
  EpochSnapshot snap;
  snap.params = load_checkpoint(checkpoint_path);
  const fs::path sidecar = fs::path(checkpoint_path).replace_extension(".json");
  std::ifstream in(sidecar);
  if (!in) throw DataError("missing snapshot sidecar " + sidecar.string());
  try {
    const auto j = nlohmann::json::parse(in);
    snap.epoch = j.at("epoch").get<int>();
    snap.val_score = j.at("val_score").get<double>();
    snap.train_loss = j.at("train_loss").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("snapshot sidecar " + sidecar.string() + ": " + e.what());
  }
  return snap;
}

}  // namespace sslstm
