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

#include "sslstm/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sslstm/ensemble.hpp"
#include "sslstm/experiments.hpp"

namespace sslstm::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  f << text;
  if (!f) throw DataError("cannot write " + path.string());
}

std::string resolve_path(const std::string& p, const std::string& base_dir) {
  fs::path path(p);
  if (path.is_relative() && !base_dir.empty()) path = fs::path(base_dir) / path;
  return fs::absolute(path).lexically_normal().string();
}

std::string base_of(const std::optional<std::string>& config) {
  return config ? fs::path(*config).parent_path().string() : std::string();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Writes every line to the console and to a log file.
class Tee {
 public:
  Tee(std::ostream& out, const fs::path& file) : out_(out), file_(file, std::ios::trunc) {}
  void line(const std::string& s) {
    out_ << s << "\n";
    file_ << s << "\n";
  }

 private:
  std::ostream& out_;
  std::ofstream file_;
};

std::vector<fs::path> checkpoints_in(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw DataError("no snapshot directory " + dir.string());
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".sslm") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

ojson norm_to_json(const NormStats& s) { return {{"mean", s.mean}, {"sd", s.sd}}; }

}  // namespace

// ---------------------------------------------------------------------------
// Run configs

RunConfig RunConfig::from_json(const nlohmann::json& j, const std::string& base_dir) {
  RunConfig c;
  try {
    if (!j.contains("manifest")) throw ConfigError("run config needs a \"manifest\"");
    c.manifest = resolve_path(j["manifest"].get<std::string>(), base_dir);
    if (!j.contains("split")) throw ConfigError("run config needs a \"split\"");
    c.split = split_from_json(j["split"]);
    c.normalize = j.value("normalize", c.normalize);
    c.decimate = j.value("decimate", c.decimate);
    if (j.contains("train")) c.train = TrainConfig::from_json(j["train"]);
    c.out = j.value("out", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  if (c.decimate < 1) throw ConfigError("decimate must be >= 1");
  return c;
}

ojson RunConfig::to_json() const {
  ojson j;
  j["manifest"] = manifest;
  j["split"] = split_to_json(split);
  j["normalize"] = normalize;
  j["decimate"] = decimate;
  j["train"] = train.to_json();
  j["out"] = out;
  return j;
}

namespace {

Dataset load_preprocessed(const RunConfig& rc) {
  Dataset ds = load_manifest(rc.manifest);
  if (rc.decimate > 1) {
    for (auto& r : ds.recordings) r = decimate(r, rc.decimate);
    ds.sample_rate /= rc.decimate;
  }
  return ds;
}

}  // namespace

LoadedRun load_run(const std::string& dir) {
  LoadedRun run;
  run.dir = dir;
  const fs::path cfg = fs::path(dir) / "config.json";
  if (!fs::exists(cfg)) throw DataError("not a training run (no config.json): " + dir);
  run.config = RunConfig::from_json(read_json(cfg.string()), "");
  const fs::path norm = fs::path(dir) / "normalizer.json";
  if (fs::exists(norm)) {
    const auto j = read_json(norm.string());
    run.norm.mean = j.at("mean").get<std::vector<double>>();
    run.norm.sd = j.at("sd").get<std::vector<double>>();
    run.has_norm = true;
  }
  const auto ckpts = checkpoints_in(fs::path(dir) / "snapshots");
  if (ckpts.empty()) throw DataError("run " + dir + " has no snapshots");
  for (const auto& p : ckpts) run.result.snapshots.push_back(load_snapshot(p.string()));
  std::sort(run.result.snapshots.begin(), run.result.snapshots.end(),
            [](const EpochSnapshot& a, const EpochSnapshot& b) { return a.epoch < b.epoch; });
  for (std::size_t k = 1; k < run.result.snapshots.size(); ++k)
    if (run.result.snapshots[k].val_score > run.result.snapshots[run.result.best].val_score) run.result.best = k;
  const Dataset probe = load_preprocessed(run.config);
  run.result.variant = run.config.train.resolve_variant(probe.sample_rate);
  return run;
}

Dataset load_run_dataset(const LoadedRun& run) {
  Dataset ds = load_preprocessed(run.config);
  if (run.has_norm) {
    if (static_cast<Index>(run.norm.mean.size()) != ds.channels())
      throw DataError("run " + run.dir + " was normalized over " + std::to_string(run.norm.mean.size()) +
                      " channels, dataset has " + std::to_string(ds.channels()));
    for (auto& r : ds.recordings) r = apply_normalizer(r, run.norm);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_synth(const Options& opts, std::ostream& out) {
  if (!opts.out) throw ConfigError("synth needs --out DIR");
  SynthConfig sc;
  std::uint64_t seed = 0;
  if (opts.config) {
    const auto j = read_json(*opts.config);
    sc = synth_from_json(j, sc);
    seed = j.value("seed", seed);
  }
  sc.validate();
  if (opts.seed) seed = *opts.seed;
  const Dataset ds = make_synthetic(sc, seed);
  write_dataset(ds, *opts.out);
  out << "wrote " << ds.recordings.size() << " recordings (" << ds.num_classes() << " classes, "
      << ds.channels() << " channels, " << ds.sample_rate << " Hz) to " << *opts.out << "\n";
  return kOk;
}

int cmd_train(const Options& opts, std::ostream& out) {
  if (!opts.config) throw ConfigError("train needs --config PATH");
  RunConfig rc = RunConfig::from_json(read_json(*opts.config), base_of(opts.config));
  if (opts.seed) rc.train.seed = *opts.seed;
  if (opts.delta) {
    rc.train.delta_seconds = *opts.delta;
    if (!opts.variant) rc.train.variant = VariantKind::delay;
  }
  if (opts.variant) rc.train.variant = parse_variant(*opts.variant);
  if (opts.out) rc.out = *opts.out;
  if (rc.out.empty()) throw ConfigError("train needs an output directory (--out or \"out\")");
  rc.train.validate();

  Dataset ds = load_preprocessed(rc);
  const auto split = rc.split.resolve(ds);
  if (split.train.empty()) throw ConfigError("train split is empty");
  if (split.validation.empty()) throw ConfigError("validation split is empty");

  const fs::path dir(rc.out);
  fs::create_directories(dir / "snapshots");
  if (rc.normalize) {
    std::vector<Recording> tr;
    for (auto i : split.train) tr.push_back(ds.recordings[i]);
    const NormStats st = fit_normalizer(tr);
    for (auto& r : ds.recordings) r = apply_normalizer(r, st);
    write_text(dir / "normalizer.json", norm_to_json(st).dump(2) + "\n");
  }
  const std::uint64_t hash = rc.train.hash();
  ojson cfg = rc.to_json();
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx", static_cast<unsigned long long>(hash));
  cfg["config_hash"] = hash_hex;
  write_text(dir / "config.json", cfg.dump(2) + "\n");

  Tee log(out, dir / "train_log.txt");
  const Variant v = rc.train.resolve_variant(ds.sample_rate);
  std::string vline = "variant " + variant_name(v.kind);
  if (v.kind == VariantKind::delay)
    vline += ": delta " + fmt("%g", rc.train.delta_seconds) + " s = " + std::to_string(v.delta) + " samples at " +
             fmt("%g", ds.sample_rate) + " Hz";
  log.line(vline);
  log.line("train " + std::to_string(split.train.size()) + " recordings, validation " +
           std::to_string(split.validation.size()) + ", " + std::to_string(rc.train.epochs) + " epochs, seed " +
           std::to_string(rc.train.seed));

  std::vector<const Recording*> tr, va;
  for (auto i : split.train) tr.push_back(&ds.recordings[i]);
  for (auto i : split.validation) va.push_back(&ds.recordings[i]);
  const TrainResult result = train(rc.train, tr, va, ds, [&](const EpochSnapshot& s) {
    save_snapshot(s, hash, (dir / "snapshots").string());
    log.line("epoch " + std::to_string(s.epoch) + " train_loss " + fmt("%.6f", s.train_loss) + " val_score " +
             fmt("%.6f", s.val_score));
  });

  const auto& best = result.best_snapshot();
  const MetricsReport rep = score_predictions(evaluate_model(best.params, va, result.variant), va, ds,
                                              rc.train.metric, rc.train.target_specificity);
  ojson report;
  report["subset"] = "validation";
  report["best_epoch"] = best.epoch;
  report["metrics"] = rep.to_json();
  write_text(dir / "report.json", report.dump(2) + "\n");
  log.line("best epoch " + std::to_string(best.epoch) + " val_score " + fmt("%.6f", best.val_score));
  return kOk;
}

int cmd_eval(const Options& opts, std::ostream& out) {
  nlohmann::json j = opts.config ? read_json(*opts.config) : nlohmann::json::object();
  const std::string base = base_of(opts.config);
  std::map<std::string, std::string> run_dirs;
  if (j.contains("runs"))
    for (auto& [id, path] : j["runs"].items()) run_dirs[id] = resolve_path(path.get<std::string>(), base);
  if (j.contains("run")) run_dirs["run"] = resolve_path(j["run"].get<std::string>(), base);
  if (opts.run) run_dirs["run"] = *opts.run;
  if (run_dirs.empty()) throw ConfigError("eval needs a training run (--run DIR or \"run\"/\"runs\" in --config)");

  std::map<std::string, LoadedRun> runs;
  for (const auto& [id, dir] : run_dirs) runs.emplace(id, load_run(dir));
  const LoadedRun& first = runs.begin()->second;
  const Dataset ds = load_run_dataset(first);
  const auto split = first.config.split.resolve(ds);
  const std::string subset = opts.subset ? *opts.subset : j.value("subset", std::string("test"));
  const auto& idx = subset == "test"         ? split.test
                    : subset == "validation" ? split.validation
                    : subset == "train"      ? split.train
                                             : throw ConfigError("unknown subset '" + subset + "'");
  if (idx.empty()) throw DataError("the " + subset + " split is empty");
  std::vector<const Recording*> recs;
  for (auto i : idx) recs.push_back(&ds.recordings[i]);

  auto check_dims = [&](const NetworkParams& p, const std::string& what) {
    if (p.dims.input != ds.channels() || p.dims.classes != ds.num_classes())
      throw DataError(what + " has dims D=" + std::to_string(p.dims.input) + " C=" + std::to_string(p.dims.classes) +
                      ", dataset has D=" + std::to_string(ds.channels()) + " C=" + std::to_string(ds.num_classes()));
  };

  std::optional<std::string> ens;
  if (opts.ensemble) ens = *opts.ensemble;
  std::vector<ProbSeries> preds;
  if (ens || j.contains("ensemble")) {
    const EnsembleSpec spec = ens ? EnsembleSpec::parse(*ens)
                              : j["ensemble"].is_string() ? EnsembleSpec::parse(j["ensemble"].get<std::string>())
                                                          : EnsembleSpec::from_json(j["ensemble"]);
    std::map<std::string, TrainResult> results;
    for (const auto& [id, r] : runs) results[id] = r.result;
    const FusedPredictor fp = build_multi_source(spec, results);
    std::string counts;
    for (const auto& s : spec.sources) counts += (counts.empty() ? "" : ", ") + s.run_id + " " + std::to_string(s.count);
    out << "ensemble " << spec.shorthand() << ": " << counts << " (" << spec.total() << " members, rule "
        << rule_name(spec.rule) << ")\n";
    for (const auto& m : fp.members()) check_dims(m.snapshot.params, "member " + m.run_id);
    preds = fp.predict(recs);
  } else {
    if (runs.size() != 1) throw ConfigError("several runs given without an ensemble spec");
    EpochSnapshot snap = first.result.best_snapshot();
    const std::optional<std::string> snap_path =
        opts.snapshot ? opts.snapshot
                      : (j.contains("snapshot") ? std::optional(resolve_path(j["snapshot"].get<std::string>(), base))
                                                : std::nullopt);
    if (snap_path) snap = load_snapshot(*snap_path);
    check_dims(snap.params, "checkpoint");
    out << "snapshot epoch " << snap.epoch << " (" << variant_name(first.result.variant.kind) << ")\n";
    preds = evaluate_model(snap.params, recs, first.result.variant);
  }

  const TrainConfig& tc = first.config.train;
  const MetricsReport rep = score_predictions(preds, recs, ds, tc.metric, tc.target_specificity);
  ojson report;
  report["subset"] = subset;
  report["metrics"] = rep.to_json();
  out << rep.table();
  const std::optional<std::string> dest = opts.out ? opts.out : (j.contains("out") ? std::optional(resolve_path(j["out"].get<std::string>(), base)) : std::nullopt);
  if (dest) {
    fs::create_directories(*dest);
    write_text(fs::path(*dest) / "metrics.json", report.dump(2) + "\n");
    write_text(fs::path(*dest) / "metrics.txt", rep.table());
  }
  return kOk;
}

int cmd_gradcheck(const Options& opts, std::ostream& out) {
  NetworkDims dims{6, 16, 4, 2};
  Index steps = 8, lanes = 3;
  GradCheckOptions gc;
  if (opts.config) {
    const auto j = read_json(*opts.config);
    dims.input = j.value("input", dims.input);
    dims.hidden = j.value("hidden", dims.hidden);
    dims.classes = j.value("classes", dims.classes);
    dims.layers = j.value("layers", dims.layers);
    steps = j.value("steps", steps);
    lanes = j.value("lanes", lanes);
    gc.epsilon = j.value("epsilon", gc.epsilon);
  }
  try {
    dims.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  if (steps < 1 || lanes < 1) throw ConfigError("gradcheck needs steps and lanes >= 1");
  gc.corrupt_recurrent_scale = opts.corrupt_scale;
  const std::uint64_t seed = opts.seed.value_or(0);

  const NetworkParams net = init_params(dims, seed);
  RngStream rng(seed, stream_id(StreamPurpose::experiment));
  SequenceBatch x(lanes, steps, dims.input);
  for (Index i = 0; i < x.matrix().size(); ++i) x.matrix().data()[i] = rng_normal(rng, 0.0, 1.0);
  std::vector<int> targets(static_cast<std::size_t>(lanes * steps));
  for (auto& t : targets) t = static_cast<int>(rng_int(rng, 0, dims.classes - 1));
  const std::vector<std::uint8_t> mask(targets.size(), 1);

  const GradCheckResult r = gradient_check(net, x, targets, mask, gc);
  const bool pass = r.max_rel_error <= opts.threshold;
  out << "max relative error " << fmt("%.3e", r.max_rel_error) << " at " << r.worst_parameter << " over "
      << r.checked << " parameters (threshold " << fmt("%.1e", opts.threshold) << "): " << (pass ? "PASS" : "FAIL")
      << "\n";
  return pass ? kOk : kFailure;
}

int cmd_experiment(const Options& opts, std::ostream& out) {
  std::string name = opts.experiment;
  nlohmann::json j = opts.config ? read_json(*opts.config) : nlohmann::json::object();
  if (name.empty()) name = j.value("name", std::string());
  if (name.empty()) throw ConfigError("experiment needs a name (delay-sweep, inverse-fusion, hypav, multi-source)");
  if (j.contains("manifest")) j["manifest"] = resolve_path(j["manifest"].get<std::string>(), base_of(opts.config));
  ExperimentConfig cfg = ExperimentConfig::from_json(j, name, opts.full_scale);
  if (opts.seed) {
    const std::size_t n = cfg.seeds.size();
    cfg.seeds.clear();
    for (std::size_t k = 0; k < n; ++k) cfg.seeds.push_back(*opts.seed + k);
  }
  if (opts.delta) {
    if (cfg.name == "delay-sweep")
      cfg.deltas_seconds = {0.0, *opts.delta};
    else
      cfg.delta_seconds = *opts.delta;
  }
  cfg.validate();

  out << "experiment " << cfg.name << (cfg.full_scale ? " (full scale)" : " (synthetic)") << "\n";
  const ExperimentTable table = run_experiment(cfg, &out);
  const std::string text = table.render();
  out << text;
  if (opts.out) {
    const fs::path dir(*opts.out);
    fs::create_directories(dir);
    write_text(dir / "config.json", cfg.to_json().dump(2) + "\n");
    write_text(dir / "summary.txt", text);
    write_text(dir / "summary.json", table.to_json().dump(2) + "\n");
  }
  return kOk;
}

int run(const Options& opts, std::ostream& out, std::ostream& err) {
  try {
    if (opts.command == "synth") return cmd_synth(opts, out);
    if (opts.command == "train") return cmd_train(opts, out);
    if (opts.command == "eval") return cmd_eval(opts, out);
    if (opts.command == "gradcheck") return cmd_gradcheck(opts, out);
    if (opts.command == "experiment") return cmd_experiment(opts, out);
    err << "error: unknown command '" << opts.command << "'\n";
    return kConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const TrainingError& e) {
    err << "training error: " << e.what() << "\n";
    return kFailure;
  } catch (const EvaluationError& e) {
    err << "evaluation error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace sslstm::cli
