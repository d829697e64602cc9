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

#include <iostream>

#include "CLI11.hpp"
#include "sslstm/cli.hpp"

int main(int argc, char** argv) {
  sslstm::cli::Options opts;
  CLI::App app{"Sporadic-event sequence labeling with stateful LSTMs"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "JSON configuration file");
    sub->add_option("--seed", opts.seed, "Random seed");
    sub->add_option("--out", opts.out, "Output directory");
  };

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  common(synth);

  auto* train = app.add_subcommand("train", "Train one model and save every epoch's snapshot");
  common(train);
  train->add_option("--delta", opts.delta, "Prediction delay in seconds (implies the delay variant)");
  train->add_option("--variant", opts.variant, "standard | delay | inverse");

  auto* eval = app.add_subcommand("eval", "Score a snapshot or an ensemble on a data subset");
  common(eval);
  eval->add_option("--run", opts.run, "Training run directory");
  eval->add_option("--snapshot", opts.snapshot, "Checkpoint to score instead of the best epoch");
  eval->add_option("--ensemble", opts.ensemble, "Composition, e.g. 'lstm(6)+dly(7)+inv(7)'");
  eval->add_option("--subset", opts.subset, "test | validation | train");

  auto* grad = app.add_subcommand("gradcheck", "Compare analytic and numeric gradients");
  common(grad);
  grad->add_option("--threshold", opts.threshold, "Largest acceptable relative error");
  grad->add_option("--corrupt-grad", opts.corrupt_scale, "Scale the recurrent gradients (debug)");

  auto* exp = app.add_subcommand("experiment", "Run a named comparison experiment");
  common(exp);
  exp->add_option("name", opts.experiment, "delay-sweep | inverse-fusion | hypav | multi-source");
  exp->add_option("--delta", opts.delta, "Delay in seconds");
  exp->add_flag("--full-scale", opts.full_scale, "Use a real dataset manifest and full-size models");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return sslstm::cli::kConfig;
  }
  opts.command = app.get_subcommands().front()->get_name();
  return sslstm::cli::run(opts, std::cout, std::cerr);
}
