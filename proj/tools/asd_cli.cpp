// Copyright 2026 The asdkit Authors
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

// asd: command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "asd/cli.hpp"

namespace {

int exit_code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const asd::ConfigError& x) {
    asd::logger()->error("{}", x.what());
    return 2;
  } catch (const asd::NumericError& x) {
    asd::logger()->error("{}", x.what());
    return 4;
  } catch (const asd::Error& x) {  // DataError, InvalidInput
    asd::logger()->error("{}", x.what());
    return 3;
  } catch (const std::filesystem::filesystem_error& x) {
    asd::logger()->error("{}", x.what());
    return 3;
  } catch (const std::exception& x) {
    asd::logger()->error("{}", x.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anomalous machine sound detection toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  asd::Overrides o;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string model, pooling, dataset_root, output_dir;
  auto* seed_opt = app.add_option("--seed", seed, "Seed (replaces the configured seed list)");
  auto* jobs_opt = app.add_option("--jobs", jobs, "Worker threads across experiment cells");
  auto* model_opt = app.add_option("--model", model, "Model tag");
  auto* pooling_opt = app.add_option("--pooling", pooling, "Score pooling: mean or sum");
  auto* root_opt = app.add_option("--dataset-root", dataset_root, "Dataset root directory");
  auto* out_opt = app.add_option("--output-dir", output_dir, "Output directory");
  app.add_option("--config", config_path, "JSON run configuration");

  auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark");

  auto* melspec = app.add_subcommand("melspec", "Log-Mel spectrogram of one WAV file");
  std::string mel_in, mel_out, mel_format = "csv";
  melspec->add_option("wav", mel_in, "Input WAV")->required();
  melspec->add_option("out", mel_out, "Output file")->required();
  melspec->add_option("--format", mel_format, "csv or fvec")->check(CLI::IsMember({"csv", "fvec"}));

  auto* train = app.add_subcommand("train", "Train one model per machine/SNR combination");
  std::vector<std::string> train_inputs;
  train->add_option("inputs", train_inputs, "Optional normal-only WAV files or directories");

  auto* score = app.add_subcommand("score", "Score recordings with a trained model");
  std::string model_path;
  std::vector<std::string> score_inputs;
  score->add_option("--model-path", model_path, "Model JSON written by train")->required();
  score->add_option("inputs", score_inputs, "WAV/FVEC files or directories")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Run the evaluation protocol");
  auto* sweep = app.add_subcommand("sweep", "Sweep mixture size and covariance type");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*seed_opt) o.seed = seed;
    if (*jobs_opt) o.jobs = jobs;
    if (*model_opt) o.model = model;
    if (*pooling_opt) o.pooling = pooling;
    if (*root_opt) o.dataset_root = dataset_root;
    if (*out_opt) o.output_dir = output_dir;
    std::optional<std::filesystem::path> cp;
    if (!config_path.empty()) cp = config_path;
    const asd::RunConfig cfg = asd::resolve_config(cp, o);

    if (*synth) {
      std::cout << asd::cmd_synth(cfg) << "\n";
    } else if (*melspec) {
      std::cout << asd::cmd_melspec(mel_in, mel_out, cfg.pipeline.mel,
                                    mel_format == "fvec" ? asd::MelFormat::fvec : asd::MelFormat::csv)
                << "\n";
    } else if (*train) {
      std::vector<std::filesystem::path> in(train_inputs.begin(), train_inputs.end());
      for (const auto& p : asd::cmd_train(cfg, in)) std::cout << "wrote " << p.string() << "\n";
    } else if (*score) {
      std::vector<std::filesystem::path> in(score_inputs.begin(), score_inputs.end());
      std::optional<asd::Pooling> pool;
      if (o.pooling) pool = cfg.pipeline.pooling;
      const auto rows = asd::cmd_score(cfg, model_path, in, pool);
      std::cout << "scored " << rows.size() << " recordings -> " << (cfg.output_dir / "scores.csv").string()
                << "\n";
    } else if (*evaluate) {
      const auto report = asd::cmd_evaluate(cfg);
      std::cout << asd::summarize(report);
    } else if (*sweep) {
      const auto table = asd::cmd_sweep(cfg);
      std::cout << table.to_csv();
      if (!table.errors.empty()) return 4;
    }
  } catch (...) {
    return exit_code_for(std::current_exception());
  }
  return 0;
}
