// Copyright 2026 The DFWF Lab Authors
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
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dfwf/cli/commands.hpp"
#include "dfwf/error.hpp"

namespace {

using namespace dfwf;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& a, bool required) {
  auto* opt = cmd->add_option("-c,--config", a.path, "experiment config (JSON)");
  if (required) opt->required();
  cmd->add_option("-s,--set", a.overrides, "override a config key, e.g. strategy.alpha=0.5");
}

cli::ExperimentConfig resolve(const ConfigArgs& a) {
  nlohmann::json j = nlohmann::json::object();
  std::filesystem::path base;
  if (!a.path.empty()) {
    j = cli::load_config_json(a.path);
    base = std::filesystem::path(a.path).parent_path();
  }
  for (const auto& o : a.overrides) cli::apply_override(j, o);
  auto c = cli::config_from_json(j, base);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual fake-audio detection: LFCC + LCNN with LwF/PSA regularisation"};
  app.set_version_flag("--version", std::string(cli::kVersion));
  app.require_subcommand(1);

  int parallel = 1;
  ConfigArgs run_args, ablate_args, score_args, extract_args;

  auto* run = app.add_subcommand("run", "train a task sequence for every seed");
  add_config_options(run, run_args, true);
  run->add_option("-j,--parallel", parallel, "seeds trained concurrently")->check(CLI::PositiveNumber);

  auto* ablate = app.add_subcommand("ablate", "compare fine_tune, lwf_only, psa_only and dfwf");
  add_config_options(ablate, ablate_args, true);
  ablate->add_option("-j,--parallel", parallel, "seeds trained concurrently")->check(CLI::PositiveNumber);

  cli::ScoreOptions so;
  std::string score_ckpt, score_proto, score_wavs, score_out, score_emb;
  auto* score = app.add_subcommand("score", "score a protocol with a checkpoint and print the EER");
  add_config_options(score, score_args, false);
  score->add_option("--checkpoint", score_ckpt)->required();
  score->add_option("--protocol", score_proto)->required();
  score->add_option("--wav-dir", score_wavs)->required();
  score->add_option("--out", score_out, "score file");
  score->add_option("--embeddings", score_emb, "2-D PCA projection of embeddings (CSV)");
  score->add_option("--seed", so.seed, "seed for long-utterance cropping");

  cli::ExtractOptions eo;
  std::string ex_proto, ex_wavs, ex_out;
  auto* extract = app.add_subcommand("extract-features", "write LFCC feature records for a protocol");
  add_config_options(extract, extract_args, false);
  extract->add_option("--protocol", ex_proto)->required();
  extract->add_option("--wav-dir", ex_wavs)->required();
  extract->add_option("--out", ex_out)->required();
  extract->add_option("--seed", eo.seed);

  cli::GenDataOptions go;
  std::string gen_bench = "two_task_gap", gen_out;
  std::vector<std::string> gen_presets;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic benchmark as WAVs and protocols");
  gen->add_option("--benchmark", gen_bench, "two_task_gap or four_task_chain");
  gen->add_option("--presets", gen_presets, "explicit preset list")->delimiter(',');
  gen->add_option("--train", go.sizes.train);
  gen->add_option("--dev", go.sizes.dev);
  gen->add_option("--eval", go.sizes.eval);
  gen->add_option("--seed", go.seed);
  gen->add_option("--out", gen_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      cli::cmd_run(resolve(run_args), parallel, std::cerr);
    } else if (*ablate) {
      cli::cmd_ablate(resolve(ablate_args), parallel, std::cerr);
    } else if (*score) {
      so.features = resolve(score_args).features;
      so.checkpoint = score_ckpt;
      so.protocol = score_proto;
      so.wav_dir = score_wavs;
      so.scores_out = score_out;
      so.embeddings_out = score_emb;
      cli::cmd_score(so, std::cout);
    } else if (*extract) {
      eo.features = resolve(extract_args).features;
      eo.protocol = ex_proto;
      eo.wav_dir = ex_wavs;
      eo.out_dir = ex_out;
      cli::cmd_extract_features(eo, std::cout);
    } else if (*gen) {
      go.benchmark = synth::parse_benchmark_kind(gen_bench);
      go.presets = gen_presets;
      go.out_dir = gen_out;
      cli::cmd_gen_data(go, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "dfwf: " << e.what() << "\n";
    return cli::exit_code_for(e);
  }
  return cli::kExitOk;
}
