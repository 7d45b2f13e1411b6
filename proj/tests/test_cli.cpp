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

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dfwf/cli/commands.hpp"
#include "dfwf/error.hpp"
#include "dfwf/eval/metrics.hpp"

namespace fs = std::filesystem;
using namespace dfwf;
using nlohmann::json;

#ifndef DFWF_CLI_PATH
#error "DFWF_CLI_PATH must name the dfwf executable"
#endif

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dfwf_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DFWF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json tiny_json(const fs::path& root, const std::string& name) {
  return {{"name", name},
          {"output_root", root.string()},
          {"data", {{"benchmark", "two_task_gap"}, {"sizes", {{"train", 16}, {"dev", 8}, {"eval", 8}}}}},
          {"optimizer", {{"epochs", 2}, {"lr", 1e-3}, {"batch_size", 8}}},
          {"grid", {{"alphas", {0.5, 1.0}}, {"betas", {0.5, 1.0}}}},
          {"seeds", {3}}};
}

cli::ExperimentConfig tiny(const fs::path& root, const std::string& name) {
  return cli::config_from_json(tiny_json(root, name));
}

}  // namespace

TEST_CASE("missing config file: exit code 2 and no output directory") {
  const fs::path root = scratch("missing");
  const std::string out = (root / "out").string();
  CHECK(run_cli("run --config " + (root / "absent.json").string() + " --set output_root=" + out) == cli::kExitConfig);
  CHECK_FALSE(fs::exists(root / "out"));
}

TEST_CASE("invalid config values are rejected before any output is written") {
  const fs::path root = scratch("invalid");
  json j = tiny_json(root / "out", "bad");
  j["optimizer"]["lr"] = -1.0;
  std::ofstream(root / "bad.json") << j.dump();
  CHECK(run_cli("run -c " + (root / "bad.json").string()) == cli::kExitConfig);
  j["optimizer"]["lr"] = 1e-3;
  j["strategy"] = {{"kind", "fine_tune"}, {"alpha", 1.0}};
  std::ofstream(root / "bad2.json") << j.dump();
  CHECK(run_cli("run -c " + (root / "bad2.json").string()) == cli::kExitConfig);
  j.erase("strategy");
  j["no_such_key"] = 1;
  std::ofstream(root / "bad3.json") << j.dump();
  CHECK(run_cli("run -c " + (root / "bad3.json").string()) == cli::kExitConfig);
  CHECK_FALSE(fs::exists(root / "out"));
}

TEST_CASE("overrides address nested keys and parse JSON values") {
  json j = json::object();
  cli::apply_override(j, "strategy.alpha=0.5");
  cli::apply_override(j, "strategy.kind=lwf_only");
  cli::apply_override(j, "seeds=[1,2]");
  CHECK(j["strategy"]["alpha"].get<double>() == 0.5);
  CHECK(j["strategy"]["kind"].get<std::string>() == "lwf_only");
  CHECK(j["seeds"].size() == 2);
  CHECK_THROWS_AS(cli::apply_override(j, "novalue"), ConfigError);
}

TEST_CASE("DFWF_OUT replaces the output root") {
  auto c = tiny("/somewhere", "exp");
  ::unsetenv("DFWF_OUT");
  CHECK(cli::resolve_output_dir(c) == fs::path("/somewhere/exp"));
  ::setenv("DFWF_OUT", "/elsewhere", 1);
  CHECK(cli::resolve_output_dir(c) == fs::path("/elsewhere/exp"));
  ::unsetenv("DFWF_OUT");
}

TEST_CASE("config survives a JSON round trip") {
  auto c = tiny("/r", "rt");
  c.strategy.weights = {0.25, 1.5};
  c.seeds = {4, 9};
  const auto back = cli::config_from_json(cli::to_json(c));
  CHECK(cli::to_json(back) == cli::to_json(c));
}

TEST_CASE("run writes the artifact set and is byte-identical across repeats") {
  const fs::path root = scratch("determinism");
  std::ostringstream log;
  cli::cmd_run(tiny(root, "a"), 1, log);
  cli::cmd_run(tiny(root, "b"), 1, log);
  for (const char* f : {"eer_matrix.csv", "dev_eer_matrix.csv", "avg_eer.csv", "loss_log.csv", "report.txt",
                        "checkpoints/step1_LA-detune.ckpt", "checkpoints/step2_PA-room.ckpt"}) {
    CAPTURE(f);
    CHECK(slurp(root / "a/seed_3" / f) == slurp(root / "b/seed_3" / f));
  }
  CHECK(slurp(root / "a/summary.csv") == slurp(root / "b/summary.csv"));
  CHECK(slurp(root / "a/avg_eer_by_step.csv") == slurp(root / "b/avg_eer_by_step.csv"));
  const json m = json::parse(slurp(root / "a/MANIFEST"));
  CHECK(m["status"] == "complete");
  CHECK(m["version"] == cli::kVersion);
  CHECK(m["seeds_completed"] == json::array({3}));
  CHECK(cli::to_json(cli::config_from_json(m["config"])) == m["config"]);
  CHECK(json::parse(slurp(root / "a/seed_3/MANIFEST"))["status"] == "complete");
}

TEST_CASE("parallel seeds match sequential seeds") {
  const fs::path root = scratch("parallel");
  auto c1 = tiny(root, "seq");
  c1.seeds = {1, 2};
  auto c2 = c1;
  c2.name = "par";
  std::ostringstream log;
  cli::cmd_run(c1, 1, log);
  cli::cmd_run(c2, 2, log);
  for (const char* s : {"seed_1", "seed_2"}) {
    CHECK(slurp(root / "seq" / s / "eer_matrix.csv") == slurp(root / "par" / s / "eer_matrix.csv"));
    CHECK(slurp(root / "seq" / s / "loss_log.csv") == slurp(root / "par" / s / "loss_log.csv"));
  }
  CHECK(slurp(root / "seq/summary.csv") == slurp(root / "par/summary.csv"));
}

TEST_CASE("fine_tune and dfwf with zero weights give identical R matrices") {
  const fs::path root = scratch("reduction");
  auto ft = tiny(root, "ft");
  ft.strategy.kind = train::StrategyKind::fine_tune;
  ft.strategy.weights = {0.0, 0.0};
  auto zero = tiny(root, "zero");
  zero.strategy.kind = train::StrategyKind::dfwf;
  zero.strategy.weights = {0.0, 0.0};
  std::ostringstream log;
  cli::cmd_run(ft, 1, log);
  cli::cmd_run(zero, 1, log);
  CHECK(slurp(root / "ft/seed_3/eer_matrix.csv") == slurp(root / "zero/seed_3/eer_matrix.csv"));
}

TEST_CASE("ablate: four strategy rows, fine_tune row matches a fine_tune run") {
  const fs::path root = scratch("ablate");
  std::ostringstream log;
  cli::cmd_ablate(tiny(root, "abl"), 1, log);
  std::istringstream table(slurp(root / "abl/ablation.csv"));
  std::string line;
  std::getline(table, line);
  CHECK(line == "strategy,seed_3,mean");
  std::vector<std::string> rows;
  while (std::getline(table, line)) rows.push_back(line);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].rfind("fine_tune,", 0) == 0);
  CHECK(rows[1].rfind("lwf_only,", 0) == 0);
  CHECK(rows[2].rfind("psa_only,", 0) == 0);
  CHECK(rows[3].rfind("dfwf,", 0) == 0);

  auto ft = tiny(root, "ft");
  ft.strategy.kind = train::StrategyKind::fine_tune;
  ft.strategy.weights = {0.0, 0.0};
  cli::cmd_run(ft, 1, log);
  std::istringstream summary(slurp(root / "ft/summary.csv"));
  std::getline(summary, line);
  std::getline(summary, line);
  const std::string ft_value = line.substr(2, line.find(',', 2) - 2);
  CHECK(rows[0] == "fine_tune," + ft_value + "," + ft_value);
  CHECK(slurp(root / "ft/seed_3/eer_matrix.csv") == slurp(root / "abl/seed_3/fine_tune/eer_matrix.csv"));

  const std::string weights = slurp(root / "abl/ablation_weights.csv");
  CHECK(weights.find("lwf_only,3,") != std::string::npos);
  CHECK(weights.find("psa_only,3,0.000000,") != std::string::npos);
}

TEST_CASE("gen-data, score and extract-features through the executable") {
  const fs::path root = scratch("pipeline");
  const std::string data = (root / "data").string();
  REQUIRE(run_cli("gen-data --train 16 --dev 8 --eval 12 --seed 5 --out " + data) == 0);
  REQUIRE(fs::exists(root / "data/data_config.json"));

  json cfg = cli::load_config_json(root / "data/data_config.json");
  cfg["output_root"] = (root / "runs").string();
  cfg["optimizer"] = {{"epochs", 1}, {"lr", 1e-3}, {"batch_size", 8}};
  std::ofstream(root / "data/run.json") << cfg.dump();
  REQUIRE(run_cli("run -c " + (root / "data/run.json").string()) == 0);
  const fs::path ckpt = root / "runs/data/seed_0/checkpoints/step2_PA-room.ckpt";
  REQUIRE(fs::exists(ckpt));

  const std::string proto = (root / "data/PA-room/eval.protocol.txt").string();
  const std::string wavs = (root / "data/PA-room/eval").string();
  const std::string common = "score --checkpoint " + ckpt.string() + " --protocol " + proto + " --wav-dir " + wavs;
  REQUIRE(run_cli(common + " --out " + (root / "s1.txt").string() + " --embeddings " + (root / "e.csv").string()) == 0);
  REQUIRE(run_cli(common + " --out " + (root / "s2.txt").string()) == 0);
  CHECK(slurp(root / "s1.txt") == slurp(root / "s2.txt"));

  // Printed EER equals the EER of the emitted score file.
  cli::ScoreOptions so;
  so.checkpoint = ckpt;
  so.protocol = proto;
  so.wav_dir = wavs;
  so.scores_out = root / "s3.txt";
  std::ostringstream printed;
  const auto rep = cli::cmd_score(so, printed);
  const auto recs = eval::read_scores(root / "s3.txt");
  CHECK(recs.size() == 12);
  CHECK(eval::compute_eer(recs).eer == rep.eer);
  char expect[32];
  std::snprintf(expect, sizeof expect, "EER %.4f%%", 100.0 * rep.eer);
  CHECK(printed.str().rfind(expect, 0) == 0);

  std::istringstream emb(slurp(root / "e.csv"));
  std::string line;
  int n = 0;
  while (std::getline(emb, line)) ++n;
  CHECK(n == 13);

  // A feature config the checkpoint was not trained with.
  so.features.lfcc.include_deltas = false;
  CHECK_THROWS_AS(cli::cmd_score(so, printed), ConfigError);

  CHECK(run_cli("extract-features --protocol " + proto + " --wav-dir " + wavs + " --out " +
                (root / "feats").string()) == 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(root / "feats")) files += e.path().extension() == ".lfcc";
  CHECK(files == 12);

  CHECK(run_cli("score --checkpoint " + (root / "nope.ckpt").string() + " --protocol " + proto + " --wav-dir " +
                wavs) == cli::kExitData);
}
