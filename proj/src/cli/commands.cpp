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

#include "dfwf/cli/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "dfwf/audio/feature_cache.hpp"
#include "dfwf/error.hpp"
#include "dfwf/model/checkpoint.hpp"
#include "dfwf/synth/protocol.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dfwf::cli {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("failed writing " + path.string());
}

// Serialises log lines from worker threads.
class Logger {
 public:
  explicit Logger(std::ostream& out) : out_(out) {}
  void line(const std::string& s) {
    std::lock_guard<std::mutex> lock(mu_);
    out_ << s << std::endl;
  }

 private:
  std::ostream& out_;
  std::mutex mu_;
};

struct SeedOutcome {
  bool ok = false;
  std::string error;
  int code = kExitOk;
};

// Runs job(seed) for every seed on up to `parallel` threads.
template <class Job>
std::vector<SeedOutcome> for_each_seed(const std::vector<std::uint64_t>& seeds, int parallel, Job job) {
  std::vector<SeedOutcome> outcomes(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        job(seeds[i]);
        outcomes[i].ok = true;
      } catch (const std::exception& e) {
        outcomes[i] = {false, e.what(), exit_code_for(e)};
      }
    }
  };
  const int n = std::max(1, std::min<int>(parallel, static_cast<int>(seeds.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return outcomes;
}

json manifest(const std::string& command, const ExperimentConfig& c) {
  return {{"tool", "dfwf"}, {"version", kVersion}, {"command", command}, {"config", to_json(c)}};
}

void write_manifest(const fs::path& dir, const json& m) { write_text(dir / "MANIFEST", m.dump(2) + "\n"); }

// Records the outcome of every seed in the top-level MANIFEST, then rethrows
// the first failure so the process exits with its code.
void finish(const fs::path& out, json m, const std::vector<std::uint64_t>& seeds,
            const std::vector<SeedOutcome>& outcomes) {
  json done = json::array();
  json errors = json::object();
  const SeedOutcome* first_failure = nullptr;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (outcomes[i].ok) {
      done.push_back(seeds[i]);
    } else {
      errors[std::to_string(seeds[i])] = outcomes[i].error;
      if (first_failure == nullptr) first_failure = &outcomes[i];
    }
  }
  m["seeds_completed"] = done;
  m["status"] = first_failure ? "incomplete" : "complete";
  if (first_failure) m["errors"] = errors;
  write_manifest(out, m);
  if (first_failure) {
    switch (first_failure->code) {
      case kExitConfig: throw ConfigError(first_failure->error);
      case kExitData: throw DataError(first_failure->error);
      case kExitNumeric: throw NumericError(first_failure->error);
      default: throw Error(first_failure->error);
    }
  }
}

std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

std::string step_checkpoint_name(std::size_t step, const std::string& task) {
  return "step" + std::to_string(step + 1) + "_" + task + ".ckpt";
}

void write_matrix_csv(const fs::path& path, const std::vector<std::string>& ids,
                      const std::vector<std::vector<double>>& m) {
  std::string s = "step,trained_on";
  for (const auto& id : ids) s += ",eer_" + id;
  s += "\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    s += std::to_string(i + 1) + "," + ids[i];
    for (std::size_t j = 0; j < ids.size(); ++j) s += "," + (j < m[i].size() ? fmt(m[i][j]) : std::string());
    s += "\n";
  }
  write_text(path, s);
}

std::string report_text(const train::SequenceResult& r, const std::string& strategy, const loss::LossWeights& w) {
  std::string s = "strategy " + strategy + "  alpha " + fmt(w.alpha) + "  beta " + fmt(w.beta) + "\n\n";
  s += "EER (%) on each task's eval set after each step\n";
  char buf[64];
  s += "step  trained_on";
  for (const auto& id : r.task_ids) {
    std::snprintf(buf, sizeof buf, "  %14s", id.c_str());
    s += buf;
  }
  s += "      AvgEER\n";
  for (std::size_t i = 0; i < r.steps(); ++i) {
    std::snprintf(buf, sizeof buf, "%4zu  %10s", i + 1, r.task_ids[i].c_str());
    s += buf;
    for (std::size_t j = 0; j < r.task_ids.size(); ++j) {
      if (j < r.eer_matrix[i].size()) {
        std::snprintf(buf, sizeof buf, "  %14.2f", 100.0 * r.eer_matrix[i][j]);
      } else {
        std::snprintf(buf, sizeof buf, "  %14s", "");
      }
      s += buf;
    }
    std::snprintf(buf, sizeof buf, "  %10.2f\n", 100.0 * r.avg_eer_per_step[i]);
    s += buf;
  }
  return s;
}

// Writes every artifact of a (possibly partial) sequence result.
void write_sequence(const fs::path& dir, const train::SequenceResult& r, const std::string& strategy,
                    const loss::LossWeights& w) {
  fs::create_directories(dir / "checkpoints");
  train::write_eer_matrix_csv(dir / "eer_matrix.csv", r);
  write_matrix_csv(dir / "dev_eer_matrix.csv", r.task_ids, r.dev_eer_matrix);
  train::write_avg_eer_csv(dir / "avg_eer.csv", r);
  train::write_loss_log_csv(dir / "loss_log.csv", r.loss_log);
  for (std::size_t i = 0; i < r.steps(); ++i) {
    const fs::path p = dir / "checkpoints" / step_checkpoint_name(i, r.task_ids[i]);
    write_text(p, r.checkpoints[i]);
  }
  write_text(dir / "report.txt", report_text(r, strategy, w));
}

void write_grid_csv(const fs::path& path, const train::GridSearchResult& g) {
  std::string s = "alpha,beta,dev_avg_eer,dev_loss,selected\n";
  for (const auto& c : g.cells) {
    const bool sel = c.weights.alpha == g.best.alpha && c.weights.beta == g.best.beta;
    s += fmt(c.weights.alpha) + "," + fmt(c.weights.beta) + "," + fmt(c.dev_avg_eer) + "," + fmt(c.dev_loss) + "," + (sel ? "1" : "0") + "\n";
  }
  write_text(path, s);
}

train::SequenceConfig sequence_config(const ExperimentConfig& c) { return {c.model, c.train}; }

std::vector<train::Example> examples_from_protocol(const SplitPaths& s, const synth::FeatureOptions& f,
                                                   std::uint64_t seed) {
  std::vector<train::Example> out;
  for (const auto& u : synth::load_protocol_split(s.protocol, s.wav_dir)) out.push_back(synth::make_example(u, f, seed));
  return out;
}

struct SeedRun {
  train::SequenceResult result;
  loss::LossWeights weights;
};

SeedRun run_one(const ExperimentConfig& c, const train::TaskSequence& seq, std::uint64_t seed,
                const fs::path& dir) {
  const auto sc = sequence_config(c);
  const std::string name = train::to_string(c.strategy.kind);
  if (c.grid.enabled && c.strategy.uses_teacher()) {
    const auto base = train::train_base(seq, sc, seed);
    write_sequence(dir, base, name, c.strategy.weights);
    auto g = train::grid_search(seq, c.strategy, c.grid.alphas, c.grid.betas, sc, seed, base);
    write_grid_csv(dir / "grid.csv", g);
    return {std::move(g.result), g.best};
  }
  auto on_step = [&](const train::SequenceResult& r) { write_sequence(dir, r, name, c.strategy.weights); };
  return {train::run_sequence(seq, c.strategy, sc, seed, on_step), c.strategy.weights};
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const ShapeError*>(&e)) return kExitData;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  return kExitFailure;
}

train::TaskSequence load_sequence(const ExperimentConfig& c, std::uint64_t seed) {
  if (c.data.source == "synthetic") {
    const auto presets = c.data.presets.empty() ? synth::benchmark_presets(c.data.benchmark) : c.data.presets;
    return synth::featurize(synth::build_tasks(presets, c.data.sizes, seed), c.features, seed);
  }
  train::TaskSequence seq;
  seq.feature_rows = c.features.lfcc.num_features();
  seq.feature_cols = c.features.target_frames;
  for (const auto& t : c.data.tasks) {
    train::Task task;
    task.task_id = t.task_id;
    task.train = examples_from_protocol(t.train, c.features, seed);
    task.dev = examples_from_protocol(t.dev, c.features, seed);
    task.eval = examples_from_protocol(t.eval, c.features, seed);
    seq.tasks.push_back(std::move(task));
  }
  try {
    seq.validate();
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  return seq;
}

void cmd_run(const ExperimentConfig& c, int parallel, std::ostream& log_stream) {
  c.validate();
  const fs::path out = resolve_output_dir(c);
  fs::create_directories(out);
  json m = manifest("run", c);
  m["seeds"] = c.seeds;
  m["status"] = "running";
  write_manifest(out, m);
  write_text(out / "config.json", to_json(c).dump(2) + "\n");

  Logger log(log_stream);
  std::map<std::uint64_t, SeedRun> runs;
  std::mutex runs_mu;
  const auto outcomes = for_each_seed(c.seeds, parallel, [&](std::uint64_t seed) {
    const fs::path dir = out / seed_dir_name(seed);
    fs::create_directories(dir);
    json sm = manifest("run", c);
    sm["seed"] = seed;
    sm["status"] = "running";
    write_manifest(dir, sm);
    try {
      log.line("seed " + std::to_string(seed) + ": preparing data");
      const auto seq = load_sequence(c, seed);
      log.line("seed " + std::to_string(seed) + ": training " + std::to_string(seq.tasks.size()) + " steps");
      SeedRun r = run_one(c, seq, seed, dir);
      write_sequence(dir, r.result, train::to_string(c.strategy.kind), r.weights);
      sm["status"] = "complete";
      sm["steps_completed"] = r.result.steps();
      write_manifest(dir, sm);
      log.line("seed " + std::to_string(seed) + ": final AvgEER " + fmt(r.result.avg_eer_per_step.back()));
      std::lock_guard<std::mutex> lock(runs_mu);
      runs.emplace(seed, std::move(r));
    } catch (const std::exception& e) {
      sm["status"] = "incomplete";
      sm["error"] = e.what();
      write_manifest(dir, sm);
      throw;
    }
  });

  if (!runs.empty()) {
    std::string summary = "seed,final_avg_eer,alpha,beta\n";
    double total = 0.0;
    for (const auto& [seed, r] : runs) {
      summary += std::to_string(seed) + "," + fmt(r.result.avg_eer_per_step.back()) + "," + fmt(r.weights.alpha) +
                 "," + fmt(r.weights.beta) + "\n";
      total += r.result.avg_eer_per_step.back();
    }
    summary += "mean," + fmt(total / static_cast<double>(runs.size())) + ",,\n";
    write_text(out / "summary.csv", summary);

    // AvgEER against the number of tasks seen, one column per seed.
    std::string curve = "step";
    for (const auto& [seed, r] : runs) curve += ",seed_" + std::to_string(seed);
    curve += ",mean\n";
    const std::size_t steps = runs.begin()->second.result.steps();
    for (std::size_t i = 0; i < steps; ++i) {
      curve += std::to_string(i + 1);
      double acc = 0.0;
      for (const auto& [seed, r] : runs) {
        curve += "," + fmt(r.result.avg_eer_per_step[i]);
        acc += r.result.avg_eer_per_step[i];
      }
      curve += "," + fmt(acc / static_cast<double>(runs.size())) + "\n";
    }
    write_text(out / "avg_eer_by_step.csv", curve);
  }
  finish(out, m, c.seeds, outcomes);
}

void cmd_ablate(const ExperimentConfig& c, int parallel, std::ostream& log_stream) {
  c.validate();
  const fs::path out = resolve_output_dir(c);
  fs::create_directories(out);
  json m = manifest("ablate", c);
  m["seeds"] = c.seeds;
  m["status"] = "running";
  write_manifest(out, m);
  write_text(out / "config.json", to_json(c).dump(2) + "\n");

  const std::vector<train::StrategyKind> kinds{train::StrategyKind::fine_tune, train::StrategyKind::lwf_only,
                                               train::StrategyKind::psa_only, train::StrategyKind::dfwf};
  Logger log(log_stream);
  std::map<std::uint64_t, std::vector<SeedRun>> runs;
  std::mutex runs_mu;
  const auto outcomes = for_each_seed(c.seeds, parallel, [&](std::uint64_t seed) {
    const fs::path dir = out / seed_dir_name(seed);
    fs::create_directories(dir);
    json sm = manifest("ablate", c);
    sm["seed"] = seed;
    sm["status"] = "running";
    write_manifest(dir, sm);
    try {
      const auto seq = load_sequence(c, seed);
      const auto sc = sequence_config(c);
      const auto base = train::train_base(seq, sc, seed);
      std::vector<SeedRun> rows;
      for (auto kind : kinds) {
        train::TrainingStrategy s = c.strategy;
        s.kind = kind;
        const fs::path sub = dir / train::to_string(kind);
        if (kind == train::StrategyKind::fine_tune) {
          s.weights = {0.0, 0.0};
          rows.push_back({train::continue_sequence(seq, s, sc, seed, base), s.weights});
        } else {
          auto g = train::grid_search(seq, s, c.grid.alphas, c.grid.betas, sc, seed, base);
          fs::create_directories(sub);
          write_grid_csv(sub / "grid.csv", g);
          rows.push_back({std::move(g.result), g.best});
        }
        write_sequence(sub, rows.back().result, train::to_string(kind), rows.back().weights);
        log.line("seed " + std::to_string(seed) + ": " + train::to_string(kind) + " AvgEER " +
                 fmt(rows.back().result.avg_eer_per_step.back()));
      }
      sm["status"] = "complete";
      write_manifest(dir, sm);
      std::lock_guard<std::mutex> lock(runs_mu);
      runs.emplace(seed, std::move(rows));
    } catch (const std::exception& e) {
      sm["status"] = "incomplete";
      sm["error"] = e.what();
      write_manifest(dir, sm);
      throw;
    }
  });

  if (!runs.empty()) {
    std::string table = "strategy";
    for (const auto& [seed, rows] : runs) table += ",seed_" + std::to_string(seed);
    table += ",mean\n";
    std::string weights = "strategy,seed,alpha,beta\n";
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      table += train::to_string(kinds[k]);
      double acc = 0.0;
      for (const auto& [seed, rows] : runs) {
        const double v = rows[k].result.avg_eer_per_step.back();
        table += "," + fmt(v);
        acc += v;
        weights += train::to_string(kinds[k]) + "," + std::to_string(seed) + "," + fmt(rows[k].weights.alpha) + "," +
                   fmt(rows[k].weights.beta) + "\n";
      }
      table += "," + fmt(acc / static_cast<double>(runs.size())) + "\n";
    }
    write_text(out / "ablation.csv", table);
    write_text(out / "ablation_weights.csv", weights);
  }
  finish(out, m, c.seeds, outcomes);
}

eval::EvalReport cmd_score(const ScoreOptions& o, std::ostream& log) {
  const model::Checkpoint ck = model::load_checkpoint(o.checkpoint);
  const auto& mc = ck.model.config();
  if (mc.input_rows != o.features.lfcc.num_features() || mc.input_cols != o.features.target_frames) {
    throw ConfigError("checkpoint expects " + std::to_string(mc.input_rows) + "x" + std::to_string(mc.input_cols) +
                      " features, the feature config yields " + std::to_string(o.features.lfcc.num_features()) + "x" +
                      std::to_string(o.features.target_frames));
  }
  const auto examples = examples_from_protocol({o.protocol, o.wav_dir}, o.features, o.seed);
  if (examples.empty()) throw DataError("protocol " + o.protocol.string() + " lists no utterances");
  const auto scores = train::score_examples(ck.model, examples);
  if (!o.scores_out.empty()) {
    if (o.scores_out.has_parent_path()) fs::create_directories(o.scores_out.parent_path());
    eval::write_scores(o.scores_out, scores);
  }
  if (!o.embeddings_out.empty()) {
    const Eigen::MatrixX2d p = eval::project_embeddings_2d(train::embed_examples(ck.model, examples));
    std::string s = "utt_id,label,pc1,pc2\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
      s += examples[i].utt_id + "," + std::string(to_string(examples[i].label)) + "," +
           fmt(p(static_cast<Eigen::Index>(i), 0)) + "," + fmt(p(static_cast<Eigen::Index>(i), 1)) + "\n";
    }
    write_text(o.embeddings_out, s);
  }
  const auto rep = eval::compute_eer(scores);
  char buf[96];
  std::snprintf(buf, sizeof buf, "EER %.4f%% (%zu genuine, %zu spoof)", 100.0 * rep.eer, rep.n_genuine, rep.n_spoof);
  log << buf << std::endl;
  return rep;
}

std::size_t cmd_extract_features(const ExtractOptions& o, std::ostream& log) {
  o.features.lfcc.validate();
  const auto entries = synth::parse_protocol(o.protocol);
  fs::create_directories(o.out_dir);
  std::size_t n = 0;
  for (const auto& e : entries) {
    synth::Utterance u;
    u.utt_id = e.utt_id;
    u.label = e.label;
    u.wave = audio::load_wav(o.wav_dir / (e.utt_id + ".wav"));
    const auto ex = synth::make_example(u, o.features, o.seed);
    audio::FeatureMatrix f;
    f.values.resize(o.features.lfcc.num_features(), o.features.target_frames);
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
      for (Eigen::Index c = 0; c < f.cols(); ++c) f.values(r, c) = ex.features[static_cast<std::size_t>(r * f.cols() + c)];
    }
    audio::write_feature_cache(o.out_dir / (e.utt_id + ".lfcc"), f);
    ++n;
  }
  log << "wrote " << n << " feature records to " << o.out_dir.string() << std::endl;
  return n;
}

void cmd_gen_data(const GenDataOptions& o, std::ostream& log) {
  o.sizes.validate();
  const auto presets = o.presets.empty() ? synth::benchmark_presets(o.benchmark) : o.presets;
  const auto tasks = synth::build_tasks(presets, o.sizes, o.seed);
  synth::dump_dataset(tasks, o.out_dir);
  json list = json::array();
  for (const auto& t : tasks) {
    json entry{{"task_id", t.task_id}};
    for (const char* split : {"train", "dev", "eval"}) {
      entry[split] = {{"protocol", t.task_id + "/" + split + ".protocol.txt"}, {"wav_dir", t.task_id + "/" + split}};
    }
    list.push_back(entry);
  }
  const json cfg{{"name", o.out_dir.filename().string()}, {"data", {{"source", "protocol"}, {"tasks", list}}}};
  write_text(o.out_dir / "data_config.json", cfg.dump(2) + "\n");
  log << "wrote " << tasks.size() << " tasks to " << o.out_dir.string() << std::endl;
}

}  // namespace dfwf::cli
