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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dfwf/eval/metrics.hpp"
#include "dfwf/loss/losses.hpp"
#include "dfwf/model/lcnn.hpp"
#include "dfwf/train/adam.hpp"
#include "dfwf/train/task.hpp"

namespace dfwf::train {

enum class StrategyKind { fine_tune, multi_condition, dfwf, lwf_only, psa_only };

StrategyKind parse_strategy(const std::string& s);
std::string to_string(StrategyKind k);

struct TrainingStrategy {
  StrategyKind kind = StrategyKind::dfwf;
  loss::LossWeights weights{1.0, 1.0};
  loss::DistillationConfig distill;
  loss::PsaForm psa_form = loss::PsaForm::one_minus_cos;

  // True for dfwf, lwf_only and psa_only.
  bool uses_teacher() const;
  // Throws ConfigError when fine_tune/multi_condition carry a nonzero
  // weight, lwf_only has beta != 0 or psa_only has alpha != 0.
  void validate() const;

  static TrainingStrategy fine_tune();
  static TrainingStrategy multi_condition();
};

struct TrainOptions {
  AdamConfig adam;
  // Keep the epoch with the lowest dev EER (ties: lower dev cross-entropy,
  // then earlier epoch). When false, or without dev data, keep the last.
  bool select_best_dev = true;
};

struct EpochLog {
  int step = 0;
  std::string task_id;
  int epoch = 0;
  std::size_t examples = 0;  // training utterances seen this epoch
  double original = 0.0;
  double lwf = 0.0;
  double psa = 0.0;
  double total = 0.0;
  double dev_eer = 0.0;
  double dev_loss = 0.0;
};

struct TrainResult {
  model::Classifier model;
  int best_epoch = 0;
  double best_dev_eer = 0.0;
  std::vector<EpochLog> log;
};

// Trains a copy of `init` on `train`. A teacher is required exactly when the
// strategy uses one. Each batch: student forward, cross-entropy; with a
// teacher, distillation over all samples and embedding alignment over the
// genuine ones; weighted total; backward; Adam. Throws NumericError on a
// non-finite loss.
TrainResult train_task(const model::Classifier& init, const model::Classifier* teacher,
                       std::span<const Example> train, std::span<const Example> dev,
                       const TrainingStrategy& strategy, const TrainOptions& options,
                       std::uint64_t seed, int step = 1, const std::string& task_id = "");

// Genuine-class log posterior of every example (higher = more genuine).
std::vector<eval::ScoreRecord> score_examples(const model::Classifier& model,
                                              std::span<const Example> examples,
                                              int batch_size = 64);

// Embeddings [n x embedding_dim] of every example.
Eigen::MatrixXd embed_examples(const model::Classifier& model, std::span<const Example> examples,
                               int batch_size = 64);

double eer_of(const model::Classifier& model, std::span<const Example> examples);

struct SequenceConfig {
  model::LcnnConfig model = model::LcnnConfig::desk_default();
  TrainOptions train;
};

struct SequenceResult {
  std::vector<std::string> task_ids;
  // eer_matrix[i][j]: EER on task j's eval set after step i (j <= i).
  std::vector<std::vector<double>> eer_matrix;
  std::vector<double> avg_eer_per_step;
  // Same bookkeeping on the dev sets; drives weight selection.
  std::vector<std::vector<double>> dev_eer_matrix;
  std::vector<double> dev_avg_eer_per_step;
  // Mean dev cross-entropy over the tasks seen so far.
  std::vector<double> dev_loss_per_step;
  std::vector<int> best_epoch;
  std::vector<EpochLog> loss_log;
  // Serialized checkpoint after every step.
  std::vector<std::string> checkpoints;

  std::size_t steps() const { return eer_matrix.size(); }
  model::Classifier model_at(std::size_t step) const;
};

// Invoked after every completed step with the result so far.
using StepCallback = std::function<void(const SequenceResult&)>;

// Step 1 alone: plain cross-entropy from random init. Identical for every
// strategy under one seed, so callers can share it.
SequenceResult train_base(const TaskSequence& seq, const SequenceConfig& cfg, std::uint64_t seed,
                          const StepCallback& on_step = {});

// Runs every step after those already in `base` (which must come from
// train_base or a prefix of this same run).
SequenceResult continue_sequence(const TaskSequence& seq, const TrainingStrategy& strategy,
                                 const SequenceConfig& cfg, std::uint64_t seed,
                                 SequenceResult base, const StepCallback& on_step = {});

SequenceResult run_sequence(const TaskSequence& seq, const TrainingStrategy& strategy,
                            const SequenceConfig& cfg, std::uint64_t seed,
                            const StepCallback& on_step = {});

struct GridCell {
  loss::LossWeights weights;
  double dev_avg_eer = 0.0;
  double dev_loss = 0.0;
};

struct GridSearchResult {
  loss::LossWeights best;
  SequenceResult result;
  std::vector<GridCell> cells;
};

// Searches alpha x beta (alpha pinned to 0 for psa_only, beta to 0 for
// lwf_only) and keeps the cell with the lowest final dev AvgEER. Ties go to
// the lower mean dev cross-entropy, then to the earlier cell.
GridSearchResult grid_search(const TaskSequence& seq, const TrainingStrategy& strategy,
                             std::span<const double> alphas, std::span<const double> betas,
                             const SequenceConfig& cfg, std::uint64_t seed,
                             const SequenceResult& base);

// CSV writers.
void write_eer_matrix_csv(const std::filesystem::path& path, const SequenceResult& r);
void write_avg_eer_csv(const std::filesystem::path& path, const SequenceResult& r);
void write_loss_log_csv(const std::filesystem::path& path, std::span<const EpochLog> log);

}  // namespace dfwf::train
