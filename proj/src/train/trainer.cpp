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

#include "dfwf/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "dfwf/ad/ops.hpp"
#include "dfwf/error.hpp"
#include "dfwf/model/checkpoint.hpp"
#include "dfwf/seed.hpp"

namespace dfwf::train {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kTrainStream = 0x7124;

using FTensor = ad::Tensor<float>;
using FVar = ad::Var<float>;

FTensor batch_of(std::span<const Example> data, std::span<const std::size_t> idx, int rows, int cols) {
  std::vector<const std::vector<float>*> feats;
  feats.reserve(idx.size());
  for (std::size_t i : idx) feats.push_back(&data[i].features);
  return model::stack_batch(feats, rows, cols);
}

struct DevStats {
  double eer = 0.0;
  double loss = 0.0;
};

DevStats dev_stats(const model::Classifier& m, std::span<const Example> dev, int batch_size) {
  ad::NoGradGuard guard;
  const auto& cfg = m.config();
  std::vector<eval::ScoreRecord> scores;
  scores.reserve(dev.size());
  double loss = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < dev.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(dev.size(), start + static_cast<std::size_t>(batch_size));
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto logp = ad::log_softmax_rows(m.forward_logits(batch_of(dev, idx, cfg.input_rows, cfg.input_cols)).value());
    const std::size_t k = logp.dim(1);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto& ex = dev[idx[r]];
      loss -= logp[r * k + class_index(ex.label)];
      scores.push_back({ex.utt_id, ex.label, static_cast<double>(logp[r * k + class_index(Label::genuine)])});
    }
  }
  return {eval::compute_eer(scores).eer, loss / static_cast<double>(dev.size())};
}

std::vector<Example> union_of(const TaskSequence& seq, std::size_t upto, std::vector<Example> Task::*split) {
  std::vector<Example> all;
  for (std::size_t t = 0; t <= upto; ++t) {
    const auto& part = seq.tasks[t].*split;
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

model::Classifier fresh_model(const SequenceConfig& cfg, std::uint64_t seed) {
  model::LcnnConfig mc = cfg.model;
  mc.init_seed = derive_seed(seed, {kInitStream});
  return model::Classifier(mc);
}

void evaluate_step(const TaskSequence& seq, const model::Classifier& m, std::size_t step,
                   SequenceResult& r) {
  std::vector<double> row;
  std::vector<double> dev_row;
  double dev_loss = 0.0;
  for (std::size_t j = 0; j <= step; ++j) {
    row.push_back(eer_of(m, seq.tasks[j].eval));
    dev_row.push_back(eer_of(m, seq.tasks[j].dev));
    dev_loss += dev_stats(m, seq.tasks[j].dev, 64).loss;
  }
  r.dev_loss_per_step.push_back(dev_loss / static_cast<double>(step + 1));
  r.avg_eer_per_step.push_back(eval::avg_eer(row));
  r.dev_avg_eer_per_step.push_back(eval::avg_eer(dev_row));
  r.eer_matrix.push_back(std::move(row));
  r.dev_eer_matrix.push_back(std::move(dev_row));
}

void check_sequence_shape(const TaskSequence& seq, const SequenceConfig& cfg) {
  seq.validate();
  cfg.model.validate();
  cfg.train.adam.validate();
  if (seq.feature_rows != cfg.model.input_rows || seq.feature_cols != cfg.model.input_cols) {
    throw ConfigError("model input " + std::to_string(cfg.model.input_rows) + "x" +
                      std::to_string(cfg.model.input_cols) + " does not match features " +
                      std::to_string(seq.feature_rows) + "x" + std::to_string(seq.feature_cols));
  }
}

void record_step(const TaskSequence& seq, std::size_t step, TrainResult tr, std::uint64_t seed,
                 SequenceResult& r) {
  evaluate_step(seq, tr.model, step, r);
  r.task_ids.push_back(seq.tasks[step].task_id);
  r.best_epoch.push_back(tr.best_epoch);
  r.loss_log.insert(r.loss_log.end(), tr.log.begin(), tr.log.end());
  const model::CheckpointMeta meta{seq.tasks[step].task_id, static_cast<int>(step) + 1, tr.best_epoch, seed};
  r.checkpoints.push_back(model::serialize_checkpoint(tr.model, meta));
}

}  // namespace

StrategyKind parse_strategy(const std::string& s) {
  if (s == "fine_tune") return StrategyKind::fine_tune;
  if (s == "multi_condition") return StrategyKind::multi_condition;
  if (s == "dfwf") return StrategyKind::dfwf;
  if (s == "lwf_only") return StrategyKind::lwf_only;
  if (s == "psa_only") return StrategyKind::psa_only;
  throw ConfigError("unknown strategy '" + s +
                    "' (expected fine_tune, multi_condition, dfwf, lwf_only or psa_only)");
}

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::fine_tune: return "fine_tune";
    case StrategyKind::multi_condition: return "multi_condition";
    case StrategyKind::dfwf: return "dfwf";
    case StrategyKind::lwf_only: return "lwf_only";
    case StrategyKind::psa_only: return "psa_only";
  }
  return "?";
}

bool TrainingStrategy::uses_teacher() const {
  return kind == StrategyKind::dfwf || kind == StrategyKind::lwf_only || kind == StrategyKind::psa_only;
}

void TrainingStrategy::validate() const {
  weights.validate();
  distill.validate();
  const bool a = weights.alpha != 0.0;
  const bool b = weights.beta != 0.0;
  if ((kind == StrategyKind::fine_tune || kind == StrategyKind::multi_condition) && (a || b)) {
    throw ConfigError(to_string(kind) + " requires alpha = beta = 0");
  }
  if (kind == StrategyKind::lwf_only && b) throw ConfigError("lwf_only requires beta = 0");
  if (kind == StrategyKind::psa_only && a) throw ConfigError("psa_only requires alpha = 0");
}

TrainingStrategy TrainingStrategy::fine_tune() {
  TrainingStrategy s;
  s.kind = StrategyKind::fine_tune;
  s.weights = {0.0, 0.0};
  return s;
}

TrainingStrategy TrainingStrategy::multi_condition() {
  TrainingStrategy s;
  s.kind = StrategyKind::multi_condition;
  s.weights = {0.0, 0.0};
  return s;
}

TrainResult train_task(const model::Classifier& init, const model::Classifier* teacher,
                       std::span<const Example> train, std::span<const Example> dev,
                       const TrainingStrategy& strategy, const TrainOptions& options,
                       std::uint64_t seed, int step, const std::string& task_id) {
  strategy.validate();
  options.adam.validate();
  if (train.empty()) throw ConfigError("train_task: empty training set");
  if (strategy.uses_teacher() && teacher == nullptr) {
    throw ConfigError("strategy " + to_string(strategy.kind) + " needs a teacher model");
  }
  if (!strategy.uses_teacher()) teacher = nullptr;

  const auto& mc = init.config();
  TrainResult result{init, 0, std::numeric_limits<double>::infinity(), {}};
  model::Classifier student = init;
  student.set_trainable(true);
  AdamState<float> state;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(options.adam.batch_size);
  const double temperature = strategy.distill.temperature;
  double best_dev_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= options.adam.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log{step, task_id, epoch, train.size()};
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const FTensor batch = batch_of(train, idx, mc.input_rows, mc.input_cols);
      std::vector<Label> labels;
      std::vector<std::size_t> genuine;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        labels.push_back(train[idx[r]].label);
        if (train[idx[r]].label == Label::genuine) genuine.push_back(r);
      }

      const auto out = student.forward(batch);
      const FVar ce = loss::cross_entropy<float>(out.logits, labels);
      FVar lwf;
      FVar psa;
      if (teacher != nullptr) {
        model::Classifier::Output t;
        {
          ad::NoGradGuard guard;
          t = teacher->forward(batch);
        }
        lwf = loss::lwf_loss<float>(ad::softmax_rows(t.logits.value()), ad::softmax(out.logits), temperature);
        if (genuine.empty()) {
          psa = FVar::constant(FTensor::scalar(0.0f));
        } else {
          FVar t_emb = ad::gather_rows(t.embedding, std::span<const std::size_t>(genuine));
          psa = loss::psa_loss<float>(t_emb.value(), ad::gather_rows(out.embedding, std::span<const std::size_t>(genuine)),
                                      strategy.psa_form);
        }
      }
      const auto br = loss::total_loss<float>(ce, lwf, psa, strategy.weights);
      if (!std::isfinite(br.total)) {
        throw NumericError("non-finite loss at step " + std::to_string(step) + " epoch " +
                           std::to_string(epoch));
      }
      student.zero_grad();
      ad::backward(br.objective);
      adam_step<float>(student.parameters(), state, options.adam);

      const auto w = static_cast<double>(idx.size());
      log.original += w * br.original;
      log.lwf += w * br.lwf;
      log.psa += w * br.psa;
      log.total += w * br.total;
    }
    const auto n = static_cast<double>(train.size());
    log.original /= n;
    log.lwf /= n;
    log.psa /= n;
    log.total /= n;

    const bool use_dev = options.select_best_dev && !dev.empty();
    if (use_dev) {
      const DevStats ds = dev_stats(student, dev, std::max(options.adam.batch_size, 64));
      log.dev_eer = ds.eer;
      log.dev_loss = ds.loss;
      if (ds.eer < result.best_dev_eer || (ds.eer == result.best_dev_eer && ds.loss < best_dev_loss)) {
        result.best_dev_eer = ds.eer;
        best_dev_loss = ds.loss;
        result.best_epoch = epoch;
        result.model = student;
      }
    } else {
      log.dev_eer = std::numeric_limits<double>::quiet_NaN();
      log.dev_loss = std::numeric_limits<double>::quiet_NaN();
      result.best_epoch = epoch;
      result.model = student;
    }
    result.log.push_back(log);
  }
  if (!std::isfinite(result.best_dev_eer)) result.best_dev_eer = std::numeric_limits<double>::quiet_NaN();
  result.model.zero_grad();
  return result;
}

std::vector<eval::ScoreRecord> score_examples(const model::Classifier& m, std::span<const Example> examples,
                                              int batch_size) {
  ad::NoGradGuard guard;
  const auto& cfg = m.config();
  std::vector<eval::ScoreRecord> scores;
  scores.reserve(examples.size());
  std::vector<std::size_t> idx;
  const auto bs = static_cast<std::size_t>(std::max(batch_size, 1));
  for (std::size_t start = 0; start < examples.size(); start += bs) {
    const std::size_t end = std::min(examples.size(), start + bs);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto logp =
        ad::log_softmax_rows(m.forward_logits(batch_of(examples, idx, cfg.input_rows, cfg.input_cols)).value());
    const std::size_t k = logp.dim(1);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto& ex = examples[idx[r]];
      scores.push_back({ex.utt_id, ex.label, static_cast<double>(logp[r * k + class_index(Label::genuine)])});
    }
  }
  return scores;
}

Eigen::MatrixXd embed_examples(const model::Classifier& m, std::span<const Example> examples, int batch_size) {
  ad::NoGradGuard guard;
  const auto& cfg = m.config();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(examples.size()), cfg.embedding_dim);
  std::vector<std::size_t> idx;
  const auto bs = static_cast<std::size_t>(std::max(batch_size, 1));
  for (std::size_t start = 0; start < examples.size(); start += bs) {
    const std::size_t end = std::min(examples.size(), start + bs);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto emb = m.forward_embedding(batch_of(examples, idx, cfg.input_rows, cfg.input_cols)).value();
    const std::size_t d = emb.dim(1);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        out(static_cast<Eigen::Index>(start + r), static_cast<Eigen::Index>(c)) = emb[r * d + c];
      }
    }
  }
  return out;
}

double eer_of(const model::Classifier& m, std::span<const Example> examples) {
  const auto scores = score_examples(m, examples);
  return eval::compute_eer(scores).eer;
}

model::Classifier SequenceResult::model_at(std::size_t step) const {
  if (step >= checkpoints.size()) throw ConfigError("no checkpoint for step " + std::to_string(step + 1));
  return model::deserialize_checkpoint(checkpoints[step]).model;
}

SequenceResult train_base(const TaskSequence& seq, const SequenceConfig& cfg, std::uint64_t seed,
                          const StepCallback& on_step) {
  check_sequence_shape(seq, cfg);
  SequenceResult r;
  const model::Classifier init = fresh_model(cfg, seed);
  TrainResult tr = train_task(init, nullptr, seq.tasks[0].train, seq.tasks[0].dev, TrainingStrategy::fine_tune(),
                              cfg.train, derive_seed(seed, {kTrainStream, 0}), 1, seq.tasks[0].task_id);
  record_step(seq, 0, std::move(tr), seed, r);
  if (on_step) on_step(r);
  return r;
}

SequenceResult continue_sequence(const TaskSequence& seq, const TrainingStrategy& strategy,
                                 const SequenceConfig& cfg, std::uint64_t seed, SequenceResult base,
                                 const StepCallback& on_step) {
  check_sequence_shape(seq, cfg);
  strategy.validate();
  if (base.steps() == 0 || base.steps() > seq.tasks.size()) {
    throw ConfigError("base result must hold between 1 and " + std::to_string(seq.tasks.size()) + " steps");
  }
  for (std::size_t i = 0; i < base.steps(); ++i) {
    if (base.task_ids[i] != seq.tasks[i].task_id) {
      throw ConfigError("base result step " + std::to_string(i + 1) + " was trained on '" + base.task_ids[i] +
                        "', not '" + seq.tasks[i].task_id + "'");
    }
  }
  SequenceResult r = std::move(base);
  model::Classifier current = r.model_at(r.steps() - 1);
  for (std::size_t i = r.steps(); i < seq.tasks.size(); ++i) {
    const auto& task = seq.tasks[i];
    const std::uint64_t step_seed = derive_seed(seed, {kTrainStream, i});
    std::optional<TrainResult> tr;
    if (strategy.kind == StrategyKind::multi_condition) {
      const auto train = union_of(seq, i, &Task::train);
      const auto dev = union_of(seq, i, &Task::dev);
      tr = train_task(fresh_model(cfg, seed), nullptr, train, dev, strategy, cfg.train, step_seed,
                      static_cast<int>(i) + 1, task.task_id);
    } else {
      const auto teacher = model::snapshot_teacher(current);
      tr = train_task(current, strategy.uses_teacher() ? teacher.get() : nullptr, task.train, task.dev, strategy,
                      cfg.train, step_seed, static_cast<int>(i) + 1, task.task_id);
    }
    current = tr->model;
    record_step(seq, i, std::move(*tr), seed, r);
    if (on_step) on_step(r);
  }
  return r;
}

SequenceResult run_sequence(const TaskSequence& seq, const TrainingStrategy& strategy, const SequenceConfig& cfg,
                            std::uint64_t seed, const StepCallback& on_step) {
  strategy.validate();
  return continue_sequence(seq, strategy, cfg, seed, train_base(seq, cfg, seed, on_step), on_step);
}

GridSearchResult grid_search(const TaskSequence& seq, const TrainingStrategy& strategy,
                             std::span<const double> alphas, std::span<const double> betas,
                             const SequenceConfig& cfg, std::uint64_t seed, const SequenceResult& base) {
  if (!strategy.uses_teacher()) {
    throw ConfigError("grid search applies to dfwf, lwf_only and psa_only, not " + to_string(strategy.kind));
  }
  const std::vector<double> zero{0.0};
  const std::span<const double> as = strategy.kind == StrategyKind::psa_only ? std::span<const double>(zero) : alphas;
  const std::span<const double> bs = strategy.kind == StrategyKind::lwf_only ? std::span<const double>(zero) : betas;
  if (as.empty() || bs.empty()) throw ConfigError("grid search needs at least one alpha and one beta");

  GridSearchResult out;
  double best = std::numeric_limits<double>::infinity();
  double best_loss = std::numeric_limits<double>::infinity();
  for (double a : as) {
    for (double b : bs) {
      TrainingStrategy s = strategy;
      s.weights = {a, b};
      SequenceResult r = continue_sequence(seq, s, cfg, seed, base);
      const double score = r.dev_avg_eer_per_step.back();
      const double loss = r.dev_loss_per_step.back();
      out.cells.push_back({s.weights, score, loss});
      if (score < best || (score == best && loss < best_loss)) {
        best = score;
        best_loss = loss;
        out.best = s.weights;
        out.result = std::move(r);
      }
    }
  }
  return out;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  return f;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_eer_matrix_csv(const std::filesystem::path& path, const SequenceResult& r) {
  auto f = open_csv(path);
  f << "step,trained_on";
  for (const auto& id : r.task_ids) f << ",eer_" << id;
  f << "\n";
  for (std::size_t i = 0; i < r.steps(); ++i) {
    f << i + 1 << "," << r.task_ids[i];
    for (std::size_t j = 0; j < r.task_ids.size(); ++j) f << "," << (j <= i ? fmt(r.eer_matrix[i][j]) : "");
    f << "\n";
  }
}

void write_avg_eer_csv(const std::filesystem::path& path, const SequenceResult& r) {
  auto f = open_csv(path);
  f << "step,task,avg_eer,dev_avg_eer,best_epoch\n";
  for (std::size_t i = 0; i < r.steps(); ++i) {
    f << i + 1 << "," << r.task_ids[i] << "," << fmt(r.avg_eer_per_step[i]) << ","
      << fmt(r.dev_avg_eer_per_step[i]) << "," << r.best_epoch[i] << "\n";
  }
}

void write_loss_log_csv(const std::filesystem::path& path, std::span<const EpochLog> log) {
  auto f = open_csv(path);
  f << "step,task,epoch,examples,original,lwf,psa,total,dev_eer,dev_loss\n";
  for (const auto& e : log) {
    f << e.step << "," << e.task_id << "," << e.epoch << "," << e.examples << "," << fmt(e.original) << "," << fmt(e.lwf) << ","
      << fmt(e.psa) << "," << fmt(e.total) << "," << fmt(e.dev_eer) << "," << fmt(e.dev_loss) << "\n";
  }
}

}  // namespace dfwf::train
