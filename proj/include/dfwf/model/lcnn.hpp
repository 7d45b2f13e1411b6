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
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfwf/ad/graph.hpp"

namespace dfwf::model {

// One [conv -> MFM -> max-pool] stage. `out_channels` counts conv outputs
// before the MFM halves them, so it must be even. pool <= 1 disables pooling.
struct ConvBlockConfig {
  int out_channels = 8;
  int kernel = 3;
  int stride = 1;
  int padding = 1;
  int pool = 2;

  friend bool operator==(const ConvBlockConfig&, const ConvBlockConfig&) = default;
};

// Reduction applied to the last conv block's output before the embedding
// layer: mean_tf averages over frequency and time ([n, c]); mean_time
// averages over time only and keeps one value per channel and frequency
// row ([n, c * h]).
enum class Pooling { mean_tf, mean_time };

struct LcnnConfig {
  int input_rows = 60;
  int input_cols = 320;
  std::vector<ConvBlockConfig> conv_blocks;
  int embedding_dim = 80;
  int num_classes = 2;
  Pooling pooling = Pooling::mean_time;
  bool final_bias = true;
  std::uint64_t init_seed = 0;

  // Three conv-MFM-pool blocks sized for single-core training.
  static LcnnConfig desk_default();

  // Throws ConfigError on violated invariants; also checks that the conv
  // stack fits the input size.
  void validate() const;

  friend bool operator==(const LcnnConfig&, const LcnnConfig&) = default;
};

void to_json(nlohmann::json& j, const LcnnConfig& c);
void from_json(const nlohmann::json& j, LcnnConfig& c);

// LCNN-style binary classifier:
//   blocks of [conv -> MFM -> max-pool], pooling, fc -> MFM (embedding),
//   fc -> logits.
// The embedding is the output of everything except the last full
// connection layer.
class Classifier {
 public:
  using Tensor = ad::Tensor<float>;
  using Var = ad::Var<float>;
  using Parameter = ad::Parameter<float>;

  struct Output {
    Var embedding;  // [n x embedding_dim]
    Var logits;     // [n x num_classes]
  };

  explicit Classifier(LcnnConfig config);

  // `batch` is [n, input_rows, input_cols] (or [n, 1, rows, cols]).
  // Throws ShapeError on any other shape.
  Output forward(const Tensor& batch) const;
  Var forward_embedding(const Tensor& batch) const { return forward(batch).embedding; }
  Var forward_logits(const Tensor& batch) const { return forward(batch).logits; }

  const LcnnConfig& config() const { return config_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::size_t num_parameters() const;

  void zero_grad();
  // Marks every parameter (non-)trainable; a frozen model records no graph.
  void set_trainable(bool on);
  bool frozen() const;

 private:
  void build_parameters();

  LcnnConfig config_;
  std::vector<Parameter> params_;
};

// Deep, frozen copy used as the distillation teacher.
std::shared_ptr<const Classifier> snapshot_teacher(const Classifier& model);

// Batch tensor [n, rows, cols] from per-utterance feature buffers.
ad::Tensor<float> stack_batch(const std::vector<const std::vector<float>*>& features, int rows,
                              int cols);

}  // namespace dfwf::model
