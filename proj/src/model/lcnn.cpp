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

#include "dfwf/model/lcnn.hpp"

#include <cmath>
#include <random>

#include "dfwf/ad/ops.hpp"
#include "dfwf/error.hpp"

namespace dfwf::model {

LcnnConfig LcnnConfig::desk_default() {
  LcnnConfig c;
  c.conv_blocks = {
      {.out_channels = 8, .kernel = 5, .stride = 2, .padding = 2, .pool = 2},
      {.out_channels = 16, .kernel = 3, .stride = 1, .padding = 1, .pool = 2},
      {.out_channels = 32, .kernel = 3, .stride = 1, .padding = 1, .pool = 2},
  };
  return c;
}

namespace {

struct StageShape {
  long channels, rows, cols;
};

// Walks the conv stack; returns the final [channels, rows, cols].
StageShape trace_shapes(const LcnnConfig& c) {
  StageShape s{1, c.input_rows, c.input_cols};
  for (std::size_t b = 0; b < c.conv_blocks.size(); ++b) {
    const auto& blk = c.conv_blocks[b];
    const std::string where = "conv block " + std::to_string(b);
    if (blk.out_channels <= 0 || blk.out_channels % 2 != 0) {
      throw ConfigError(where + ": out_channels must be positive and even (MFM halves it)");
    }
    if (blk.kernel <= 0 || blk.stride <= 0 || blk.padding < 0) {
      throw ConfigError(where + ": kernel and stride must be positive, padding non-negative");
    }
    const long pr = s.rows + 2 * blk.padding, pc = s.cols + 2 * blk.padding;
    if (pr < blk.kernel || pc < blk.kernel) throw ConfigError(where + ": kernel larger than input");
    s.rows = (pr - blk.kernel) / blk.stride + 1;
    s.cols = (pc - blk.kernel) / blk.stride + 1;
    s.channels = blk.out_channels / 2;
    if (blk.pool > 1) {
      if (s.rows < blk.pool || s.cols < blk.pool) throw ConfigError(where + ": pooling window larger than input");
      s.rows = (s.rows - blk.pool) / blk.pool + 1;
      s.cols = (s.cols - blk.pool) / blk.pool + 1;
    }
  }
  return s;
}

long pooled_width(const LcnnConfig& c) {
  const StageShape s = trace_shapes(c);
  return c.pooling == Pooling::mean_tf ? s.channels : s.channels * s.rows;
}

std::string pooling_name(Pooling p) { return p == Pooling::mean_tf ? "mean_tf" : "mean_time"; }

}  // namespace

void LcnnConfig::validate() const {
  if (input_rows <= 0 || input_cols <= 0) throw ConfigError("input size must be positive");
  if (embedding_dim <= 0) throw ConfigError("embedding_dim must be positive");
  if (num_classes != 2) throw ConfigError("num_classes must be 2");
  trace_shapes(*this);
}

void to_json(nlohmann::json& j, const LcnnConfig& c) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : c.conv_blocks) {
    blocks.push_back({{"out_channels", b.out_channels},
                      {"kernel", b.kernel},
                      {"stride", b.stride},
                      {"padding", b.padding},
                      {"pool", b.pool}});
  }
  j = nlohmann::json{{"input_rows", c.input_rows},
                     {"input_cols", c.input_cols},
                     {"conv_blocks", blocks},
                     {"embedding_dim", c.embedding_dim},
                     {"num_classes", c.num_classes},
                     {"pooling", pooling_name(c.pooling)},
                     {"final_bias", c.final_bias},
                     {"init_seed", c.init_seed}};
}

void from_json(const nlohmann::json& j, LcnnConfig& c) {
  c = LcnnConfig::desk_default();
  c.input_rows = j.value("input_rows", c.input_rows);
  c.input_cols = j.value("input_cols", c.input_cols);
  if (j.contains("conv_blocks")) {
    c.conv_blocks.clear();
    for (const auto& b : j.at("conv_blocks")) {
      ConvBlockConfig blk;
      blk.out_channels = b.value("out_channels", blk.out_channels);
      blk.kernel = b.value("kernel", blk.kernel);
      blk.stride = b.value("stride", blk.stride);
      blk.padding = b.value("padding", blk.padding);
      blk.pool = b.value("pool", blk.pool);
      c.conv_blocks.push_back(blk);
    }
  }
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.num_classes = j.value("num_classes", c.num_classes);
  const std::string pooling = j.value("pooling", pooling_name(c.pooling));
  if (pooling == "mean_tf") {
    c.pooling = Pooling::mean_tf;
  } else if (pooling == "mean_time") {
    c.pooling = Pooling::mean_time;
  } else {
    throw ConfigError("unknown pooling '" + pooling + "'");
  }
  c.final_bias = j.value("final_bias", c.final_bias);
  c.init_seed = j.value("init_seed", c.init_seed);
}

Classifier::Classifier(LcnnConfig config) : config_(std::move(config)) {
  config_.validate();
  build_parameters();
}

void Classifier::build_parameters() {
  std::mt19937_64 rng(config_.init_seed);
  auto uniform = [&rng](ad::Shape shape, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<float>(dist(rng));
    return t;
  };

  std::size_t in_channels = 1;
  for (std::size_t b = 0; b < config_.conv_blocks.size(); ++b) {
    const auto& blk = config_.conv_blocks[b];
    const auto k = static_cast<std::size_t>(blk.kernel);
    const auto out = static_cast<std::size_t>(blk.out_channels);
    const std::string prefix = "block" + std::to_string(b) + ".conv.";
    params_.emplace_back(prefix + "weight", uniform({out, in_channels, k, k}, in_channels * k * k));
    params_.emplace_back(prefix + "bias", Tensor({out}));
    in_channels = out / 2;
  }
  const auto pooled = static_cast<std::size_t>(pooled_width(config_));
  const auto emb = static_cast<std::size_t>(config_.embedding_dim);
  const auto classes = static_cast<std::size_t>(config_.num_classes);
  params_.emplace_back("embed.weight", uniform({pooled, 2 * emb}, pooled));
  params_.emplace_back("embed.bias", Tensor({2 * emb}));
  params_.emplace_back("head.weight", uniform({emb, classes}, emb));
  if (config_.final_bias) params_.emplace_back("head.bias", Tensor({classes}));
}

Classifier::Output Classifier::forward(const Tensor& batch) const {
  const auto rows = static_cast<std::size_t>(config_.input_rows);
  const auto cols = static_cast<std::size_t>(config_.input_cols);
  const ad::Shape& s = batch.shape();
  const bool ok3 = s.size() == 3 && s[1] == rows && s[2] == cols;
  const bool ok4 = s.size() == 4 && s[1] == 1 && s[2] == rows && s[3] == cols;
  if (!(ok3 || ok4) || s[0] == 0) {
    throw ShapeError("classifier expects [n, " + std::to_string(rows) + ", " + std::to_string(cols) +
                     "] input, got " + ad::shape_string(s));
  }
  Var x = Var::constant(batch.reshaped({s[0], 1, rows, cols}));
  std::size_t p = 0;
  for (const auto& blk : config_.conv_blocks) {
    const ad::Conv2dOptions opts{static_cast<std::size_t>(blk.stride), static_cast<std::size_t>(blk.stride),
                                 static_cast<std::size_t>(blk.padding), static_cast<std::size_t>(blk.padding)};
    x = ad::conv2d(x, params_[p].var(), params_[p + 1].var(), opts);
    p += 2;
    x = ad::max_feature_map(x);
    if (blk.pool > 1) {
      x = ad::max_pool2d(x, static_cast<std::size_t>(blk.pool), static_cast<std::size_t>(blk.pool));
    }
  }
  Var pooled = config_.pooling == Pooling::mean_tf ? ad::mean_spatial(x) : ad::mean_time(x);
  Output out;
  out.embedding = ad::max_feature_map(ad::linear(pooled, params_[p].var(), params_[p + 1].var()));
  p += 2;
  out.logits = config_.final_bias ? ad::linear(out.embedding, params_[p].var(), params_[p + 1].var())
                                  : ad::linear(out.embedding, params_[p].var());
  return out;
}

std::size_t Classifier::num_parameters() const {
  std::size_t n = 0;
  for (const auto& prm : params_) n += prm.tensor().size();
  return n;
}

void Classifier::zero_grad() {
  for (auto& prm : params_) prm.zero_grad();
}

void Classifier::set_trainable(bool on) {
  for (auto& prm : params_) prm.set_trainable(on);
}

bool Classifier::frozen() const {
  for (const auto& prm : params_) {
    if (prm.trainable()) return false;
  }
  return true;
}

std::shared_ptr<const Classifier> snapshot_teacher(const Classifier& model) {
  auto copy = std::make_shared<Classifier>(model);
  copy->set_trainable(false);
  return copy;
}

ad::Tensor<float> stack_batch(const std::vector<const std::vector<float>*>& features, int rows, int cols) {
  const auto per = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  ad::Tensor<float> batch({features.size(), static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)});
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i]->size() != per) {
      throw ShapeError("feature buffer of " + std::to_string(features[i]->size()) +
                       " values, expected " + std::to_string(per));
    }
    std::copy(features[i]->begin(), features[i]->end(), batch.data() + i * per);
  }
  return batch;
}

}  // namespace dfwf::model
