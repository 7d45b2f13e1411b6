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

#include <span>
#include <vector>

#include "dfwf/ad/graph.hpp"

namespace dfwf::train {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 30;
  int batch_size = 32;
  // Throws ConfigError unless lr > 0, 0 <= beta1, beta2 < 1, epsilon > 0,
  // epochs >= 1 and batch_size >= 1.
  void validate() const;
};

// First and second moments per parameter plus the shared step count.
template <class T>
struct AdamState {
  std::vector<ad::Tensor<T>> m;
  std::vector<ad::Tensor<T>> v;
  long step = 0;
};

// One bias-corrected Adam update of every trainable parameter from its
// current gradient. The state is sized on first use; a state built for a
// different parameter list raises ShapeError.
template <class T>
void adam_step(std::span<ad::Parameter<T>> params, AdamState<T>& state, const AdamConfig& cfg);

}  // namespace dfwf::train
