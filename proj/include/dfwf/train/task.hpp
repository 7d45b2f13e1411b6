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

#include <string>
#include <vector>

#include "dfwf/label.hpp"

namespace dfwf::train {

// One utterance ready for the classifier: a row-major
// [feature_rows x feature_cols] LFCC matrix in float.
struct Example {
  std::string utt_id;
  Label label = Label::genuine;
  std::string type_id;
  std::vector<float> features;
};

struct Task {
  std::string task_id;
  std::vector<Example> train, dev, eval;
};

// Ordered tasks of a sequential-training experiment.
struct TaskSequence {
  std::vector<Task> tasks;
  int feature_rows = 60;
  int feature_cols = 320;

  // Throws ConfigError unless the sequence is non-empty, task ids are
  // unique, utterance ids are unique across every split, every split holds
  // both classes and every feature buffer has the declared size.
  void validate() const;
};

}  // namespace dfwf::train
