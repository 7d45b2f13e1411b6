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

#include "dfwf/train/task.hpp"

#include <unordered_set>

#include "dfwf/error.hpp"

namespace dfwf::train {

void TaskSequence::validate() const {
  if (tasks.empty()) throw ConfigError("task sequence is empty");
  const auto per = static_cast<std::size_t>(feature_rows) * static_cast<std::size_t>(feature_cols);
  std::unordered_set<std::string> task_ids, utt_ids;
  for (const auto& task : tasks) {
    if (!task_ids.insert(task.task_id).second) throw ConfigError("duplicate task id " + task.task_id);
    const std::pair<const char*, const std::vector<Example>*> splits[] = {
        {"train", &task.train}, {"dev", &task.dev}, {"eval", &task.eval}};
    for (const auto& [name, split] : splits) {
      bool genuine = false, spoof = false;
      for (const auto& ex : *split) {
        if (!utt_ids.insert(ex.utt_id).second) throw ConfigError("duplicate utterance id " + ex.utt_id);
        if (ex.features.size() != per) {
          throw ConfigError("utterance " + ex.utt_id + " has " + std::to_string(ex.features.size()) +
                            " feature values, expected " + std::to_string(per));
        }
        (ex.label == Label::genuine ? genuine : spoof) = true;
      }
      if (!genuine || !spoof) {
        throw ConfigError("task " + task.task_id + " " + name + " split must contain both classes");
      }
    }
  }
}

}  // namespace dfwf::train
