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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dfwf/label.hpp"

namespace dfwf::eval {

// Detection score for one utterance; higher means more genuine.
struct ScoreRecord {
  std::string utt_id;
  Label label = Label::genuine;
  double score = 0.0;

  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

struct EvalReport {
  double eer = 0.0;        // in [0, 1]
  double threshold = 0.0;  // accept as genuine when score > threshold
  std::size_t n_genuine = 0;
  std::size_t n_spoof = 0;
};

// Equal error rate. Thresholds sweep -inf and every distinct score, with
// "accept" meaning score > threshold; FAR is the fraction of spoofs accepted
// and FRR the fraction of genuine trials rejected. The EER is where the
// piecewise-linear ROC between adjacent sweep points crosses FAR == FRR.
// Counts are kept as integers and the crossing is formed as one exact
// rational, so the result is the correctly rounded value.
// Throws DataError unless both classes are present or if a score is not finite.
EvalReport compute_eer(std::span<const ScoreRecord> records);

// Arithmetic mean; throws ConfigError on an empty list.
double avg_eer(std::span<const double> eers);

// Mean-centred projection onto the top two principal axes, each axis signed
// so that its largest-magnitude loading is positive. Throws DataError for
// fewer than two rows or when all rows are identical.
Eigen::MatrixX2d project_embeddings_2d(const Eigen::MatrixXd& embeddings);

// Tab-separated `utt_id<TAB>label<TAB>score`, six decimals.
void write_scores(const std::filesystem::path& path, std::span<const ScoreRecord> records);
// Throws DataError naming the 1-based line number of a malformed line.
std::vector<ScoreRecord> read_scores(const std::filesystem::path& path);

}  // namespace dfwf::eval
