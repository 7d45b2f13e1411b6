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

#include "dfwf/eval/metrics.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "dfwf/error.hpp"

namespace dfwf::eval {

EvalReport compute_eer(std::span<const ScoreRecord> records) {
  std::vector<std::pair<double, Label>> sorted;
  sorted.reserve(records.size());
  std::int64_t genuine = 0, spoof = 0;
  for (const auto& r : records) {
    if (!std::isfinite(r.score)) throw DataError("non-finite score for " + r.utt_id);
    (r.label == Label::genuine ? genuine : spoof)++;
    sorted.emplace_back(r.score, r.label);
  }
  if (genuine == 0 || spoof == 0) {
    throw DataError("EER needs both genuine and spoof trials (got " + std::to_string(genuine) +
                    " genuine, " + std::to_string(spoof) + " spoof)");
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  // Sweep point: spoofs accepted (fa) and genuine rejected (fr) at a
  // threshold. D = fa * G - fr * S is FAR - FRR scaled by G * S.
  struct Point {
    std::int64_t fa, fr;
    double threshold;
  };
  auto d_of = [&](const Point& p) { return p.fa * genuine - p.fr * spoof; };

  Point prev{spoof, 0, -std::numeric_limits<double>::infinity()};
  std::int64_t rejected_genuine = 0, rejected_spoof = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double t = sorted[i].first;
    while (i < sorted.size() && sorted[i].first == t) {
      (sorted[i].second == Label::genuine ? rejected_genuine : rejected_spoof)++;
      ++i;
    }
    const Point cur{spoof - rejected_spoof, rejected_genuine, t};
    const std::int64_t d_prev = d_of(prev), d_cur = d_of(cur);
    if (d_cur <= 0) {
      EvalReport rep;
      rep.n_genuine = static_cast<std::size_t>(genuine);
      rep.n_spoof = static_cast<std::size_t>(spoof);
      if (d_cur == 0) {
        rep.eer = static_cast<double>(cur.fa) / static_cast<double>(spoof);
        rep.threshold = t;
        return rep;
      }
      // lambda = d_prev / (d_prev - d_cur) along the segment prev -> cur;
      // EER = (fa_prev + lambda (fa_cur - fa_prev)) / S as a single fraction.
      const __int128 span = d_prev - d_cur;
      const __int128 num = static_cast<__int128>(prev.fa) * span + static_cast<__int128>(d_prev) * (cur.fa - prev.fa);
      const __int128 den = static_cast<__int128>(spoof) * span;
      rep.eer = static_cast<double>(num) / static_cast<double>(den);
      const double lambda = static_cast<double>(d_prev) / static_cast<double>(span);
      rep.threshold = std::isinf(prev.threshold) ? t : prev.threshold + lambda * (t - prev.threshold);
      return rep;
    }
    prev = cur;
  }
  // Unreachable: the last sweep point rejects everything (fa = 0).
  throw DataError("EER sweep did not cross");
}

double avg_eer(std::span<const double> eers) {
  if (eers.empty()) throw ConfigError("avg_eer of an empty list");
  double total = 0.0;
  for (double e : eers) total += e;
  return total / static_cast<double>(eers.size());
}

Eigen::MatrixX2d project_embeddings_2d(const Eigen::MatrixXd& embeddings) {
  if (embeddings.rows() < 2) throw DataError("projection needs at least two rows");
  const Eigen::RowVectorXd mean = embeddings.colwise().mean();
  const Eigen::MatrixXd centred = embeddings.rowwise() - mean;
  if (centred.cwiseAbs().maxCoeff() == 0.0) {
    throw DataError("projection of rank-0 data (all rows identical)");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinV);
  Eigen::MatrixXd axes = Eigen::MatrixXd::Zero(embeddings.cols(), 2);
  const Eigen::Index k = std::min<Eigen::Index>(2, svd.matrixV().cols());
  axes.leftCols(k) = svd.matrixV().leftCols(k);
  for (Eigen::Index c = 0; c < 2; ++c) {
    Eigen::Index arg = 0;
    axes.col(c).cwiseAbs().maxCoeff(&arg);
    if (axes(arg, c) < 0) axes.col(c) *= -1.0;
  }
  return centred * axes;
}

void write_scores(const std::filesystem::path& path, std::span<const ScoreRecord> records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write score file " + path.string());
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%.6f", r.score);
    out << r.utt_id << '\t' << to_string(r.label) << '\t' << buf << '\n';
  }
  if (!out) throw DataError("failed writing score file " + path.string());
}

std::vector<ScoreRecord> read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score file " + path.string());
  std::vector<ScoreRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      return DataError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 3) throw fail("expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    ScoreRecord r;
    r.utt_id = fields[0];
    try {
      r.label = parse_label(fields[1]);
    } catch (const DataError& e) {
      throw fail(e.what());
    }
    char* end = nullptr;
    r.score = std::strtod(fields[2].c_str(), &end);
    if (fields[2].empty() || *end != '\0' || !std::isfinite(r.score)) {
      throw fail("bad score '" + fields[2] + "'");
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace dfwf::eval
