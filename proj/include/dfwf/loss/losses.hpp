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
#include <string>

#include "dfwf/ad/graph.hpp"
#include "dfwf/label.hpp"

namespace dfwf::loss {

// Weights of the distillation (alpha) and genuine-embedding alignment (beta)
// terms in the total objective.
struct LossWeights {
  double alpha = 0.0;
  double beta = 0.0;
  // Throws ConfigError when either weight is negative or non-finite.
  void validate() const;
};

struct DistillationConfig {
  double temperature = 2.0;
  void validate() const;
};

// How the mean cosine similarity c of genuine embeddings enters the loss.
//   one_minus_cos: 1 - c   (zero at perfect alignment; default)
//   neg_cos:       -c
//   raw_cos:       c       (literal form; pushes embeddings apart)
enum class PsaForm { one_minus_cos, neg_cos, raw_cos };

PsaForm parse_psa_form(const std::string& s);
std::string to_string(PsaForm f);

inline constexpr double kProbabilityFloor = 1e-12;

template <class T>
struct LossBreakdown {
  double original = 0.0;
  double lwf = 0.0;
  double psa = 0.0;
  double total = 0.0;
  // Differentiable total; backward() on this trains the student.
  ad::Var<T> objective;
};

// Mean over the batch of -log softmax(logits)[label]. Throws ConfigError on
// an empty batch or label count mismatch.
template <class T>
ad::Var<T> cross_entropy(const ad::Var<T>& logits, std::span<const Label> labels);

// Row-wise y_i^(1/T) / sum_j y_j^(1/T) of a probability matrix [n x k], with
// entries floored at kProbabilityFloor first.
template <class T>
ad::Tensor<T> temperature_scale(const ad::Tensor<T>& probs, double temperature);

// Mean over the batch of -sum_i y'_old(i) log y'_new(i), both sides
// temperature scaled. `teacher_probs` is a constant; gradients reach only
// `student_probs`.
template <class T>
ad::Var<T> lwf_loss(const ad::Tensor<T>& teacher_probs, const ad::Var<T>& student_probs,
                    double temperature);

// Alignment between the teacher's genuine embeddings [p x d] and the
// student's [p x d] via the mean row-wise cosine, shaped by `form`. Returns a
// constant zero when p == 0. Throws NumericError on a zero-norm row.
template <class T>
ad::Var<T> psa_loss(const ad::Tensor<T>& teacher_embeddings, const ad::Var<T>& student_embeddings,
                    PsaForm form = PsaForm::one_minus_cos);

// total = original + alpha * lwf + beta * psa. A term whose weight is zero is
// left out of the differentiable objective, so it contributes no gradient at
// all; its value is still reported. `lwf` and `psa` may be undefined when no
// teacher is present.
template <class T>
LossBreakdown<T> total_loss(const ad::Var<T>& original, const ad::Var<T>& lwf,
                            const ad::Var<T>& psa, const LossWeights& weights);

}  // namespace dfwf::loss
