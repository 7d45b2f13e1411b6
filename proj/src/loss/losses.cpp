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

#include "dfwf/loss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dfwf/ad/ops.hpp"
#include "dfwf/error.hpp"

namespace dfwf::loss {

void LossWeights::validate() const {
  if (!std::isfinite(alpha) || alpha < 0) throw ConfigError("alpha must be a non-negative number");
  if (!std::isfinite(beta) || beta < 0) throw ConfigError("beta must be a non-negative number");
}

void DistillationConfig::validate() const {
  if (!std::isfinite(temperature) || temperature <= 0) {
    throw ConfigError("temperature must be positive");
  }
}

PsaForm parse_psa_form(const std::string& s) {
  if (s == "one_minus_cos") return PsaForm::one_minus_cos;
  if (s == "neg_cos") return PsaForm::neg_cos;
  if (s == "raw_cos") return PsaForm::raw_cos;
  throw ConfigError("unknown psa_form '" + s + "'");
}

std::string to_string(PsaForm f) {
  switch (f) {
    case PsaForm::one_minus_cos: return "one_minus_cos";
    case PsaForm::neg_cos: return "neg_cos";
    case PsaForm::raw_cos: return "raw_cos";
  }
  return "?";
}

namespace {

void require_matrix(const ad::Shape& s, const char* what) {
  if (s.size() != 2) throw ShapeError(std::string(what) + ": expected a matrix, got " + ad::shape_string(s));
}

}  // namespace

template <class T>
ad::Var<T> cross_entropy(const ad::Var<T>& logits, std::span<const Label> labels) {
  require_matrix(logits.shape(), "cross_entropy");
  const std::size_t n = logits.shape()[0], k = logits.shape()[1];
  if (n == 0) throw ConfigError("cross_entropy: empty batch");
  if (labels.size() != n) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  std::vector<int> target(n);
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = class_index(labels[i]);
    if (static_cast<std::size_t>(target[i]) >= k) throw ShapeError("cross_entropy: label out of range");
  }
  const ad::Tensor<T> logp = ad::log_softmax_rows(logits.value());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc -= logp[i * k + target[i]];
  return ad::make_op<T>(ad::Tensor<T>::scalar(static_cast<T>(acc / n)), {logits},
                        [n, k, target = std::move(target), logp](ad::Node<T>& self) {
                          ad::Tensor<T>& dz = self.parents[0]->grad_buffer();
                          const double g = static_cast<double>(self.grad[0]) / n;
                          for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t j = 0; j < k; ++j) {
                              const double p = std::exp(static_cast<double>(logp[i * k + j]));
                              const double onehot = static_cast<int>(j) == target[i] ? 1.0 : 0.0;
                              dz[i * k + j] += static_cast<T>(g * (p - onehot));
                            }
                          }
                        });
}

template <class T>
ad::Tensor<T> temperature_scale(const ad::Tensor<T>& probs, double temperature) {
  require_matrix(probs.shape(), "temperature_scale");
  if (!(temperature > 0)) throw ConfigError("temperature must be positive");
  const std::size_t n = probs.dim(0), k = probs.dim(1);
  ad::Tensor<T> out(probs.shape());
  std::vector<double> powered(k);
  for (std::size_t i = 0; i < n; ++i) {
    // Work in the log domain so tiny probabilities survive large 1/T.
    double mx = -INFINITY;
    for (std::size_t j = 0; j < k; ++j) {
      powered[j] = std::log(std::max<double>(probs[i * k + j], kProbabilityFloor)) / temperature;
      mx = std::max(mx, powered[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += (powered[j] = std::exp(powered[j] - mx));
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = static_cast<T>(powered[j] / total);
  }
  return out;
}

template <class T>
ad::Var<T> lwf_loss(const ad::Tensor<T>& teacher_probs, const ad::Var<T>& student_probs,
                    double temperature) {
  require_matrix(student_probs.shape(), "lwf_loss");
  if (teacher_probs.shape() != student_probs.shape()) {
    throw ShapeError("lwf_loss: teacher " + ad::shape_string(teacher_probs.shape()) +
                     " vs student " + ad::shape_string(student_probs.shape()));
  }
  const std::size_t n = teacher_probs.dim(0), k = teacher_probs.dim(1);
  if (n == 0) throw ConfigError("lwf_loss: empty batch");
  const ad::Tensor<T> q = temperature_scale(teacher_probs, temperature);
  const ad::Tensor<T> p = temperature_scale(student_probs.value(), temperature);
  double acc = 0.0;
  for (std::size_t i = 0; i < n * k; ++i) {
    acc -= static_cast<double>(q[i]) * std::log(std::max<double>(p[i], kProbabilityFloor));
  }
  return ad::make_op<T>(
      ad::Tensor<T>::scalar(static_cast<T>(acc / n)), {student_probs},
      [n, k, q, p, temperature](ad::Node<T>& self) {
        const ad::Tensor<T>& y = self.parents[0]->value;
        ad::Tensor<T>& dy = self.parents[0]->grad_buffer();
        const double g = static_cast<double>(self.grad[0]) / n;
        for (std::size_t i = 0; i < n; ++i) {
          double qsum = 0.0;
          for (std::size_t j = 0; j < k; ++j) qsum += q[i * k + j];
          for (std::size_t j = 0; j < k; ++j) {
            const std::size_t idx = i * k + j;
            if (!(y[idx] > kProbabilityFloor)) continue;
            const double d = -(q[idx] - static_cast<double>(p[idx]) * qsum) /
                             (temperature * static_cast<double>(y[idx]));
            dy[idx] += static_cast<T>(g * d);
          }
        }
      });
}

template <class T>
ad::Var<T> psa_loss(const ad::Tensor<T>& teacher_embeddings, const ad::Var<T>& student_embeddings,
                    PsaForm form) {
  require_matrix(student_embeddings.shape(), "psa_loss");
  if (teacher_embeddings.shape() != student_embeddings.shape()) {
    throw ShapeError("psa_loss: teacher " + ad::shape_string(teacher_embeddings.shape()) +
                     " vs student " + ad::shape_string(student_embeddings.shape()));
  }
  const std::size_t p = student_embeddings.shape()[0], d = student_embeddings.shape()[1];
  if (p == 0) return ad::Var<T>::constant(ad::Tensor<T>::scalar(T{0}));

  const ad::Tensor<T>& b = student_embeddings.value();
  std::vector<double> norm_a(p), norm_b(p), cosine(p);
  double mean_cos = 0.0;
  for (std::size_t r = 0; r < p; ++r) {
    double aa = 0.0, bb = 0.0, ab = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double x = teacher_embeddings[r * d + j], y = b[r * d + j];
      aa += x * x;
      bb += y * y;
      ab += x * y;
    }
    norm_a[r] = std::sqrt(aa);
    norm_b[r] = std::sqrt(bb);
    if (!(norm_a[r] > 0) || !(norm_b[r] > 0)) {
      throw NumericError("psa_loss: zero-norm embedding in row " + std::to_string(r));
    }
    cosine[r] = ab / (norm_a[r] * norm_b[r]);
    mean_cos += cosine[r];
  }
  mean_cos /= p;
  double value = 0.0;
  double sign = 0.0;  // d loss / d mean_cos
  switch (form) {
    case PsaForm::one_minus_cos: value = 1.0 - mean_cos; sign = -1.0; break;
    case PsaForm::neg_cos: value = -mean_cos; sign = -1.0; break;
    case PsaForm::raw_cos: value = mean_cos; sign = 1.0; break;
  }
  return ad::make_op<T>(
      ad::Tensor<T>::scalar(static_cast<T>(value)), {student_embeddings},
      [p, d, sign, teacher_embeddings, norm_a = std::move(norm_a), norm_b = std::move(norm_b),
       cosine = std::move(cosine)](ad::Node<T>& self) {
        const ad::Tensor<T>& b = self.parents[0]->value;
        ad::Tensor<T>& db = self.parents[0]->grad_buffer();
        const double g = sign * static_cast<double>(self.grad[0]) / p;
        for (std::size_t r = 0; r < p; ++r) {
          const double inv = 1.0 / (norm_a[r] * norm_b[r]);
          const double self_term = cosine[r] / (norm_b[r] * norm_b[r]);
          for (std::size_t j = 0; j < d; ++j) {
            const std::size_t idx = r * d + j;
            db[idx] += static_cast<T>(g * (teacher_embeddings[idx] * inv - self_term * b[idx]));
          }
        }
      });
}

template <class T>
LossBreakdown<T> total_loss(const ad::Var<T>& original, const ad::Var<T>& lwf,
                            const ad::Var<T>& psa, const LossWeights& weights) {
  weights.validate();
  LossBreakdown<T> out;
  out.original = original.value().item();
  out.lwf = lwf.defined() ? static_cast<double>(lwf.value().item()) : 0.0;
  out.psa = psa.defined() ? static_cast<double>(psa.value().item()) : 0.0;
  out.total = out.original + weights.alpha * out.lwf + weights.beta * out.psa;
  out.objective = original;
  if (weights.alpha > 0) {
    if (!lwf.defined()) throw ConfigError("alpha > 0 requires a distillation term");
    out.objective = ad::add(out.objective, ad::scale(lwf, weights.alpha));
  }
  if (weights.beta > 0) {
    if (!psa.defined()) throw ConfigError("beta > 0 requires an alignment term");
    out.objective = ad::add(out.objective, ad::scale(psa, weights.beta));
  }
  return out;
}

#define DFWF_INSTANTIATE_LOSSES(T)                                                            \
  template ad::Var<T> cross_entropy<T>(const ad::Var<T>&, std::span<const Label>);            \
  template ad::Tensor<T> temperature_scale<T>(const ad::Tensor<T>&, double);                  \
  template ad::Var<T> lwf_loss<T>(const ad::Tensor<T>&, const ad::Var<T>&, double);          \
  template ad::Var<T> psa_loss<T>(const ad::Tensor<T>&, const ad::Var<T>&, PsaForm);         \
  template LossBreakdown<T> total_loss<T>(const ad::Var<T>&, const ad::Var<T>&, const ad::Var<T>&, \
                                          const LossWeights&);

DFWF_INSTANTIATE_LOSSES(float)
DFWF_INSTANTIATE_LOSSES(double)

}  // namespace dfwf::loss
