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

#include <cstddef>
#include <span>

#include "dfwf/ad/graph.hpp"

// Differentiable ops. All are instantiated for float (training) and double
// (gradient checking). Reductions accumulate in double.
namespace dfwf::ad {

// y = x W + b for x [n x d], W [d x m], b [m].
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& weight);

struct Conv2dOptions {
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
};

// Cross-correlation of x [n, c_in, h, w] with kernel [c_out, c_in, kh, kw]
// plus a per-channel bias [c_out]; zero padding. Output
// [n, c_out, (h + 2p - kh) / s + 1, (w + 2p - kw) / s + 1].
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, Conv2dOptions opts = {});
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernel, Conv2dOptions opts = {});

// Max-feature-map over axis 1: [n, 2c, ...] -> [n, c, ...] with
// out[:, i] = max(x[:, i], x[:, i + c]); ties go to the first half.
template <class T>
Var<T> max_feature_map(const Var<T>& x);

// Window maxima over [n, c, h, w]; gradient routes to the first maximum.
template <class T>
Var<T> max_pool2d(const Var<T>& x, std::size_t kernel = 2, std::size_t stride = 2);

// [n, c, h, w] -> [n, c]: mean over both spatial axes.
template <class T>
Var<T> mean_spatial(const Var<T>& x);

// [n, c, h, w] -> [n, c * h]: mean over the last (time) axis.
template <class T>
Var<T> mean_time(const Var<T>& x);

template <class T>
Var<T> reshape(const Var<T>& x, Shape shape);

// Row-wise softmax of [n x k] with max subtraction.
template <class T>
Var<T> softmax(const Var<T>& logits);

// Rows of x [n x d] selected by `rows`, in order.
template <class T>
Var<T> gather_rows(const Var<T>& x, std::span<const std::size_t> rows);

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <class T>
Var<T> scale(const Var<T>& x, double factor);

// Sum of all entries, as a [1] tensor.
template <class T>
Var<T> sum(const Var<T>& x);

// Non-differentiable row-wise softmax / log-softmax helpers.
template <class T>
Tensor<T> softmax_rows(const Tensor<T>& logits);
template <class T>
Tensor<T> log_softmax_rows(const Tensor<T>& logits);

}  // namespace dfwf::ad
