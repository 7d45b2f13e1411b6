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

#include "dfwf/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace dfwf::ad {

namespace {

template <class T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapR = Eigen::Map<MatR<T>>;
template <class T>
using CMapR = Eigen::Map<const MatR<T>>;

void require_rank(const Shape& s, std::size_t rank, const char* op) {
  if (s.size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(s));
  }
}

template <class T>
Tensor<T>& grad_of(Node<T>& node, std::size_t parent) {
  return node.parents[parent]->grad_buffer();
}

template <class T>
bool wants_grad(const Node<T>& node, std::size_t parent) {
  return node.parents[parent]->requires_grad;
}

struct ConvGeometry {
  std::size_t n, c_in, h, w, c_out, kh, kw, oh, ow;
  Conv2dOptions o;
  std::size_t patch() const { return c_in * kh * kw; }
  std::size_t positions() const { return oh * ow; }
};

ConvGeometry conv_geometry(const Shape& xs, const Shape& ks, const Conv2dOptions& o) {
  require_rank(xs, 4, "conv2d input");
  require_rank(ks, 4, "conv2d kernel");
  if (xs[1] != ks[1]) {
    throw ShapeError("conv2d: input has " + std::to_string(xs[1]) + " channels, kernel expects " +
                     std::to_string(ks[1]));
  }
  if (o.stride_h == 0 || o.stride_w == 0) throw ShapeError("conv2d: stride must be positive");
  const std::size_t ph = xs[2] + 2 * o.pad_h;
  const std::size_t pw = xs[3] + 2 * o.pad_w;
  if (ks[2] > ph || ks[3] > pw) {
    throw ShapeError("conv2d: kernel " + shape_string(ks) + " larger than padded input " +
                     shape_string(xs));
  }
  return ConvGeometry{xs[0], xs[1], xs[2], xs[3], ks[0], ks[2], ks[3],
                      (ph - ks[2]) / o.stride_h + 1, (pw - ks[3]) / o.stride_w + 1, o};
}

// Unfolds one sample [c_in, h, w] into [c_in*kh*kw, oh*ow].
template <class T>
void im2col(const T* x, const ConvGeometry& g, T* cols) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.c_in; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        T* row = cols + ((c * g.kh + i) * g.kw + j) * positions;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.o.stride_h + i) - static_cast<long>(g.o.pad_h);
          T* out = row + oy * g.ow;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill(out, out + g.ow, T{0});
            continue;
          }
          const T* src = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.o.stride_w + j) - static_cast<long>(g.o.pad_w);
            out[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates [c_in*kh*kw, oh*ow] back into [c_in, h, w].
template <class T>
void col2im(const T* cols, const ConvGeometry& g, T* dx) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.c_in; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const T* row = cols + ((c * g.kh + i) * g.kw + j) * positions;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.o.stride_h + i) - static_cast<long>(g.o.pad_h);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          T* dst = dx + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const T* in = row + oy * g.ow;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.o.stride_w + j) - static_cast<long>(g.o.pad_w);
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += in[ox];
          }
        }
      }
    }
  }
}

template <class T>
Var<T> conv2d_impl(const Var<T>& x, const Var<T>& kernel, const Var<T>* bias, Conv2dOptions opts) {
  const ConvGeometry g = conv_geometry(x.shape(), kernel.shape(), opts);
  if (bias && bias->value().size() != g.c_out) {
    throw ShapeError("conv2d: bias has " + std::to_string(bias->value().size()) +
                     " entries, expected " + std::to_string(g.c_out));
  }
  const std::size_t patch = g.patch();
  const std::size_t positions = g.positions();
  const std::size_t in_stride = g.c_in * g.h * g.w;
  const std::size_t out_stride = g.c_out * positions;

  Tensor<T> out({g.n, g.c_out, g.oh, g.ow});
  std::vector<T> cols(patch * positions);
  CMapR<T> k(kernel.value().data(), g.c_out, patch);
  for (std::size_t s = 0; s < g.n; ++s) {
    im2col(x.value().data() + s * in_stride, g, cols.data());
    MapR<T> y(out.data() + s * out_stride, g.c_out, positions);
    y.noalias() = k * CMapR<T>(cols.data(), patch, positions);
    if (bias) {
      for (std::size_t c = 0; c < g.c_out; ++c) y.row(c).array() += bias->value()[c];
    }
  }

  auto backward = [g](Node<T>& self) {
    const std::size_t patch = g.patch();
    const std::size_t positions = g.positions();
    const std::size_t in_stride = g.c_in * g.h * g.w;
    const std::size_t out_stride = g.c_out * positions;
    const Tensor<T>& xv = self.parents[0]->value;
    const Tensor<T>& kv = self.parents[1]->value;
    const bool dx_on = wants_grad(self, 0);
    const bool dk_on = wants_grad(self, 1);
    const bool db_on = self.parents.size() > 2 && wants_grad(self, 2);
    CMapR<T> k(kv.data(), g.c_out, patch);
    std::vector<T> cols(patch * positions);
    std::vector<T> dcols(dx_on ? patch * positions : 0);
    T* dk_ptr = dk_on ? grad_of(self, 1).data() : nullptr;
    T* dx_ptr = dx_on ? grad_of(self, 0).data() : nullptr;
    for (std::size_t s = 0; s < g.n; ++s) {
      CMapR<T> gy(self.grad.data() + s * out_stride, g.c_out, positions);
      if (dk_on) {
        im2col(xv.data() + s * in_stride, g, cols.data());
        MapR<T> dk(dk_ptr, g.c_out, patch);
        dk.noalias() += gy * CMapR<T>(cols.data(), patch, positions).transpose();
      }
      if (dx_on) {
        MapR<T> dc(dcols.data(), patch, positions);
        dc.noalias() = k.transpose() * gy;
        col2im(dcols.data(), g, dx_ptr + s * in_stride);
      }
      if (db_on) {
        Tensor<T>& db = grad_of(self, 2);
        for (std::size_t c = 0; c < g.c_out; ++c) {
          double acc = 0.0;
          for (std::size_t p = 0; p < positions; ++p) acc += gy(c, p);
          db[c] += static_cast<T>(acc);
        }
      }
    }
  };
  if (bias) return make_op<T>(std::move(out), {x, kernel, *bias}, backward);
  return make_op<T>(std::move(out), {x, kernel}, backward);
}

template <class T>
Var<T> linear_impl(const Var<T>& x, const Var<T>& weight, const Var<T>* bias) {
  require_rank(x.shape(), 2, "linear input");
  require_rank(weight.shape(), 2, "linear weight");
  const std::size_t n = x.shape()[0], d = x.shape()[1], m = weight.shape()[1];
  if (weight.shape()[0] != d) {
    throw ShapeError("linear: input " + shape_string(x.shape()) + " incompatible with weight " +
                     shape_string(weight.shape()));
  }
  if (bias && bias->value().size() != m) {
    throw ShapeError("linear: bias " + shape_string(bias->shape()) + " does not match " +
                     std::to_string(m) + " outputs");
  }
  Tensor<T> out({n, m});
  MapR<T> y(out.data(), n, m);
  y.noalias() = CMapR<T>(x.value().data(), n, d) * CMapR<T>(weight.value().data(), d, m);
  if (bias) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) y(i, j) += bias->value()[j];
    }
  }
  auto backward = [n, d, m](Node<T>& self) {
    CMapR<T> gy(self.grad.data(), n, m);
    if (wants_grad(self, 0)) {
      MapR<T> dx(grad_of(self, 0).data(), n, d);
      dx.noalias() += gy * CMapR<T>(self.parents[1]->value.data(), d, m).transpose();
    }
    if (wants_grad(self, 1)) {
      MapR<T> dw(grad_of(self, 1).data(), d, m);
      dw.noalias() += CMapR<T>(self.parents[0]->value.data(), n, d).transpose() * gy;
    }
    if (self.parents.size() > 2 && wants_grad(self, 2)) {
      Tensor<T>& db = grad_of(self, 2);
      for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += gy(i, j);
        db[j] += static_cast<T>(acc);
      }
    }
  };
  if (bias) return make_op<T>(std::move(out), {x, weight, *bias}, backward);
  return make_op<T>(std::move(out), {x, weight}, backward);
}

}  // namespace

template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  return linear_impl(x, weight, &bias);
}

template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& weight) {
  return linear_impl<T>(x, weight, nullptr);
}

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, Conv2dOptions opts) {
  return conv2d_impl(x, kernel, &bias, opts);
}

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernel, Conv2dOptions opts) {
  return conv2d_impl<T>(x, kernel, nullptr, opts);
}

template <class T>
Var<T> max_feature_map(const Var<T>& x) {
  const Shape& s = x.shape();
  if (s.size() < 2) throw ShapeError("max_feature_map: expected rank >= 2, got " + shape_string(s));
  if (s[1] % 2 != 0) {
    throw ShapeError("max_feature_map: odd channel count " + std::to_string(s[1]));
  }
  const std::size_t n = s[0], half = s[1] / 2;
  std::size_t inner = 1;
  for (std::size_t i = 2; i < s.size(); ++i) inner *= s[i];
  Shape out_shape = s;
  out_shape[1] = half;
  Tensor<T> out(out_shape);
  std::vector<std::uint8_t> second(out.size());
  const T* in = x.value().data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t c = 0; c < half; ++c) {
      const T* lo = in + (b * 2 * half + c) * inner;
      const T* hi = lo + half * inner;
      const std::size_t base = (b * half + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        const bool take_hi = hi[i] > lo[i];
        second[base + i] = take_hi;
        out[base + i] = take_hi ? hi[i] : lo[i];
      }
    }
  }
  return make_op<T>(std::move(out), {x},
                    [n, half, inner, second = std::move(second)](Node<T>& self) {
                      T* dx = grad_of(self, 0).data();
                      for (std::size_t b = 0; b < n; ++b) {
                        for (std::size_t c = 0; c < half; ++c) {
                          const std::size_t base = (b * half + c) * inner;
                          T* lo = dx + (b * 2 * half + c) * inner;
                          T* hi = lo + half * inner;
                          for (std::size_t i = 0; i < inner; ++i) {
                            (second[base + i] ? hi : lo)[i] += self.grad[base + i];
                          }
                        }
                      }
                    });
}

template <class T>
Var<T> max_pool2d(const Var<T>& x, std::size_t kernel, std::size_t stride) {
  const Shape& s = x.shape();
  require_rank(s, 4, "max_pool2d");
  if (kernel == 0 || stride == 0) throw ShapeError("max_pool2d: kernel and stride must be positive");
  if (s[2] < kernel || s[3] < kernel) {
    throw ShapeError("max_pool2d: window " + std::to_string(kernel) + " larger than input " +
                     shape_string(s));
  }
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
  const std::size_t oh = (h - kernel) / stride + 1, ow = (w - kernel) / stride + 1;
  Tensor<T> out({s[0], s[1], oh, ow});
  std::vector<std::size_t> argmax(out.size());
  const T* in = x.value().data();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = p * h * w + (oy * stride) * w + ox * stride;
        for (std::size_t i = 0; i < kernel; ++i) {
          for (std::size_t j = 0; j < kernel; ++j) {
            const std::size_t idx = p * h * w + (oy * stride + i) * w + ox * stride + j;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (p * oh + oy) * ow + ox;
        argmax[o] = best;
        out[o] = in[best];
      }
    }
  }
  return make_op<T>(std::move(out), {x}, [argmax = std::move(argmax)](Node<T>& self) {
    Tensor<T>& dx = grad_of(self, 0);
    for (std::size_t o = 0; o < argmax.size(); ++o) dx[argmax[o]] += self.grad[o];
  });
}

template <class T>
Var<T> mean_spatial(const Var<T>& x) {
  const Shape& s = x.shape();
  require_rank(s, 4, "mean_spatial");
  const std::size_t planes = s[0] * s[1], area = s[2] * s[3];
  Tensor<T> out({s[0], s[1]});
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = x.value().data() + p * area;
    double acc = 0.0;
    for (std::size_t i = 0; i < area; ++i) acc += src[i];
    out[p] = static_cast<T>(acc / static_cast<double>(area));
  }
  return make_op<T>(std::move(out), {x}, [planes, area](Node<T>& self) {
    T* dx = grad_of(self, 0).data();
    for (std::size_t p = 0; p < planes; ++p) {
      const T g = static_cast<T>(self.grad[p] / static_cast<double>(area));
      for (std::size_t i = 0; i < area; ++i) dx[p * area + i] += g;
    }
  });
}

template <class T>
Var<T> mean_time(const Var<T>& x) {
  const Shape& s = x.shape();
  require_rank(s, 4, "mean_time");
  const std::size_t rows = s[0] * s[1] * s[2], w = s[3];
  Tensor<T> out({s[0], s[1] * s[2]});
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = x.value().data() + r * w;
    double acc = 0.0;
    for (std::size_t i = 0; i < w; ++i) acc += src[i];
    out[r] = static_cast<T>(acc / static_cast<double>(w));
  }
  return make_op<T>(std::move(out), {x}, [rows, w](Node<T>& self) {
    T* dx = grad_of(self, 0).data();
    for (std::size_t r = 0; r < rows; ++r) {
      const T g = static_cast<T>(self.grad[r] / static_cast<double>(w));
      for (std::size_t i = 0; i < w; ++i) dx[r * w + i] += g;
    }
  });
}

template <class T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> out = x.value().reshaped(std::move(shape));
  return make_op<T>(std::move(out), {x}, [](Node<T>& self) {
    Tensor<T>& dx = grad_of(self, 0);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
  });
}

template <class T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  require_rank(logits.shape(), 2, "softmax");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor<T> out(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* z = logits.data() + i * k;
    const T mx = *std::max_element(z, z + k);
    double total = 0.0;
    std::vector<double> e(k);
    for (std::size_t j = 0; j < k; ++j) total += (e[j] = std::exp(static_cast<double>(z[j] - mx)));
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = static_cast<T>(e[j] / total);
  }
  return out;
}

template <class T>
Tensor<T> log_softmax_rows(const Tensor<T>& logits) {
  require_rank(logits.shape(), 2, "log_softmax");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor<T> out(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* z = logits.data() + i * k;
    const double mx = *std::max_element(z, z + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += std::exp(z[j] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = static_cast<T>(z[j] - lse);
  }
  return out;
}

template <class T>
Var<T> softmax(const Var<T>& logits) {
  Tensor<T> out = softmax_rows(logits.value());
  const std::size_t n = out.dim(0), k = out.dim(1);
  return make_op<T>(std::move(out), {logits}, [n, k](Node<T>& self) {
    Tensor<T>& dz = grad_of(self, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const T* y = self.value.data() + i * k;
      const T* g = self.grad.data() + i * k;
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += static_cast<double>(g[j]) * y[j];
      for (std::size_t j = 0; j < k; ++j) dz[i * k + j] += static_cast<T>(y[j] * (g[j] - dot));
    }
  });
}

template <class T>
Var<T> gather_rows(const Var<T>& x, std::span<const std::size_t> rows) {
  require_rank(x.shape(), 2, "gather_rows");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  Tensor<T> out({rows.size(), d});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n) throw ShapeError("gather_rows: row index out of range");
    std::copy_n(x.value().data() + rows[r] * d, d, out.data() + r * d);
  }
  return make_op<T>(std::move(out), {x},
                    [d, idx = std::vector<std::size_t>(rows.begin(), rows.end())](Node<T>& self) {
                      T* dx = grad_of(self, 0).data();
                      for (std::size_t r = 0; r < idx.size(); ++r) {
                        for (std::size_t j = 0; j < d; ++j) dx[idx[r] * d + j] += self.grad[r * d + j];
                      }
                    });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
  }
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_op<T>(std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!wants_grad(self, p)) continue;
      Tensor<T>& d = grad_of(self, p);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
    }
  });
}

template <class T>
Var<T> scale(const Var<T>& x, double factor) {
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v = static_cast<T>(v * factor);
  return make_op<T>(std::move(out), {x}, [factor](Node<T>& self) {
    Tensor<T>& d = grad_of(self, 0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += static_cast<T>(self.grad[i] * factor);
  });
}

template <class T>
Var<T> sum(const Var<T>& x) {
  double acc = 0.0;
  for (T v : x.value().values()) acc += v;
  return make_op<T>(Tensor<T>::scalar(static_cast<T>(acc)), {x}, [](Node<T>& self) {
    Tensor<T>& d = grad_of(self, 0);
    for (auto& v : d.values()) v += self.grad[0];
  });
}

#define DFWF_INSTANTIATE_OPS(T)                                                          \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);                \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&);                               \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, Conv2dOptions); \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, Conv2dOptions);                \
  template Var<T> max_feature_map<T>(const Var<T>&);                                     \
  template Var<T> max_pool2d<T>(const Var<T>&, std::size_t, std::size_t);                \
  template Var<T> mean_spatial<T>(const Var<T>&);                                        \
  template Var<T> mean_time<T>(const Var<T>&);                                           \
  template Var<T> reshape<T>(const Var<T>&, Shape);                                      \
  template Var<T> softmax<T>(const Var<T>&);                                             \
  template Var<T> gather_rows<T>(const Var<T>&, std::span<const std::size_t>);           \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                  \
  template Var<T> scale<T>(const Var<T>&, double);                                       \
  template Var<T> sum<T>(const Var<T>&);                                                 \
  template Tensor<T> softmax_rows<T>(const Tensor<T>&);                                  \
  template Tensor<T> log_softmax_rows<T>(const Tensor<T>&);

DFWF_INSTANTIATE_OPS(float)
DFWF_INSTANTIATE_OPS(double)

}  // namespace dfwf::ad
