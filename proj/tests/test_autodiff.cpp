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

#include <doctest.h>

#include "gradcheck.hpp"

#include "dfwf/error.hpp"

using namespace dfwf;
using namespace dfwf::testing;
using ad::Shape;

namespace {

constexpr double kTol = 1e-4;

// Direct convolution, no unfolding.
TD naive_conv(const TD& x, const TD& k, const TD& b, std::size_t s, std::size_t p) {
  const std::size_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t co = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t oh = (h + 2 * p - kh) / s + 1, ow = (w + 2 * p - kw) / s + 1;
  TD y({n, co, oh, ow});
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = b[o];
          for (std::size_t c = 0; c < ci; ++c)
            for (std::size_t u = 0; u < kh; ++u)
              for (std::size_t v = 0; v < kw; ++v) {
                const long r = static_cast<long>(i * s + u) - static_cast<long>(p);
                const long q = static_cast<long>(j * s + v) - static_cast<long>(p);
                if (r < 0 || q < 0 || r >= static_cast<long>(h) || q >= static_cast<long>(w)) continue;
                acc += x.at({a, c, static_cast<std::size_t>(r), static_cast<std::size_t>(q)}) * k.at({o, c, u, v});
              }
          y.at({a, o, i, j}) = acc;
        }
  return y;
}

}  // namespace

TEST_CASE("linear matches a loop oracle") {
  std::mt19937_64 rng(1);
  const TD x = random_tensor({3, 4}, rng), w = random_tensor({4, 5}, rng), b = random_tensor({5}, rng);
  const TD y = ad::linear(VD::constant(x), VD::constant(w), VD::constant(b)).value();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double acc = b[j];
      for (std::size_t k = 0; k < 4; ++k) acc += x.at({i, k}) * w.at({k, j});
      CHECK(y.at({i, j}) == doctest::Approx(acc).epsilon(1e-12));
    }
  CHECK_THROWS_AS(ad::linear(VD::constant(x), VD::constant(random_tensor({3, 5}, rng))), ShapeError);
}

TEST_CASE("conv2d matches direct convolution") {
  std::mt19937_64 rng(2);
  for (std::size_t s : {1u, 2u}) {
    for (std::size_t p : {0u, 1u, 2u}) {
      const TD x = random_tensor({2, 3, 7, 6}, rng), k = random_tensor({4, 3, 3, 3}, rng), b = random_tensor({4}, rng);
      const TD y = ad::conv2d(VD::constant(x), VD::constant(k), VD::constant(b), {s, s, p, p}).value();
      const TD ref = naive_conv(x, k, b, s, p);
      REQUIRE(y.shape() == ref.shape());
      for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("max_feature_map, max_pool2d and means") {
  TD x({1, 4, 2, 2}, std::vector<double>{1, 5, 3, 0, /**/ 2, 2, 2, 2, /**/ 0, 7, 3, 1, /**/ 9, 1, 1, 1});
  const TD m = ad::max_feature_map(VD::constant(x)).value();
  CHECK(m.shape() == Shape{1, 2, 2, 2});
  CHECK(m.vector() == std::vector<double>{1, 7, 3, 1, 9, 2, 2, 2});

  TD img({1, 1, 4, 4}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16});
  const TD pooled = ad::max_pool2d(VD::constant(img), 2, 2).value();
  CHECK(pooled.vector() == std::vector<double>{6, 8, 14, 16});
  CHECK(ad::mean_spatial(VD::constant(img)).value().vector() == std::vector<double>{8.5});
  CHECK(ad::mean_time(VD::constant(img)).value().vector() == std::vector<double>{2.5, 6.5, 10.5, 14.5});
}

TEST_CASE("softmax is shift invariant and rows sum to one") {
  std::mt19937_64 rng(3);
  const TD z = random_tensor({5, 3}, rng, -5, 5);
  TD shifted = z;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) shifted.at({i, j}) += 100.0 * static_cast<double>(i);
  const TD a = ad::softmax(VD::constant(z)).value(), b = ad::softmax(VD::constant(shifted)).value();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < 5; ++i) CHECK(a.at({i, 0}) + a.at({i, 1}) + a.at({i, 2}) == doctest::Approx(1.0));
  const TD ls = ad::log_softmax_rows(z);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::exp(ls[i]) == doctest::Approx(a[i]).epsilon(1e-12));
}

TEST_CASE("gather_rows picks rows in order") {
  TD x({3, 2}, std::vector<double>{1, 2, 3, 4, 5, 6});
  const std::vector<std::size_t> idx{2, 0, 2};
  CHECK(ad::gather_rows(VD::constant(x), std::span<const std::size_t>(idx)).value().vector() ==
        std::vector<double>{5, 6, 1, 2, 5, 6});
}

TEST_CASE("backward accumulates into leaves and rejects non-scalars") {
  VD x = VD::leaf(TD({2}, std::vector<double>{1.0, 2.0}));
  VD y = ad::sum(ad::scale(x, 3.0));
  ad::backward(y);
  CHECK(x.grad().vector() == std::vector<double>{3.0, 3.0});
  ad::backward(y);
  CHECK(x.grad().vector() == std::vector<double>{6.0, 6.0});
  CHECK_THROWS_AS(ad::backward(ad::scale(x, 2.0)), ShapeError);
}

TEST_CASE("no graph is recorded under NoGradGuard or for constants") {
  VD x = VD::leaf(TD({2}, std::vector<double>{1.0, 2.0}));
  {
    ad::NoGradGuard guard;
    CHECK_FALSE(ad::sum(x).requires_grad());
  }
  CHECK(ad::sum(x).requires_grad());
  CHECK_FALSE(ad::sum(VD::constant(x.value())).requires_grad());
}

TEST_CASE("finite differences: linear and conv2d") {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 5; ++rep) {
    const TD w = random_tensor({3 * 5}, rng);
    auto r = gradcheck(
        [&](const std::vector<VD>& in) { return project(ad::linear(in[0], in[1], in[2]), w); },
        {random_tensor({3, 4}, rng), random_tensor({4, 5}, rng), random_tensor({5}, rng)});
    CHECK(r.max_rel_error < kTol);

    const std::size_t s = 1 + rep % 2, p = rep % 3;
    const TD x = random_tensor({2, 2, 6, 5}, rng), k = random_tensor({3, 2, 3, 3}, rng), b = random_tensor({3}, rng);
    const TD probe = ad::conv2d(VD::constant(x), VD::constant(k), VD::constant(b), {s, s, p, p}).value();
    const TD wc = random_tensor({probe.size()}, rng);
    r = gradcheck([&](const std::vector<VD>& in) { return project(ad::conv2d(in[0], in[1], in[2], {s, s, p, p}), wc); },
                  {x, k, b});
    CHECK(r.max_rel_error < kTol);
  }
}

TEST_CASE("finite differences: max ops, means and softmax") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const TD x = distinct_tensor({2, 4, 4, 6}, rng);
    auto check = [&](auto op, std::size_t out_size) {
      const TD w = random_tensor({out_size}, rng);
      const auto r = gradcheck([&](const std::vector<VD>& in) { return project(op(in[0]), w); }, {x});
      CHECK(r.max_rel_error < kTol);
    };
    check([](const VD& v) { return ad::max_feature_map(v); }, 2 * 2 * 4 * 6);
    check([](const VD& v) { return ad::max_pool2d(v, 2, 2); }, 2 * 4 * 2 * 3);
    check([](const VD& v) { return ad::mean_spatial(v); }, 2 * 4);
    check([](const VD& v) { return ad::mean_time(v); }, 2 * 4 * 4);
    const TD z = random_tensor({4, 3}, rng, -3, 3);
    const TD w = random_tensor({12}, rng);
    const auto r = gradcheck([&](const std::vector<VD>& in) { return project(ad::softmax(in[0]), w); }, {z});
    CHECK(r.max_rel_error < kTol);
  }
}
