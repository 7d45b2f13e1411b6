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

#include <cmath>

#include "gradcheck.hpp"

#include "dfwf/error.hpp"
#include "dfwf/loss/losses.hpp"

using namespace dfwf;
using namespace dfwf::testing;

namespace {

const std::vector<Label> kMixed{Label::genuine, Label::spoof, Label::spoof, Label::genuine};

TD row(std::vector<double> v) {
  const std::size_t n = v.size();
  return TD({1, n}, std::move(v));
}

}  // namespace

TEST_CASE("temperature scaling worked example") {
  const TD y = loss::temperature_scale(row({0.9, 0.1}), 2.0);
  CHECK(y[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(0.25).epsilon(1e-12));
  const TD same = loss::temperature_scale(row({0.3, 0.7}), 1.0);
  CHECK(same[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(loss::temperature_scale(row({0.5, 0.5}), 0.0), ConfigError);
}

TEST_CASE("cross-entropy of uniform logits is ln 2") {
  const VD z = VD::constant(TD({4, 2}));
  CHECK(loss::cross_entropy<double>(z, kMixed).value().item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(loss::cross_entropy<double>(z, std::vector<Label>{Label::spoof}), ShapeError);
}

TEST_CASE("LwF with identical uniform teacher and student is ln 2") {
  const TD q({3, 2}, 0.5);
  CHECK(loss::lwf_loss<double>(q, VD::constant(q), 2.0).value().item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("LwF with teacher equal to student is the scaled teacher entropy") {
  std::mt19937_64 rng(4);
  const TD probs = ad::softmax_rows(random_tensor({6, 2}, rng, -3, 3));
  const TD scaled = loss::temperature_scale(probs, 2.0);
  double entropy = 0.0;
  for (std::size_t i = 0; i < scaled.size(); ++i) entropy -= scaled[i] * std::log(scaled[i]);
  entropy /= 6.0;
  CHECK(loss::lwf_loss<double>(probs, VD::constant(probs), 2.0).value().item() ==
        doctest::Approx(entropy).epsilon(1e-12));
}

TEST_CASE("PSA forms on aligned, orthogonal and opposite embeddings") {
  const TD a({1, 3}, std::vector<double>{1, 2, 3});
  const TD ortho({1, 3}, std::vector<double>{3, 0, -1});
  const TD opp({1, 3}, std::vector<double>{-2, -4, -6});
  CHECK(loss::psa_loss<double>(a, VD::constant(a)).value().item() == doctest::Approx(0.0));
  CHECK(loss::psa_loss<double>(a, VD::constant(ortho)).value().item() == doctest::Approx(1.0));
  CHECK(loss::psa_loss<double>(a, VD::constant(opp)).value().item() == doctest::Approx(2.0));
  CHECK(loss::psa_loss<double>(a, VD::constant(a), loss::PsaForm::neg_cos).value().item() == doctest::Approx(-1.0));
  CHECK(loss::psa_loss<double>(a, VD::constant(a), loss::PsaForm::raw_cos).value().item() == doctest::Approx(1.0));
  CHECK(loss::psa_loss<double>(TD({0, 3}), VD::constant(TD({0, 3}))).value().item() == 0.0);
  CHECK_THROWS_AS(loss::psa_loss<double>(a, VD::constant(TD({1, 3}))), NumericError);
  CHECK(loss::parse_psa_form("neg_cos") == loss::PsaForm::neg_cos);
  CHECK_THROWS_AS(loss::parse_psa_form("cos"), ConfigError);
}

TEST_CASE("total loss weighting and zero-weight exclusion") {
  const VD ce = VD::leaf(TD::scalar(0.5));
  const VD lwf = VD::leaf(TD::scalar(2.0));
  const VD psa = VD::leaf(TD::scalar(4.0));
  auto br = loss::total_loss<double>(ce, lwf, psa, {0.5, 0.25});
  CHECK(br.total == doctest::Approx(0.5 + 1.0 + 1.0));
  CHECK(br.objective.value().item() == doctest::Approx(br.total));
  ad::backward(br.objective);
  CHECK(lwf.grad()[0] == doctest::Approx(0.5));
  CHECK(psa.grad()[0] == doctest::Approx(0.25));

  const VD lwf2 = VD::leaf(TD::scalar(2.0));
  br = loss::total_loss<double>(ce, lwf2, VD(), {0.0, 0.0});
  CHECK(br.objective.node_ptr() == ce.node_ptr());
  CHECK(br.lwf == 2.0);
  CHECK_THROWS_AS(loss::total_loss<double>(ce, VD(), VD(), {0.0, 1.0}), ConfigError);
  CHECK_THROWS_AS((loss::LossWeights{-1.0, 0.0}.validate()), ConfigError);
}

TEST_CASE("finite differences: the three losses") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    const double t = 0.5 + 0.5 * rep;
    auto r = gradcheck([](const std::vector<VD>& in) { return loss::cross_entropy<double>(in[0], kMixed); },
                       {random_tensor({4, 2}, rng, -2, 2)});
    CHECK(r.max_rel_error < 1e-4);

    const TD teacher = ad::softmax_rows(random_tensor({4, 2}, rng, -2, 2));
    r = gradcheck([&](const std::vector<VD>& in) { return loss::lwf_loss<double>(teacher, ad::softmax(in[0]), t); },
                  {random_tensor({4, 2}, rng, -2, 2)});
    CHECK(r.max_rel_error < 1e-4);

    const TD te = random_tensor({3, 5}, rng);
    for (auto form : {loss::PsaForm::one_minus_cos, loss::PsaForm::neg_cos, loss::PsaForm::raw_cos}) {
      r = gradcheck([&](const std::vector<VD>& in) { return loss::psa_loss<double>(te, in[0], form); },
                    {random_tensor({3, 5}, rng)});
      CHECK(r.max_rel_error < 1e-4);
    }
  }
}
