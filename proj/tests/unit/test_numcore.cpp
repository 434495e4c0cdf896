// Copyright 2026 The depwsc Authors
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

#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"

#include "depwsc/error.hpp"
#include "depwsc/numcore/gradcheck.hpp"
#include "depwsc/numcore/ops.hpp"
#include "depwsc/numcore/optim.hpp"

using namespace depwsc;
using namespace depwsc::num;

namespace {

Tensor<double> random_tensor(Shape dims, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(dims));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

Var<double> param(Shape dims, Rng& rng, double scale = 1.0) {
  return Var<double>::parameter(random_tensor(std::move(dims), rng, scale));
}

void check_grad(const std::function<Var<double>()>& fn, const std::vector<Var<double>>& inputs) {
  const auto r = gradcheck(fn, inputs);
  INFO("max rel error " << r.max_rel_error << " at input " << r.worst_input << "[" << r.worst_index
                        << "] analytic " << r.worst_analytic << " numeric " << r.worst_numeric);
  CHECK(r.passed);
  CHECK(r.coordinates > 0);
}

}  // namespace

TEST_CASE("tensor construction validates dims") {
  CHECK_THROWS_AS(Tensor<float>(Shape{2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor<float>(Shape{2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
  const auto m = Tensor<float>::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 6.0f);
  CHECK(shape_str(m.dims()) == "[2x3]");
}

TEST_CASE("matmul matches a hand product and names both shapes on mismatch") {
  const auto a = Var<double>::constant(Tensor<double>::matrix({{1, 2}, {3, 4}}));
  const auto b = Var<double>::constant(Tensor<double>::matrix({{5, 6, 7}, {8, 9, 10}}));
  const auto c = matmul(a, b).value();
  CHECK(c == Tensor<double>::matrix({{21, 24, 27}, {47, 54, 61}}));
  try {
    matmul(b, a);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("[2x3] x [2x2]") != std::string::npos);
  }
}

TEST_CASE("softmax rows are distributions and a fully masked row is rejected") {
  Rng rng(3);
  const auto p = softmax_rows(Var<double>::constant(random_tensor({4, 5}, rng, 3.0))).value();
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(p(i, j) > 0.0);
      s += p(i, j);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  MaskMatrix mask = MaskMatrix::ones(3);
  mask.set_row(1, false);
  const auto logits = Var<double>::constant(Tensor<double>({3, 3}));
  CHECK_THROWS_AS(masked_softmax(logits, mask, MaskMode::additive), ContractError);
}

TEST_CASE("additive masking sends masked positions to zero probability") {
  const auto logits = Var<float>::constant(Tensor<float>::matrix({{5, 1, 2}, {0, 0, 0}, {9, -3, 4}}));
  const auto mask = MaskMatrix::from_rows({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}});
  const auto p = masked_softmax(logits, mask, MaskMode::additive).value();
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(p(i, i) < 1e-7f);
    CHECK(p(i, (i + 1) % 3) + p(i, (i + 2) % 3) == doctest::Approx(1.0f));
  }
}

TEST_CASE("multiplicative masking multiplies logits literally") {
  const auto logits = Var<double>::constant(Tensor<double>::matrix({{2, 4}, {1, 3}}));
  const auto mask = MaskMatrix::from_rows({{1, 0}, {0, 1}});
  const auto p = masked_softmax(logits, mask, MaskMode::multiplicative).value();
  // Row 0 becomes softmax(2, 0).
  CHECK(p(0, 0) == doctest::Approx(std::exp(2.0) / (std::exp(2.0) + 1.0)));
  CHECK(p(1, 1) == doctest::Approx(std::exp(3.0) / (std::exp(3.0) + 1.0)));
}

TEST_CASE("all-ones masks leave softmax bit-identical in both modes") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto logits = Var<float>::constant(random_tensor({6, 6}, rng, 4.0).cast<float>());
    const auto plain = softmax_rows(logits).value();
    CHECK(masked_softmax(logits, MaskMatrix::ones(6), MaskMode::additive).value() == plain);
    CHECK(masked_softmax(logits, MaskMatrix::ones(6), MaskMode::multiplicative).value() == plain);
  }
}

TEST_CASE("layer norm output has zero mean and unit variance per row") {
  Rng rng(5);
  const auto x = Var<double>::constant(random_tensor({3, 8}, rng, 2.0));
  const auto g = Var<double>::constant(Tensor<double>::full({8}, 1.0));
  const auto b = Var<double>::constant(Tensor<double>({8}));
  const auto y = layer_norm(x, g, b, 1e-12).value();
  for (std::size_t i = 0; i < 3; ++i) {
    double mean = 0, var = 0;
    for (std::size_t j = 0; j < 8; ++j) mean += y(i, j) / 8;
    for (std::size_t j = 0; j < 8; ++j) var += (y(i, j) - mean) * (y(i, j) - mean) / 8;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("gelu uses the exact erf form") {
  const auto y = gelu(Var<double>::constant(Tensor<double>::vector({0.0, 1.0, -1.0, 3.0}))).value();
  CHECK(y[0] == 0.0);
  CHECK(y[1] == doctest::Approx(0.8413447460685429).epsilon(1e-14));
  CHECK(y[2] == doctest::Approx(-0.15865525393145707).epsilon(1e-13));
  CHECK(y[3] == doctest::Approx(2.99595030590511).epsilon(1e-14));
}

TEST_CASE("cross entropy of uniform logits is ln C") {
  const auto loss = cross_entropy(Var<double>::constant(Tensor<double>({1, 2})), 0);
  CHECK(loss.value()[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(cross_entropy(Var<double>::constant(Tensor<double>({1, 2})), 2), ContractError);
}

TEST_CASE("dropout is inverted, seeded, and the identity at rate zero") {
  const auto x = Var<float>::constant(Tensor<float>::full({20, 20}, 1.0f));
  Rng a(9), b(9);
  const auto ya = dropout(x, 0.25, a).value();
  const auto yb = dropout(x, 0.25, b).value();
  CHECK(ya == yb);
  std::size_t kept = 0;
  for (std::size_t i = 0; i < ya.size(); ++i) {
    CHECK((ya[i] == 0.0f || ya[i] == doctest::Approx(1.0f / 0.75f)));
    kept += ya[i] != 0.0f;
  }
  CHECK(kept > 250);
  CHECK(kept < 350);
  CHECK(dropout(x, 0.0, a).same_node(x));
}

TEST_CASE("backward requires a scalar loss") {
  Rng rng(1);
  const auto w = param({2, 2}, rng);
  CHECK_THROWS_AS(backward(matmul(w, w)), ContractError);
}

TEST_CASE("shared parameters accumulate gradient from every use") {
  const auto w = Var<double>::parameter(Tensor<double>::vector({3.0}));
  const auto loss = sum(add(mul(w, w), scale(w, 2.0)));  // w^2 + 2w
  const auto grads = gradients(loss, {w});
  CHECK(grads[0][0] == doctest::Approx(8.0));  // 2w + 2
}

TEST_CASE("gradcheck passes for every differentiable op") {
  Rng rng(2024);
  SUBCASE("matmul, transpose, add, sub, mul") {
    const auto a = param({3, 4}, rng), b = param({4, 2}, rng), c = param({3, 2}, rng);
    check_grad([&] { return sum(mul(sub(matmul(a, b), c), add(c, matmul(a, b)))); }, {a, b, c});
    check_grad([&] { return sum(matmul(transpose(a), c)); }, {a, c});
  }
  SUBCASE("affine, tanh, gelu, mean") {
    const auto x = param({3, 4}, rng), w = param({4, 5}, rng), b = param({5}, rng);
    check_grad([&] { return mean(gelu(tanh(affine(x, w, b)))); }, {x, w, b});
  }
  SUBCASE("softmax and masked softmax in both modes") {
    const auto x = param({4, 4}, rng);
    const auto probe = Var<double>::constant(random_tensor({4, 4}, rng));
    const auto mask = MaskMatrix::from_rows({{1, 1, 0, 0}, {1, 1, 1, 0}, {0, 1, 1, 1}, {0, 0, 1, 1}});
    check_grad([&] { return sum(mul(softmax_rows(x), probe)); }, {x});
    check_grad([&] { return sum(mul(masked_softmax(x, mask, MaskMode::additive), probe)); }, {x});
    check_grad([&] { return sum(mul(masked_softmax(x, mask, MaskMode::multiplicative), probe)); }, {x});
  }
  SUBCASE("layer norm") {
    const auto x = param({3, 6}, rng), g = param({6}, rng), b = param({6}, rng);
    const auto probe = Var<double>::constant(random_tensor({3, 6}, rng));
    check_grad([&] { return sum(mul(layer_norm(x, g, b, 1e-12), probe)); }, {x, g, b});
  }
  SUBCASE("embedding, slicing, concatenation, rows") {
    const auto table = param({5, 4}, rng);
    const auto probe = Var<double>::constant(random_tensor({3, 4}, rng));
    check_grad(
        [&] {
          const auto e = embedding(table, {4, 0, 4});
          const auto joined = concat_cols(std::vector<Var<double>>{slice_cols(e, 2, 2), slice_cols(e, 0, 2)});
          return add(sum(mul(joined, probe)), sum(scale(row(joined, 1), 3.0)));
        },
        {table});
    check_grad([&] { return sum(mul(row(table, 2), row(table, 3))); }, {table});
  }
  SUBCASE("cross entropy") {
    const auto logits = param({1, 3}, rng);
    check_grad([&] { return cross_entropy(logits, 1); }, {logits});
  }
}

TEST_CASE("linear warmup then linear decay") {
  CHECK(linear_warmup_lr(0, 1.0, 0.5, 10) == 0.0);
  CHECK(linear_warmup_lr(2, 1.0, 0.5, 10) == doctest::Approx(0.4));
  CHECK(linear_warmup_lr(5, 1.0, 0.5, 10) == doctest::Approx(1.0));
  CHECK(linear_warmup_lr(8, 1.0, 0.5, 10) == doctest::Approx(0.4));
  CHECK(linear_warmup_lr(10, 1.0, 0.5, 10) == 0.0);
  CHECK(linear_warmup_lr(3, 2.0, 0.0, 4) == doctest::Approx(0.5));
  CHECK(linear_warmup_lr(3, 2.0, 1.0, 4) == doctest::Approx(1.5));
  CHECK_THROWS_AS(linear_warmup_lr(11, 1.0, 0.5, 10), ContractError);
  CHECK_THROWS_AS(linear_warmup_lr(0, 1.0, 1.5, 10), ContractError);
  CHECK_THROWS_AS(linear_warmup_lr(0, 1.0, 0.5, 0), ContractError);
}

TEST_CASE("adamw first step applies decoupled decay and a unit-size Adam step") {
  const auto w = Var<float>::parameter(Tensor<float>::vector({1.0f, -2.0f}));
  AdamWOptions opt;
  opt.base_lr = 0.1;
  opt.weight_decay = 0.01;
  opt.constant_lr = true;
  std::vector<NamedParam> params = {{"w", w}};
  auto state = make_optim_state(params, opt);
  const double lr = adamw_step(params, {Tensor<float>::vector({0.5f, -0.25f})}, state);
  CHECK(lr == doctest::Approx(0.1));
  // w <- w - lr*wd*w - lr * mhat / (sqrt(vhat) + eps), with mhat/sqrt(vhat) = sign(g) on step 1.
  CHECK(w.value()[0] == doctest::Approx(1.0 - 0.001 - 0.1).epsilon(1e-6));
  CHECK(w.value()[1] == doctest::Approx(-2.0 + 0.002 + 0.1).epsilon(1e-6));
  CHECK(state.step == 1);
  CHECK_THROWS_AS(adamw_step(params, {Tensor<float>::vector({1.0f})}, state), ShapeError);
}

TEST_CASE("adamw at zero learning rate leaves parameters untouched") {
  const auto w = Var<float>::parameter(Tensor<float>::vector({0.3f, 0.7f}));
  AdamWOptions opt;
  opt.base_lr = 0.0;
  opt.total_steps = 5;
  std::vector<NamedParam> params = {{"w", w}};
  auto state = make_optim_state(params, opt);
  for (int i = 0; i < 5; ++i) adamw_step(params, {Tensor<float>::vector({1.0f, -1.0f})}, state);
  CHECK(w.value() == Tensor<float>::vector({0.3f, 0.7f}));
}

TEST_CASE("rng is deterministic and its helpers stay in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
    CHECK(std::abs(r.truncated_normal(0.02)) <= 0.04);
  }
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  r.shuffle(v.begin(), v.end());
  CHECK(std::set<int>(v.begin(), v.end()).size() == 50);
  CHECK(derive_seed(1, "init") != derive_seed(1, "dropout"));
  CHECK(derive_seed(1, "init") != derive_seed(2, "init"));
  CHECK(derive_seed(1, "init") == derive_seed(1, "init"));
}

TEST_CASE("normal draws have roughly unit variance") {
  Rng r(99);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.05);
  CHECK(std::abs(s2 / n - 1.0) < 0.05);
}

TEST_CASE("mask matrix helpers") {
  auto m = MaskMatrix::identity(3);
  CHECK(m.symmetric());
  CHECK(m.count() == 3);
  m.set(0, 2);
  CHECK_FALSE(m.symmetric());
  CHECK(m.to_string() == "1 0 1\n0 1 0\n0 0 1\n");
  CHECK(MaskMatrix::ones(4).all_ones());
  CHECK(parse_mask_mode("multiplicative") == MaskMode::multiplicative);
  CHECK_THROWS_AS(parse_mask_mode("soft"), ContractError);
}
