#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hillfight/autodiff/checkpoint.hpp"
#include "hillfight/autodiff/grad_check.hpp"
#include "hillfight/autodiff/nn.hpp"
#include "hillfight/autodiff/ops.hpp"

using namespace hf::ad;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.storage()) v = u(rng);
  return t;
}

}  // namespace

TEST_CASE("tensor shapes") {
  Tensor m = Tensor::matrix(2, 3, 1.5);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.size() == 6);
  CHECK(Tensor::vector({1, 2, 3}).rows() == 1);
  CHECK_THROWS_AS(Tensor({0, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST_CASE("matmul forward matches hand computation") {
  Tape tape;
  Var a = tape.constant(Tensor::from_rows({{1, 2}, {3, 4}}));
  Var b = tape.constant(Tensor::from_rows({{5}, {6}}));
  Var c = matmul(a, b);
  CHECK(c.value().at(0, 0) == doctest::Approx(17));
  CHECK(c.value().at(1, 0) == doctest::Approx(39));
  CHECK_THROWS_AS(matmul(b, b), DimensionError);
}

TEST_CASE("backward through a small expression") {
  ParameterSet params;
  params.add("x", Tensor::vector({2.0, -3.0}));
  Tape tape;
  Var x = tape.param(params[0]);
  Var loss = sum(square(x));
  tape.backward(loss);
  CHECK(params[0].grad[0] == doctest::Approx(4.0));
  CHECK(params[0].grad[1] == doctest::Approx(-6.0));
}

TEST_CASE("non-finite values raise NumericError") {
  Tape tape;
  Var x = tape.constant(Tensor::vector({-1.0}));
  CHECK_THROWS_AS(log(x), NumericError);
}

TEST_CASE("grad_check on every op family") {
  std::mt19937_64 rng(7);
  ParameterSet params;
  params.add("a", random_tensor({3, 4}, rng));
  params.add("b", random_tensor({4, 2}, rng));
  params.add("c", random_tensor({3, 1}, rng, 0.5, 1.5));
  params.add("bias", random_tensor({1, 2}, rng));

  SUBCASE("linear and activations") {
    auto loss = [&](Tape& t) {
      Var a = t.param(params[0]), b = t.param(params[1]), c = t.param(params[2]), bias = t.param(params[3]);
      Var h = add_bias(matmul(a, b), bias);
      Var z = add(sigmoid(h), tanh(scale(h, 0.7)));
      z = add(z, elu(sub(h, add_scalar(h, 0.3))));
      z = mul_col(add_col(z, c), log(c));
      z = add(z, exp(scale(abs(h), 0.1)));
      return mean(square(z));
    };
    CHECK(grad_check(loss, params).max_relative_error <= 1e-6);
  }
  SUBCASE("softmax and reductions") {
    const std::vector<double> mask = {1, 0, 1, 1, 1, 1, 0, 1, 1, 1, 1, 0};
    auto loss = [&](Tape& t) {
      Var a = t.param(params[0]);
      Var p = masked_softmax(a, mask);
      Var lp = masked_log_softmax(a, mask);
      Var s = add(sum(mul(p, lp)), sum(sum_cols(softmax(a))));
      Var r = sum_rows(a);
      return add(s, sum(square(r)));
    };
    CHECK(grad_check(loss, params).max_relative_error <= 1e-6);
  }
  SUBCASE("indexing and reshaping") {
    const std::vector<std::size_t> idx = {1, 3, 0};
    auto loss = [&](Tape& t) {
      Var a = t.param(params[0]), c = t.param(params[2]);
      Var g = gather_cols(a, idx);
      Var parts[] = {slice_cols(a, 1, 3), c, g};
      Var cat = concat_cols(parts);
      Var rep = repeat_rows(cat, 2);
      Var back = mean_row_groups(square(rep), 2);
      Var rs = reshape(back, {1, back.value().size()});
      const std::size_t order[] = {2, 0, 2, 1};
      Var stacked[] = {a, gather_rows(a, order)};
      return add(add(sum(rs), sum(min_zero(a))), sum(square(concat_rows(stacked))));
    };
    CHECK(grad_check(loss, params).max_relative_error <= 1e-6);
  }
  SUBCASE("batched vector-matrix product") {
    ParameterSet p2;
    p2.add("q", random_tensor({2, 3}, rng));
    p2.add("w", random_tensor({2, 6}, rng));
    auto loss = [&](Tape& t) { return sum(square(batched_vecmat(t.param(p2[0]), t.param(p2[1]), 2))); };
    CHECK(grad_check(loss, p2).max_relative_error <= 1e-6);
  }
}

TEST_CASE("quantile huber loss") {
  Tape tape;
  SUBCASE("closed form scalar") {
    Var pred = tape.constant(Tensor::matrix(1, 1, 0.0));
    Var l = quantile_huber_loss(pred, Tensor::matrix(1, 1, 0.5), Tensor::matrix(1, 1, 1.0), std::vector<double>{1.0});
    CHECK(l.value().item() == doctest::Approx(0.25));
  }
  SUBCASE("zero at matched median") {
    Var pred = tape.constant(Tensor::matrix(1, 1, 2.0));
    Var l = quantile_huber_loss(pred, Tensor::matrix(1, 1, 0.5), Tensor::matrix(1, 1, 2.0), std::vector<double>{1.0});
    CHECK(l.value().item() == doctest::Approx(0.0));
  }
  SUBCASE("gradient") {
    std::mt19937_64 rng(3);
    ParameterSet params;
    params.add("p", random_tensor({2, 4}, rng, -2, 2));
    Tensor tau = Tensor::from_rows({{0.1, 0.3, 0.6, 0.9}, {0.2, 0.4, 0.5, 0.8}});
    Tensor target = random_tensor({2, 3}, rng, -2, 2);
    const std::vector<double> mask = {1.0, 1.0};
    auto loss = [&](Tape& t) { return quantile_huber_loss(t.param(params[0]), tau, target, mask); };
    CHECK(grad_check(loss, params).max_relative_error <= 1e-6);
  }
}

TEST_CASE("GRU and dense layers pass grad_check") {
  std::mt19937_64 rng(11);
  ParameterSet params;
  Dense in = Dense::create(params, "fc1", 5, 4, rng);
  GRUCell gru = GRUCell::create(params, "gru", 4, 4, rng);
  Dense out = Dense::create(params, "fc2", 4, 3, rng);
  const Tensor x0 = random_tensor({2, 5}, rng), x1 = random_tensor({2, 5}, rng);
  auto loss = [&](Tape& t) {
    Var h = t.constant(Tensor::matrix(2, 4, 0.0));
    for (const Tensor* x : {&x0, &x1}) {
      Var e = relu(in.forward(t, params, t.constant(*x)));
      h = gru.forward(t, params, e, h);
    }
    return mean(square(out.forward(t, params, h)));
  };
  CHECK(grad_check(loss, params).max_relative_error <= 1e-5);
}

TEST_CASE("RMSProp decreases a quadratic") {
  ParameterSet params;
  params.add("x", Tensor::vector({3.0, -2.0}));
  RMSProp opt(RMSProp::Options{.lr = 0.05});
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 200; ++i) {
    params.zero_grad();
    Tape t;
    Var l = sum(square(t.param(params[0])));
    if (i == 0) first = l.value().item();
    last = l.value().item();
    t.backward(l);
    opt.step(params);
  }
  CHECK(last < 0.01 * first);
}

TEST_CASE("gradient clipping by global norm") {
  ParameterSet params;
  params.add("x", Tensor::vector({0.0, 0.0}));
  params[0].grad = Tensor::vector({30.0, 40.0});
  CHECK(params.clip_grad_norm(10.0) == doctest::Approx(50.0));
  CHECK(params.grad_norm() == doctest::Approx(10.0));
}

TEST_CASE("checkpoint round trip is bitwise") {
  std::mt19937_64 rng(5);
  ParameterSet params;
  params.add("layer.w", random_tensor({3, 2}, rng));
  params.add("layer.b", random_tensor({2}, rng));
  std::stringstream ss;
  write_checkpoint(ss, params.export_values());
  const auto loaded = read_checkpoint(ss);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].name == "layer.w");
  CHECK(loaded[0].tensor == params[0].value);
  CHECK(loaded[1].tensor == params[1].value);

  std::stringstream bad("NOTACKPT");
  CHECK_THROWS_AS(read_checkpoint(bad), CheckpointError);

  ParameterSet other;
  other.add("layer.w", Tensor({2, 3}));
  other.add("layer.b", Tensor({2}));
  CHECK_THROWS_AS(other.load(loaded), DimensionError);
}
