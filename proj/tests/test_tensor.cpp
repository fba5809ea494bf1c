#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>

#include "dgn/gradcheck.hpp"
#include "dgn/ops.hpp"
#include "dgn/reference.hpp"
#include "dgn/rng.hpp"
#include "dgn/tensor.hpp"
#include "doctest.h"

using namespace dgn;

TEST_CASE("shape utilities") {
  CHECK(numel({2, 3, 4}) == 24);
  CHECK(numel({}) == 1);
  CHECK(shape_str({2, 3}) == "[2,3]");
}

TEST_CASE("store_round matches float casting") {
  const double v = 0.1;
  CHECK(store_round(v, Precision::kF32) == static_cast<double>(static_cast<float>(v)));
  CHECK(store_round(v, Precision::kF64) == v);
}

TEST_CASE("precision scope nests and restores") {
  CHECK(current_precision() == Precision::kF32);
  {
    PrecisionScope f64(Precision::kF64);
    CHECK(current_precision() == Precision::kF64);
    {
      PrecisionScope f32(Precision::kF32);
      CHECK(current_precision() == Precision::kF32);
    }
    CHECK(current_precision() == Precision::kF64);
  }
  CHECK(current_precision() == Precision::kF32);
}

TEST_CASE("gelu matches the tanh formula, gelu(1) ~= 0.841192") {
  CHECK(ops::gelu_scalar(0.0) == 0.0);
  CHECK(ops::gelu_scalar(1.0) == doctest::Approx(0.841192).epsilon(1e-6));
  CHECK(ops::gelu_scalar(-1.0) == doctest::Approx(0.841192 - 1.0).epsilon(1e-5));
  // Gate interpretation: large inputs pass, large negatives are suppressed.
  CHECK(ops::gelu_scalar(10.0) == doctest::Approx(10.0));
  CHECK(std::abs(ops::gelu_scalar(-10.0)) < 1e-6);
}

TEST_CASE("backward accumulates through a small graph") {
  PrecisionScope f64(Precision::kF64);
  Tape tape;
  Tape::Scope scope(tape);
  Tensor x = Tensor::from({2}, {2.0, 3.0}, true);
  Tensor y = ops::mul(x, x);             // x^2
  Tensor loss = ops::sum(ops::mul_scalar(y, 0.5));
  tape.backward(loss);
  CHECK(x.grad()[0] == doctest::Approx(2.0));  // d(0.5 x^2)/dx = x
  CHECK(x.grad()[1] == doctest::Approx(3.0));
}

TEST_CASE("backward twice throws") {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor x = Tensor::from({1}, {1.0}, true);
  Tensor loss = ops::sum(x);
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), std::logic_error);
}

TEST_CASE("detached loss throws") {
  Tensor x = Tensor::from({1}, {1.0}, true);
  Tape inner;
  Tensor loss;
  {
    Tape::Scope scope(inner);
    loss = ops::sum(x);
  }
  Tape other;
  CHECK_THROWS_AS(other.backward(loss), std::logic_error);
}

TEST_CASE("non-scalar loss throws") {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor y = ops::relu(x);
  CHECK_THROWS_AS(tape.backward(y), std::logic_error);
}

TEST_CASE("no active tape records nothing") {
  Tensor x = Tensor::from({2}, {1.0, -1.0}, true);
  Tensor y = ops::relu(x);
  CHECK(y.impl()->tape == nullptr);
}

TEST_CASE("conv1d_grouped rejects bad shapes") {
  Tensor x = Tensor::zeros({1, 4, 8});
  Tensor w = Tensor::zeros({4, 2, 3});
  Tensor b = Tensor::zeros({4});
  CHECK_THROWS_AS(ops::conv1d_grouped(x, w, b, 3, 0), std::invalid_argument);   // 4 % 3
  CHECK_THROWS_AS(ops::conv1d_grouped(x, w, b, 4, 0), std::invalid_argument);   // Cpg mismatch
  Tensor w1 = Tensor::zeros({4, 4, 9});
  Tensor x1 = Tensor::zeros({1, 4, 8});
  CHECK_THROWS_AS(ops::conv1d_grouped(x1, w1, b, 1, 0), std::invalid_argument);  // empty output
}

TEST_CASE("conv1d_grouped matches the naive reference bit for bit") {
  CounterRng rng(7, 99);
  int cases = 0;
  for (int trial = 0; trial < 600; ++trial) {
    const int B = 1 + static_cast<int>(rng.next_below(3));
    const int G = 1 + static_cast<int>(rng.next_below(4));
    const int Cpg = 1 + static_cast<int>(rng.next_below(2));
    const int CoutPg = 1 + static_cast<int>(rng.next_below(2));
    const int Cin = G * Cpg, Cout = G * CoutPg;
    const int K = 1 + static_cast<int>(rng.next_below(5));
    const int P = static_cast<int>(rng.next_below(3));
    const int T = K + static_cast<int>(rng.next_below(8));
    if (T - K + 1 + 2 * P < 1) continue;
    Tensor x = Tensor::zeros({B, Cin, T});
    Tensor w = Tensor::zeros({Cout, Cpg, K});
    Tensor b = Tensor::zeros({Cout});
    for (double& v : x.values()) v = rng.uniform(-2.0, 2.0);
    for (double& v : w.values()) v = rng.uniform(-2.0, 2.0);
    for (double& v : b.values()) v = rng.uniform(-2.0, 2.0);
    Tensor fast = ops::conv1d_grouped(x, w, b, G, P);
    Tensor ref = conv1d_grouped_reference(x, w, b, G, P);
    REQUIRE(fast.shape() == ref.shape());
    for (std::size_t i = 0; i < fast.values().size(); ++i) {
      REQUIRE(fast.values()[i] == ref.values()[i]);
    }
    ++cases;
  }
  CHECK(cases >= 500);
}

TEST_CASE("softmax rows sum to one and shift invariance holds") {
  PrecisionScope f64(Precision::kF64);
  CounterRng rng(11, 5);
  Tensor x = Tensor::zeros({4, 7});
  for (double& v : x.values()) v = rng.uniform(-8.0, 8.0);
  Tensor y = ops::softmax_lastdim(x);
  for (int r = 0; r < 4; ++r) {
    double s = 0.0;
    for (int i = 0; i < 7; ++i) s += y.values()[static_cast<std::size_t>(r) * 7 + i];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  Tensor shifted = x.clone();
  for (double& v : shifted.values()) v += 3.25;
  Tensor y2 = ops::softmax_lastdim(shifted);
  for (std::size_t i = 0; i < y.values().size(); ++i) {
    CHECK(y.values()[i] == doctest::Approx(y2.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("cross entropy validates labels and matches -log p") {
  PrecisionScope f64(Precision::kF64);
  Tensor logits = Tensor::from({2, 3}, {1.0, 2.0, 3.0, 0.0, 0.0, 0.0});
  CHECK_THROWS_AS(ops::cross_entropy_loss(logits, {0, 3}), std::invalid_argument);
  CHECK_THROWS_AS(ops::cross_entropy_loss(logits, {-1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(ops::cross_entropy_loss(logits, {0}), std::invalid_argument);
  Tensor loss = ops::cross_entropy_loss(logits, {2, 1});
  Tensor p = ops::softmax_lastdim(logits);
  const double expect = 0.5 * (-std::log(p.values()[2]) - std::log(p.values()[4]));
  CHECK(loss.item() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("dropout identity in eval mode and at p=0") {
  CounterRng rng(3, 2);
  Tensor x = Tensor::from({4}, {1.0, -2.0, 3.5, 0.25});
  Tensor a = ops::dropout(x, 0.5, false, rng);
  Tensor b = ops::dropout(x, 0.0, true, rng);
  CHECK(a.impl() == x.impl());
  CHECK(b.impl() == x.impl());
  CHECK_THROWS_AS(ops::dropout(x, 1.0, true, rng), std::invalid_argument);
  CHECK_THROWS_AS(ops::dropout(x, -0.1, true, rng), std::invalid_argument);
}

TEST_CASE("dropout keeps expectation roughly and zeros the rest") {
  CounterRng rng(3, 2);
  Tensor x = Tensor::full({10000}, 1.0);
  Tensor y = ops::dropout(x, 0.25, true, rng);
  int kept = 0;
  for (double v : y.values()) {
    if (v != 0.0) {
      CHECK(v == doctest::Approx(1.0 / 0.75));
      ++kept;
    }
  }
  CHECK(kept > 7200);
  CHECK(kept < 7800);
}

TEST_CASE("batchnorm rejects degenerate batches, layernorm checks affine shape") {
  Tensor g = Tensor::full({3}, 1.0);
  Tensor be = Tensor::zeros({3});
  Tensor rm = Tensor::zeros({3});
  Tensor rv = Tensor::full({3}, 1.0);
  Tensor single = Tensor::zeros({1, 3});
  CHECK_THROWS_AS(ops::batchnorm1d(single, g, be, rm, rv, true), std::invalid_argument);
  Tensor ok = Tensor::zeros({1, 3});
  CHECK_NOTHROW(ops::batchnorm1d(ok, g, be, rm, rv, false));
  Tensor x = Tensor::zeros({2, 3, 4});
  Tensor bad_g = Tensor::full({5}, 1.0);
  Tensor bad_b = Tensor::zeros({5});
  CHECK_THROWS_AS(ops::layernorm_lastdim(x, bad_g, bad_b), std::invalid_argument);
}

TEST_CASE("batchnorm eval uses running stats") {
  PrecisionScope f64(Precision::kF64);
  Tensor g = Tensor::full({2}, 1.0);
  Tensor be = Tensor::zeros({2});
  Tensor rm = Tensor::from({2}, {1.0, -1.0});
  Tensor rv = Tensor::from({2}, {4.0, 0.25});
  Tensor x = Tensor::from({1, 2}, {3.0, 0.0});
  Tensor y = ops::batchnorm1d(x, g, be, rm, rv, false);
  CHECK(y.values()[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(y.values()[1] == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(rm.values()[0] == 1.0);  // eval leaves running stats alone
}

TEST_CASE("reshape rejects element count changes") {
  Tensor x = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(ops::reshape(x, {4, 2}), std::invalid_argument);
  Tensor y = ops::reshape(x, {3, 2});
  CHECK(y.shape() == Shape{3, 2});
}

TEST_CASE("gradient of a sum is linear: grad(a*f+b*g) = a*grad(f)+b*grad(g)") {
  PrecisionScope f64(Precision::kF64);
  CounterRng rng(17, 4);
  Tensor x0 = Tensor::zeros({6});
  for (double& v : x0.values()) v = rng.uniform(-1.0, 1.0);

  auto grads_of = [&](double a, double b) {
    Tensor x = x0.clone();
    x.set_requires_grad(true);
    Tape tape;
    Tape::Scope scope(tape);
    Tensor f = ops::sum(ops::gelu(x));
    Tensor g = ops::sum(ops::mul(x, x));
    Tensor loss = ops::add(ops::mul_scalar(f, a), ops::mul_scalar(g, b));
    tape.backward(loss);
    return x.grad();
  };
  auto gf = grads_of(1.0, 0.0);
  auto gg = grads_of(0.0, 1.0);
  auto gc = grads_of(2.5, -1.5);
  for (std::size_t i = 0; i < gf.size(); ++i) {
    CHECK(gc[i] == doctest::Approx(2.5 * gf[i] - 1.5 * gg[i]).epsilon(1e-10));
  }
}

TEST_CASE("grad_check visits every coordinate") {
  auto square = [](const std::vector<Tensor>& in) { return ops::mul(in[0], in[0]); };
  GradCheckResult ok = grad_check(square, {{5}}, 21);
  CHECK(ok.max_rel_error < 1e-6);
  CHECK(ok.coords_checked == 5);
}

TEST_CASE("every op passes finite difference checks") {
  struct Case {
    const char* name;
    TensorFn fn;
    std::vector<Shape> shapes;
  };
  std::vector<Case> cases;
  cases.push_back({"relu", [](const std::vector<Tensor>& in) { return ops::relu(in[0]); }, {{3, 4}}});
  cases.push_back({"gelu", [](const std::vector<Tensor>& in) { return ops::gelu(in[0]); }, {{3, 4}}});
  cases.push_back({"leaky", [](const std::vector<Tensor>& in) { return ops::leaky_relu(in[0], 0.01); }, {{3, 4}}});
  cases.push_back({"softmax", [](const std::vector<Tensor>& in) { return ops::softmax_lastdim(in[0]); }, {{3, 5}}});
  cases.push_back({"linear",
                   [](const std::vector<Tensor>& in) { return ops::linear(in[0], in[1], in[2]); },
                   {{3, 4}, {2, 4}, {2}}});
  cases.push_back({"conv",
                   [](const std::vector<Tensor>& in) {
                     return ops::conv1d_grouped(in[0], in[1], in[2], 2, 1);
                   },
                   {{2, 4, 9}, {4, 2, 3}, {4}}});
  cases.push_back({"layernorm",
                   [](const std::vector<Tensor>& in) {
                     return ops::layernorm_lastdim(in[0], in[1], in[2]);
                   },
                   {{2, 3, 4}, {3, 4}, {3, 4}}});
  cases.push_back({"avg_pool", [](const std::vector<Tensor>& in) { return ops::avg_pool_time(in[0]); }, {{2, 3, 6}}});
  cases.push_back({"concat",
                   [](const std::vector<Tensor>& in) { return ops::concat_channels(in[0], in[1]); },
                   {{2, 2, 5}, {2, 3, 5}}});
  cases.push_back({"xent",
                   [](const std::vector<Tensor>& in) {
                     return ops::cross_entropy_loss(in[0], {0, 2, 1});
                   },
                   {{3, 3}}});
  cases.push_back({"bn_train",
                   [](const std::vector<Tensor>& in) {
                     Tensor rm = Tensor::zeros({3});
                     Tensor rv = Tensor::full({3}, 1.0);
                     return ops::batchnorm1d(in[0], in[1], in[2], rm, rv, true);
                   },
                   {{4, 3, 5}, {3}, {3}}});
  for (const Case& c : cases) {
    CAPTURE(c.name);
    GradCheckResult r = grad_check(c.fn, c.shapes, 1234);
    CHECK(r.max_rel_error <= 1e-4);
  }
}
